// Copyright 2026 The offspan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OFFSPAN_LEXICON_H_
#define OFFSPAN_LEXICON_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "offspan/corpus.h"

namespace offspan {

// Set of lowercase single-word entries for the word-match baseline.
class Lexicon {
 public:
  // Union of one-entry-per-line UTF-8 files. Blank lines and lines starting
  // with '#' are skipped; entries containing whitespace are dropped with a
  // warning. Throws Error(kValidation) if nothing remains.
  static Lexicon Load(std::span<const std::filesystem::path> paths);
  static Lexicon FromWords(std::span<const std::string> words,
                           std::string source = "inline");

  bool Contains(std::string_view folded_word) const {
    return entries_.count(std::string(folded_word)) > 0;
  }
  std::size_t size() const { return entries_.size(); }
  const std::string& source() const { return source_; }

 private:
  Lexicon() = default;
  // Returns false if the entry was rejected.
  bool Add(std::string_view raw);

  std::unordered_set<std::string> entries_;
  std::string source_;
};

// Marks every word whose case-folded form is a lexicon entry. A word is a
// maximal run of letters, digits and apostrophes ("you're" is one word),
// with leading/trailing apostrophes trimmed. Exact match only.
SpanSet LexiconDetect(std::string_view text, const Lexicon& lexicon);

}  // namespace offspan

#endif  // OFFSPAN_LEXICON_H_
