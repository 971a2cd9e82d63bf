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

#include "offspan/lexicon.h"

#include <fstream>

#include "spdlog/spdlog.h"

#include "offspan/error.h"
#include "offspan/unicode.h"

namespace offspan {

bool Lexicon::Add(std::string_view raw) {
  std::u32string word = DecodeUtf8(raw);
  std::size_t begin = 0;
  std::size_t end = word.size();
  while (begin < end && IsSpace(word[begin])) ++begin;
  while (end > begin && IsSpace(word[end - 1])) --end;
  word = word.substr(begin, end - begin);
  if (word.empty() || word.front() == U'#') return true;
  for (char32_t c : word) {
    if (IsSpace(c)) return false;
  }
  entries_.insert(EncodeUtf8(FoldCase(word)));
  return true;
}

Lexicon Lexicon::Load(std::span<const std::filesystem::path> paths) {
  Lexicon lexicon;
  std::size_t rejected = 0;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open lexicon " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (!lexicon.Add(line)) {
        ++rejected;
        spdlog::debug("lexicon {}: dropping multi-word entry '{}'",
                      path.string(), line);
      }
    }
    if (!lexicon.source_.empty()) lexicon.source_ += ";";
    lexicon.source_ += path.string();
  }
  if (rejected) {
    spdlog::warn("lexicon: dropped {} multi-word entries", rejected);
  }
  if (lexicon.entries_.empty()) {
    throw Error(ErrorCode::kValidation, "lexicon is empty");
  }
  return lexicon;
}

Lexicon Lexicon::FromWords(std::span<const std::string> words,
                           std::string source) {
  Lexicon lexicon;
  lexicon.source_ = std::move(source);
  for (const auto& word : words) {
    if (!lexicon.Add(word)) {
      throw Error(ErrorCode::kValidation,
                  "multi-word lexicon entry '" + word + "'");
    }
  }
  if (lexicon.entries_.empty()) {
    throw Error(ErrorCode::kValidation, "lexicon is empty");
  }
  return lexicon;
}

SpanSet LexiconDetect(std::string_view text, const Lexicon& lexicon) {
  const std::u32string chars = DecodeUtf8(text);
  const auto n = static_cast<Offset>(chars.size());
  auto is_word_char = [&](char32_t c) { return IsAlnum(c) || IsApostrophe(c); };
  std::vector<CharRange> hits;
  Offset i = 0;
  while (i < n) {
    if (!is_word_char(chars[i])) {
      ++i;
      continue;
    }
    Offset start = i;
    while (i < n && is_word_char(chars[i])) ++i;
    Offset end = i;
    while (start < end && IsApostrophe(chars[start])) ++start;
    while (end > start && IsApostrophe(chars[end - 1])) --end;
    if (start == end) continue;
    const std::u32string folded =
        FoldCase(std::u32string_view(chars).substr(start, end - start));
    if (lexicon.Contains(EncodeUtf8(folded))) hits.push_back({start, end});
  }
  return SpanSet::FromRanges(hits);
}

}  // namespace offspan
