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

#ifndef OFFSPAN_WORDPIECE_H_
#define OFFSPAN_WORDPIECE_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace offspan {

// Greedy longest-match-first subword tokenizer with "##" continuation
// pieces. Ids 0..4 are reserved for the special tokens below.
class WordPieceTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecial = 5;

  WordPieceTokenizer() = default;
  // `pieces` must start with the special tokens in id order.
  WordPieceTokenizer(std::vector<std::string> pieces, bool lower_case);

  // Learns a vocabulary of at most `vocab_size` pieces from `texts`: every
  // observed character (initial and continuation form), then frequent words,
  // prefixes and suffixes.
  static WordPieceTokenizer Build(std::span<const std::string> texts,
                                  int vocab_size, bool lower_case);

  // vocab.txt: one piece per line, line number = id.
  static WordPieceTokenizer Load(const std::filesystem::path& vocab_path,
                                 bool lower_case);
  void Save(const std::filesystem::path& vocab_path) const;

  // Subword ids for one surface token. Punctuation characters are split off
  // into their own pieces first. Never empty for a non-empty token.
  std::vector<int> Encode(std::string_view surface) const;

  int size() const { return static_cast<int>(pieces_.size()); }
  bool lower_case() const { return lower_case_; }
  const std::string& Piece(int id) const { return pieces_.at(id); }
  int Id(std::string_view piece) const;  // kUnk when absent

 private:
  void EncodeWord(std::u32string_view word, std::vector<int>* out) const;

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
  bool lower_case_ = false;
};

}  // namespace offspan

#endif  // OFFSPAN_WORDPIECE_H_
