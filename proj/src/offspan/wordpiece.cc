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

#include "offspan/wordpiece.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "offspan/error.h"
#include "offspan/unicode.h"

namespace offspan {
namespace {

constexpr std::size_t kMaxWordChars = 100;
constexpr std::size_t kMaxAffixChars = 6;

const char* const kSpecialPieces[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                      "[MASK]"};

// Splits a surface token into words (alphanumeric runs) and single
// punctuation characters.
std::vector<std::u32string> PreSplit(std::u32string_view token) {
  std::vector<std::u32string> parts;
  std::u32string current;
  for (char32_t c : token) {
    if (IsAlnum(c)) {
      current.push_back(c);
      continue;
    }
    if (!current.empty()) parts.push_back(std::move(current));
    current.clear();
    if (!IsSpace(c)) parts.push_back(std::u32string(1, c));
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

}  // namespace

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> pieces,
                                       bool lower_case)
    : pieces_(std::move(pieces)), lower_case_(lower_case) {
  if (pieces_.size() < kNumSpecial) {
    throw Error(ErrorCode::kParse, "vocabulary lacks special tokens");
  }
  for (int i = 0; i < kNumSpecial; ++i) {
    if (pieces_[i] != kSpecialPieces[i]) {
      throw Error(ErrorCode::kParse, std::string("vocabulary entry ") +
                                         std::to_string(i) + " must be " +
                                         kSpecialPieces[i]);
    }
  }
  for (int i = 0; i < static_cast<int>(pieces_.size()); ++i) {
    if (!ids_.emplace(pieces_[i], i).second) {
      throw Error(ErrorCode::kParse,
                  "duplicate vocabulary entry '" + pieces_[i] + "'");
    }
  }
}

WordPieceTokenizer WordPieceTokenizer::Build(std::span<const std::string> texts,
                                             int vocab_size, bool lower_case) {
  if (vocab_size <= kNumSpecial) {
    throw Error(ErrorCode::kInvalidArgument, "vocab_size too small");
  }
  std::map<std::u32string, long> word_counts;
  for (const auto& text : texts) {
    std::u32string chars = DecodeUtf8(text);
    if (lower_case) chars = FoldCase(chars);
    std::size_t i = 0;
    while (i < chars.size()) {
      if (IsSpace(chars[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < chars.size() && !IsSpace(chars[j])) ++j;
      for (auto& part :
           PreSplit(std::u32string_view(chars).substr(i, j - i))) {
        ++word_counts[part];
      }
      i = j;
    }
  }

  std::map<std::string, long> char_counts;
  std::map<std::string, long> candidates;
  for (const auto& [word, count] : word_counts) {
    for (std::size_t k = 0; k < word.size(); ++k) {
      const std::string c = EncodeUtf8(word.substr(k, 1));
      char_counts[k == 0 ? c : "##" + c] += count;
    }
    if (word.size() < 2 || word.size() > kMaxWordChars) continue;
    // Whole words are worth more than fragments of the same frequency.
    candidates[EncodeUtf8(word)] += 2 * count;
    const std::size_t max_affix = std::min(kMaxAffixChars, word.size() - 1);
    for (std::size_t len = 2; len <= max_affix; ++len) {
      candidates[EncodeUtf8(word.substr(0, len))] += count;
      candidates["##" + EncodeUtf8(word.substr(word.size() - len))] += count;
    }
  }

  auto by_count = [](const std::map<std::string, long>& counts) {
    std::vector<std::pair<std::string, long>> sorted(counts.begin(),
                                                     counts.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) {
                       return a.second > b.second;
                     });
    return sorted;
  };

  std::vector<std::string> pieces(std::begin(kSpecialPieces),
                                  std::end(kSpecialPieces));
  for (const auto& [piece, count] : by_count(char_counts)) {
    if (static_cast<int>(pieces.size()) >= vocab_size) break;
    pieces.push_back(piece);
  }
  std::unordered_map<std::string, int> seen;
  for (const auto& p : pieces) seen.emplace(p, 0);
  for (const auto& [piece, count] : by_count(candidates)) {
    if (static_cast<int>(pieces.size()) >= vocab_size) break;
    if (seen.emplace(piece, 0).second) pieces.push_back(piece);
  }
  return WordPieceTokenizer(std::move(pieces), lower_case);
}

WordPieceTokenizer WordPieceTokenizer::Load(
    const std::filesystem::path& vocab_path, bool lower_case) {
  std::ifstream in(vocab_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + vocab_path.string());
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  return WordPieceTokenizer(std::move(pieces), lower_case);
}

void WordPieceTokenizer::Save(const std::filesystem::path& vocab_path) const {
  std::ofstream out(vocab_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + vocab_path.string());
  for (const auto& piece : pieces_) out << piece << '\n';
}

int WordPieceTokenizer::Id(std::string_view piece) const {
  const auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? kUnk : it->second;
}

void WordPieceTokenizer::EncodeWord(std::u32string_view word,
                                    std::vector<int>* out) const {
  if (word.size() > kMaxWordChars) {
    out->push_back(kUnk);
    return;
  }
  std::vector<int> ids;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string piece = EncodeUtf8(word.substr(start, end - start));
      if (start > 0) piece = "##" + piece;
      const auto it = ids_.find(piece);
      if (it != ids_.end()) {
        found = it->second;
        break;
      }
      --end;
    }
    if (found < 0) {
      out->push_back(kUnk);
      return;
    }
    ids.push_back(found);
    start = end;
  }
  out->insert(out->end(), ids.begin(), ids.end());
}

std::vector<int> WordPieceTokenizer::Encode(std::string_view surface) const {
  std::u32string chars = DecodeUtf8(surface);
  if (lower_case_) chars = FoldCase(chars);
  std::vector<int> ids;
  for (const auto& part : PreSplit(chars)) EncodeWord(part, &ids);
  if (ids.empty() && !surface.empty()) ids.push_back(kUnk);
  return ids;
}

}  // namespace offspan
