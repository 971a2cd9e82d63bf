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

#include "offspan/alignment.h"

#include "offspan/error.h"
#include "offspan/unicode.h"

namespace offspan {

LabeledSequence TokenizeWithOffsets(std::string_view text,
                                    Pretokenization mode) {
  LabeledSequence sequence;
  sequence.text = std::string(text);
  const std::u32string chars = DecodeUtf8(text);
  const std::u32string_view view(chars);
  auto emit = [&](Offset start, Offset end) {
    if (start < end) {
      sequence.tokens.push_back(
          {EncodeUtf8(view.substr(start, end - start)), start, end,
           std::nullopt});
    }
  };
  const auto n = static_cast<Offset>(chars.size());
  Offset i = 0;
  while (i < n) {
    if (IsSpace(chars[i])) {
      ++i;
      continue;
    }
    const Offset start = i;
    while (i < n && !IsSpace(chars[i])) ++i;
    if (mode == Pretokenization::kWhitespace) {
      emit(start, i);
      continue;
    }
    Offset core_start = start;
    while (core_start < i && IsPunct(chars[core_start])) ++core_start;
    if (core_start == i) {  // nothing but punctuation
      emit(start, i);
      continue;
    }
    Offset core_end = i;
    while (IsPunct(chars[core_end - 1])) --core_end;
    emit(start, core_start);
    emit(core_start, core_end);
    emit(core_end, i);
  }
  return sequence;
}

LabeledSequence SpansToLabels(LabeledSequence sequence, const SpanSet& gold) {
  const std::size_t length = CodePointLength(sequence.text);
  if (!gold.FitsWithin(length)) {
    throw Error(ErrorCode::kValidation,
                "span offset " + std::to_string(gold.offsets().back()) +
                    " is outside text of length " + std::to_string(length));
  }
  const auto& offsets = gold.offsets();
  auto cursor = offsets.begin();
  for (AlignedToken& token : sequence.tokens) {
    // Tokens are ordered, so the cursor only moves forward.
    while (cursor != offsets.end() && *cursor < token.start) ++cursor;
    const bool hit = cursor != offsets.end() && *cursor < token.end;
    token.label = hit ? TokenLabel::kToxic : TokenLabel::kNot;
  }
  return sequence;
}

SpanSet LabelsToSpans(const LabeledSequence& sequence, bool merge_adjacent) {
  std::vector<CharRange> ranges;
  bool previous_toxic = false;
  for (const AlignedToken& token : sequence.tokens) {
    if (!token.label) {
      throw Error(ErrorCode::kInvalidArgument,
                  "token '" + token.surface + "' at " +
                      std::to_string(token.start) + " has no label");
    }
    const bool toxic = *token.label == TokenLabel::kToxic;
    if (toxic) {
      if (merge_adjacent && previous_toxic) {
        ranges.back().end = token.end;
      } else {
        ranges.push_back({token.start, token.end});
      }
    }
    previous_toxic = toxic;
  }
  return SpanSet::FromRanges(ranges);
}

}  // namespace offspan
