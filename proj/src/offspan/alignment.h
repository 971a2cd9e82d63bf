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

#ifndef OFFSPAN_ALIGNMENT_H_
#define OFFSPAN_ALIGNMENT_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "offspan/corpus.h"

namespace offspan {

enum class TokenLabel { kToxic, kNot };

// A surface token. start/end are code-point offsets
// into the owning text, end exclusive.
struct AlignedToken {
  std::string surface;
  Offset start = 0;
  Offset end = 0;
  std::optional<TokenLabel> label;
};

struct LabeledSequence {
  std::string text;
  std::vector<AlignedToken> tokens;
};

enum class Pretokenization {
  // Whitespace-delimited chunks; "silly." is one token.
  kWhitespace,
  // Whitespace chunks with leading and trailing punctuation runs split off:
  // "silly." -> "silly" "."; inner punctuation stays ("You're", "f*ck").
  kEdgePunctuation,
};

// Surface tokens covering every non-whitespace character exactly once.
// Subword splitting happens at the model boundary.
LabeledSequence TokenizeWithOffsets(
    std::string_view text,
    Pretokenization mode = Pretokenization::kEdgePunctuation);

// A token is TOXIC iff at least one of its characters is in `gold`.
// Throws Error(kValidation) if `gold` does not fit the text.
LabeledSequence SpansToLabels(LabeledSequence sequence, const SpanSet& gold);

// Union of the character ranges of TOXIC tokens. With merge_adjacent the
// whitespace between two consecutive TOXIC tokens is included as well.
// Throws Error(kInvalidArgument) if any token is unlabeled.
SpanSet LabelsToSpans(const LabeledSequence& sequence,
                      bool merge_adjacent = false);

}  // namespace offspan

#endif  // OFFSPAN_ALIGNMENT_H_
