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

#ifndef OFFSPAN_METRICS_H_
#define OFFSPAN_METRICS_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "offspan/corpus.h"

namespace offspan {

struct SpanScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Character-offset F1 for one post:
//   P = |pred ∩ gold| / |pred|,  R = |pred ∩ gold| / |gold|,
//   F1 = 2PR / (P + R).
// Empty sets: both empty scores 1 (P = R = F1 = 1); exactly one empty
// scores 0. This matches the shared-task scorer and moves corpus means, so
// keep it in mind when comparing against other scorers.
SpanScore SpanF1(const SpanSet& pred, const SpanSet& gold);

struct EvalReport {
  std::vector<std::pair<std::string, SpanScore>> per_post;
  double mean_f1 = 0.0;
  std::size_t n_posts = 0;
};

// Unweighted mean of per-post F1 over every post of `gold`. Throws
// Error(kValidation) listing ids absent from `predictions`. Extra prediction
// ids are ignored.
EvalReport EvaluateSpans(const std::map<std::string, SpanSet>& predictions,
                         const Dataset& gold);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Binary confusion counts with OFF as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

struct MacroF1Report {
  double macro_f1 = 0.0;
  ClassScore offensive;
  ClassScore not_offensive;
  Confusion confusion;
};

// Per-class P/R/F1 from a confusion matrix. A zero denominator yields 0.
MacroF1Report MacroF1FromConfusion(const Confusion& confusion);

// Unweighted mean of the OFF and NOT F1 scores. Throws Error(kValidation)
// listing ids absent from `predictions`.
MacroF1Report MacroF1(const std::map<std::string, PostLabel>& predictions,
                      const Dataset& gold);

// Round half to even at `digits` decimals (report formatting).
double RoundHalfEven(double value, int digits = 4);

}  // namespace offspan

#endif  // OFFSPAN_METRICS_H_
