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

#ifndef OFFSPAN_POSTLEVEL_H_
#define OFFSPAN_POSTLEVEL_H_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "offspan/corpus.h"
#include "offspan/metrics.h"
#include "offspan/model.h"

namespace offspan {

struct PostPrediction {
  std::string id;
  SpanSet spans;
  PostLabel label = PostLabel::kNotOffensive;
};

// A post is offensive iff at least one character is predicted offensive.
PostLabel ToPostLabel(const SpanSet& spans);

using SpanPredictor = std::function<SpanSet(std::string_view text)>;

struct CrossDomainReport {
  std::string dataset;
  std::string model;
  MacroF1Report scores;
  std::vector<PostPrediction> predictions;

  // {dataset, model, macro_f1, per_class:{OFF:{p,r,f1}, NOT:{...}},
  //  confusion:[[tp,fp],[fn,tn]]}
  nlohmann::json ToJson() const;
};

// Runs `predictor` on every post of a post-level dataset and scores the
// projected labels with macro F1.
CrossDomainReport EvaluateCrossDomain(const SpanPredictor& predictor,
                                      const Dataset& dataset,
                                      std::string model_name);
CrossDomainReport EvaluateCrossDomain(const Ensemble& ensemble,
                                      const Dataset& dataset,
                                      std::string model_name);

// Macro F1 of the constant classifier that always answers `label`.
MacroF1Report ConstantBaseline(const Dataset& dataset, PostLabel label);

}  // namespace offspan

#endif  // OFFSPAN_POSTLEVEL_H_
