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

#include "offspan/postlevel.h"

#include <map>

#include "offspan/error.h"

namespace offspan {
namespace {

nlohmann::json ClassJson(const ClassScore& s) {
  return {{"p", s.precision},
          {"r", s.recall},
          {"f1", s.f1},
          {"support", s.support}};
}

void RequirePostLevel(const Dataset& dataset) {
  if (dataset.posts.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "dataset '" + dataset.name + "' is empty");
  }
  if (dataset.granularity != Granularity::kPost) {
    throw Error(ErrorCode::kInvalidArgument,
                "dataset '" + dataset.name + "' is not post-level");
  }
}

}  // namespace

PostLabel ToPostLabel(const SpanSet& spans) {
  return spans.empty() ? PostLabel::kNotOffensive : PostLabel::kOffensive;
}

nlohmann::json CrossDomainReport::ToJson() const {
  const Confusion& c = scores.confusion;
  return {{"dataset", dataset},
          {"model", model},
          {"macro_f1", scores.macro_f1},
          {"per_class",
           {{"OFF", ClassJson(scores.offensive)},
            {"NOT", ClassJson(scores.not_offensive)}}},
          {"confusion", {{c.tp, c.fp}, {c.fn, c.tn}}}};
}

CrossDomainReport EvaluateCrossDomain(const SpanPredictor& predictor,
                                      const Dataset& dataset,
                                      std::string model_name) {
  RequirePostLevel(dataset);
  CrossDomainReport report;
  report.dataset = dataset.name;
  report.model = std::move(model_name);
  std::map<std::string, PostLabel> labels;
  for (const Post& post : dataset.posts) {
    PostPrediction p{post.id, predictor(post.text), PostLabel::kNotOffensive};
    p.label = ToPostLabel(p.spans);
    labels[post.id] = p.label;
    report.predictions.push_back(std::move(p));
  }
  report.scores = MacroF1(labels, dataset);
  return report;
}

CrossDomainReport EvaluateCrossDomain(const Ensemble& ensemble,
                                      const Dataset& dataset,
                                      std::string model_name) {
  return EvaluateCrossDomain(
      [&ensemble](std::string_view text) { return ensemble.Predict(text); },
      dataset, std::move(model_name));
}

MacroF1Report ConstantBaseline(const Dataset& dataset, PostLabel label) {
  RequirePostLevel(dataset);
  std::map<std::string, PostLabel> labels;
  for (const Post& post : dataset.posts) labels[post.id] = label;
  return MacroF1(labels, dataset);
}

}  // namespace offspan
