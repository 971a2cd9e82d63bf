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

#include "offspan/metrics.h"

#include <cfenv>
#include <cmath>

#include "offspan/error.h"

namespace offspan {
namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double Harmonic(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

template <typename Map>
void RequireCoverage(const Map& predictions, const Dataset& gold) {
  std::vector<std::string> missing;
  for (const Post& post : gold.posts) {
    if (!predictions.count(post.id)) missing.push_back(post.id);
  }
  if (missing.empty()) return;
  std::string message = "missing predictions for " +
                        std::to_string(missing.size()) + " post(s):";
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
    message += " " + missing[i];
  }
  if (missing.size() > 20) message += " ...";
  throw Error(ErrorCode::kValidation, message);
}

}  // namespace

SpanScore SpanF1(const SpanSet& pred, const SpanSet& gold) {
  if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};
  if (pred.empty() || gold.empty()) return {0.0, 0.0, 0.0};
  const std::size_t overlap = pred.IntersectionSize(gold);
  SpanScore score;
  score.precision = Ratio(overlap, pred.size());
  score.recall = Ratio(overlap, gold.size());
  score.f1 = Harmonic(score.precision, score.recall);
  return score;
}

EvalReport EvaluateSpans(const std::map<std::string, SpanSet>& predictions,
                         const Dataset& gold) {
  RequireCoverage(predictions, gold);
  EvalReport report;
  double sum = 0.0;
  for (const Post& post : gold.posts) {
    const SpanScore score =
        SpanF1(predictions.at(post.id), post.gold_spans.value_or(SpanSet{}));
    sum += score.f1;
    report.per_post.emplace_back(post.id, score);
  }
  report.n_posts = gold.posts.size();
  report.mean_f1 = report.n_posts ? sum / report.n_posts : 0.0;
  return report;
}

MacroF1Report MacroF1FromConfusion(const Confusion& c) {
  MacroF1Report report;
  report.confusion = c;
  auto& off = report.offensive;
  off.precision = Ratio(c.tp, c.tp + c.fp);
  off.recall = Ratio(c.tp, c.tp + c.fn);
  off.f1 = Harmonic(off.precision, off.recall);
  off.support = c.tp + c.fn;
  auto& no = report.not_offensive;
  no.precision = Ratio(c.tn, c.tn + c.fn);
  no.recall = Ratio(c.tn, c.tn + c.fp);
  no.f1 = Harmonic(no.precision, no.recall);
  no.support = c.tn + c.fp;
  report.macro_f1 = (off.f1 + no.f1) / 2.0;
  return report;
}

MacroF1Report MacroF1(const std::map<std::string, PostLabel>& predictions,
                      const Dataset& gold) {
  RequireCoverage(predictions, gold);
  Confusion c;
  for (const Post& post : gold.posts) {
    if (!post.label) {
      throw Error(ErrorCode::kValidation,
                  "post '" + post.id + "' has no gold label");
    }
    const bool predicted_off =
        predictions.at(post.id) == PostLabel::kOffensive;
    const bool gold_off = *post.label == PostLabel::kOffensive;
    if (predicted_off && gold_off) ++c.tp;
    if (predicted_off && !gold_off) ++c.fp;
    if (!predicted_off && gold_off) ++c.fn;
    if (!predicted_off && !gold_off) ++c.tn;
  }
  return MacroF1FromConfusion(c);
}

double RoundHalfEven(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double rounded = std::nearbyint(value * scale) / scale;
  std::fesetround(saved);
  return rounded;
}

}  // namespace offspan
