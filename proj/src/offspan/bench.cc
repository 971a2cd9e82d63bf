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

#include "offspan/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "spdlog/fmt/fmt.h"

#include "offspan/error.h"

namespace offspan {
namespace {

using Clock = std::chrono::steady_clock;
static_assert(Clock::is_steady);

double Seconds(Clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

}  // namespace

double BenchResult::seconds_per_100() const {
  return n_texts ? total_seconds * 100.0 / static_cast<double>(n_texts) : 0.0;
}

nlohmann::json BenchResult::ToJson() const {
  return {{"model", model_id},
          {"device", device},
          {"n_texts", n_texts},
          {"warmup_runs", warmup_runs},
          {"total_seconds", total_seconds},
          {"seconds_per_100_texts", seconds_per_100()},
          {"per_text_seconds",
           {{"mean", mean_seconds},
            {"p50", p50_seconds},
            {"p95", p95_seconds},
            {"min", min_seconds},
            {"max", max_seconds}}},
          {"timer_resolution_seconds", timer_resolution_seconds}};
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "percentile of an empty list");
  }
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 *
                      static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return values[lo] + (values[hi] - values[lo]) * (rank - lo);
}

double SteadyClockResolution() {
  auto best = Clock::duration::max();
  for (int i = 0; i < 16; ++i) {
    const auto start = Clock::now();
    auto now = start;
    while (now == start) now = Clock::now();
    best = std::min(best, now - start);
  }
  return Seconds(best);
}

BenchResult RunBenchmark(const BenchPredictor& predict,
                         std::span<const std::string> texts,
                         std::size_t warmup, std::string model_id,
                         std::string device) {
  if (texts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "benchmark needs >= 1 text");
  }
  BenchResult result;
  result.model_id = std::move(model_id);
  result.device = std::move(device);
  result.n_texts = texts.size();
  result.warmup_runs = warmup;
  result.timer_resolution_seconds = SteadyClockResolution();
  for (std::size_t i = 0; i < warmup; ++i) predict(texts[i % texts.size()]);

  result.per_text_seconds.reserve(texts.size());
  result.predictions.reserve(texts.size());
  for (const std::string& text : texts) {
    const auto start = Clock::now();
    SpanSet spans = predict(text);
    const auto stop = Clock::now();
    result.per_text_seconds.push_back(Seconds(stop - start));
    result.predictions.push_back(std::move(spans));
  }
  const auto& t = result.per_text_seconds;
  result.total_seconds = std::accumulate(t.begin(), t.end(), 0.0);
  result.mean_seconds = result.total_seconds / static_cast<double>(t.size());
  result.p50_seconds = Percentile(t, 50.0);
  result.p95_seconds = Percentile(t, 95.0);
  result.min_seconds = *std::min_element(t.begin(), t.end());
  result.max_seconds = *std::max_element(t.begin(), t.end());
  return result;
}

std::vector<std::string> DefaultBenchTexts() {
  return {
      "So is his mother. They are silver spoon parasites.",
      "You're just silly.",
      "This is fucking crazy!!",
      "Thank you for the thoughtful reply, I learned something today.",
      "What a stupid idea, only an idiot would vote for that.",
      "The council meeting has been moved to Thursday evening.",
      "Shut up, you pathetic loser.",
      "I disagree with the article but it raises fair points.",
      "These clowns have no idea what they are doing.",
      "Great photo, the light on the water is beautiful.",
  };
}

std::string FormatBenchTable(std::span<const BenchResult> results) {
  std::vector<std::string> devices;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const BenchResult& r : results) {
    if (std::find(devices.begin(), devices.end(), r.device) == devices.end()) {
      devices.push_back(r.device);
    }
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) {
      models.push_back(r.model_id);
    }
    cells[{r.model_id, r.device}] = r.seconds_per_100();
  }
  std::size_t width = 5;
  for (const auto& m : models) width = std::max(width, m.size());
  std::ostringstream out;
  out << fmt::format("{:<{}}", "Model", width);
  for (const auto& d : devices) out << fmt::format("  {:>12}", d);
  out << "\n";
  for (const auto& m : models) {
    out << fmt::format("{:<{}}", m, width);
    for (const auto& d : devices) {
      auto it = cells.find({m, d});
      out << (it == cells.end() ? fmt::format("  {:>12}", "-")
                                : fmt::format("  {:>12.2f}", it->second));
    }
    out << "\n";
  }
  out << "(seconds per 100 texts, batch size 1)\n";
  return out.str();
}

}  // namespace offspan
