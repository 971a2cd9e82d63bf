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

#ifndef OFFSPAN_BENCH_H_
#define OFFSPAN_BENCH_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "offspan/corpus.h"

namespace offspan {

struct BenchResult {
  std::string model_id;
  std::string device;
  std::size_t n_texts = 0;
  std::size_t warmup_runs = 0;  // excluded from every figure below
  double total_seconds = 0.0;
  double mean_seconds = 0.0;
  double p50_seconds = 0.0;
  double p95_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double timer_resolution_seconds = 0.0;
  std::vector<double> per_text_seconds;
  std::vector<SpanSet> predictions;

  // Total scaled to a batch of 100 texts.
  double seconds_per_100() const;
  nlohmann::json ToJson() const;
};

using BenchPredictor = std::function<SpanSet(std::string_view text)>;

// Times `predict` on each text, one call per text. The first `warmup`
// calls (cycling through the texts) are run but not timed.
BenchResult RunBenchmark(const BenchPredictor& predict,
                         std::span<const std::string> texts,
                         std::size_t warmup = 2, std::string model_id = "",
                         std::string device = "cpu");

// Linear-interpolation percentile of `values`, q in [0, 100].
double Percentile(std::vector<double> values, double q);

// Smallest observable tick of the steady clock, in seconds.
double SteadyClockResolution();

// Built-in sample posts used when no benchmark corpus is given.
std::vector<std::string> DefaultBenchTexts();

// Plain-text table: model x device -> seconds per 100 texts.
std::string FormatBenchTable(std::span<const BenchResult> results);

}  // namespace offspan

#endif  // OFFSPAN_BENCH_H_
