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

#ifndef OFFSPAN_OPTIMIZER_H_
#define OFFSPAN_OPTIMIZER_H_

#include <span>
#include <vector>

#include "offspan/encoder.h"

namespace offspan::nn {

// Linear warmup to the base rate, then linear decay to zero at
// total_steps. Step indices are 0-based, so the very first update of a
// schedule with warmup runs at rate 0.
class LinearSchedule {
 public:
  LinearSchedule(long total_steps, long warmup_steps)
      : total_(total_steps), warmup_(warmup_steps) {}

  // Multiplier in [0, 1] applied to the base learning rate.
  double Factor(long step) const;

  long total_steps() const { return total_; }
  long warmup_steps() const { return warmup_; }

 private:
  long total_;
  long warmup_;
};

// Adam with decoupled weight decay. Moment buffers are indexed by position
// in the parameter list, which must stay the same across Step() calls.
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
  };

  explicit AdamW(const Options& options) : options_(options) {}

  void Step(std::span<Parameter* const> params, double lr_factor);
  long steps() const { return t_; }

 private:
  Options options_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace offspan::nn

#endif  // OFFSPAN_OPTIMIZER_H_
