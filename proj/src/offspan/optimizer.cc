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

#include "offspan/optimizer.h"

#include <algorithm>
#include <cmath>

namespace offspan::nn {

double LinearSchedule::Factor(long step) const {
  if (step < warmup_) {
    return static_cast<double>(step) / static_cast<double>(std::max(1L, warmup_));
  }
  return std::max(0.0, static_cast<double>(total_ - step) /
                           static_cast<double>(std::max(1L, total_ - warmup_)));
}

void AdamW::Step(std::span<Parameter* const> params, double lr_factor) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double lr = options_.learning_rate * lr_factor;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const double step_size = lr * std::sqrt(bias2) / bias1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
    v_[i] = options_.beta2 * v_[i] +
            (1.0 - options_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        step_size * m_[i].array() / (v_[i].array().sqrt() + options_.epsilon);
    if (options_.weight_decay > 0.0) {
      p.value *= 1.0 - lr * options_.weight_decay;
    }
  }
}

}  // namespace offspan::nn
