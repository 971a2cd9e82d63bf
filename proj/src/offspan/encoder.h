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

#ifndef OFFSPAN_ENCODER_H_
#define OFFSPAN_ENCODER_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "offspan/rng.h"

// A post-LayerNorm transformer encoder (BERT layout) with explicit backward
// passes. Sequences are processed one at a time, so no padding mask exists;
// mini-batches accumulate gradients across calls.

namespace offspan::nn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng,
         double stddev = 0.02);

  Matrix Forward(const Matrix& x) const;
  // Accumulates weight/bias gradients and returns dL/dx.
  Matrix Backward(const Matrix& x, const Matrix& dy);
  void Collect(std::vector<Parameter*>* params);

  int in() const { return static_cast<int>(weight.value.rows()); }
  int out() const { return static_cast<int>(weight.value.cols()); }

  Parameter weight;  // [in x out]
  Parameter bias;    // [1 x out]
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim, double eps);

  Matrix Forward(const Matrix& x, Cache* cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);
  void Collect(std::vector<Parameter*>* params);

  Parameter gamma;
  Parameter beta;
  double eps = 1e-5;
};

struct EncoderConfig {
  int vocab_size = 0;
  int hidden_size = 64;
  int num_layers = 2;
  int num_heads = 4;
  int intermediate_size = 128;
  int max_positions = 160;
  double dropout = 0.1;
  double layer_norm_eps = 1e-5;

  // "tiny", "base" or "large"; vocab_size is left for the caller.
  static EncoderConfig Preset(const std::string& name);
  void Validate() const;
};

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head [T x T]
  Matrix context;
  Matrix attn_mask;  // dropout mask, empty when inactive
  LayerNorm::Cache ln1;
  Matrix h1;
  Matrix ff_pre;
  Matrix ff_act;
  Matrix ff_mask;
  LayerNorm::Cache ln2;
};

struct EncoderState {
  std::vector<int> ids;
  LayerNorm::Cache embedding_ln;
  Matrix embedding_mask;
  std::vector<LayerCache> layers;
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  // Hidden states [ids.size() x hidden]. Dropout is active iff
  // dropout_rng is non-null.
  Matrix Forward(std::span<const int> ids, EncoderState* state,
                 Rng* dropout_rng) const;
  // Accumulates parameter gradients from dL/dhidden.
  void Backward(const Matrix& d_hidden, const EncoderState& state);

  std::vector<Parameter*> Parameters();
  std::vector<const Parameter*> Parameters() const;
  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    Linear query, key, value, attn_out;
    LayerNorm ln1;
    Linear ff_in, ff_out;
    LayerNorm ln2;
  };

  Matrix LayerForward(const Layer& layer, const Matrix& x, LayerCache* cache,
                      Rng* dropout_rng) const;
  Matrix LayerBackward(Layer& layer, const Matrix& dy,
                       const LayerCache& cache);

  EncoderConfig config_;
  Parameter token_embedding;     // [vocab x hidden]
  Parameter position_embedding;  // [positions x hidden]
  LayerNorm embedding_ln_;
  std::vector<Layer> layers_;
};

// Row-wise softmax.
Matrix Softmax(const Matrix& logits);

// Mean cross-entropy over rows whose target is >= 0, scaled by 1/normalizer
// instead of the row count so that a mini-batch can share one normalizer.
// Writes dL/dlogits into *grad (same shape as logits) when non-null.
double CrossEntropy(const Matrix& logits, std::span<const int> targets,
                    double normalizer, Matrix* grad);

// Global-norm gradient clipping; returns the pre-clip norm.
double ClipGradNorm(std::span<Parameter* const> params, double max_norm);

}  // namespace offspan::nn

#endif  // OFFSPAN_ENCODER_H_
