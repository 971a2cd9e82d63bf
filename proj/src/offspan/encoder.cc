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

#include "offspan/encoder.h"

#include <cmath>

#include "offspan/error.h"

namespace offspan::nn {
namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

Matrix Gelu(const Matrix& x) {
  return x.unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Matrix GeluGrad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
           v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
  });
}

Parameter MakeParameter(const std::string& name, int rows, int cols) {
  Parameter p{name, Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
  return p;
}

void FillNormal(Parameter* p, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < p->value.size(); ++i) {
    p->value.data()[i] = stddev * StandardNormal(rng);
  }
}

// Inverted-dropout mask, or an empty matrix when dropout is inactive.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                   Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return Matrix();
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = UniformUnit(*rng) < rate ? 0.0 : keep_scale;
  }
  return mask;
}

void ApplyMask(const Matrix& mask, Matrix* x) {
  if (mask.size() != 0) x->array() *= mask.array();
}

}  // namespace

Linear::Linear(const std::string& name, int in, int out, Rng& rng,
               double stddev)
    : weight(MakeParameter(name + ".weight", in, out)),
      bias(MakeParameter(name + ".bias", 1, out)) {
  FillNormal(&weight, rng, stddev);
}

Matrix Linear::Forward(const Matrix& x) const {
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::Backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += x.transpose() * dy;
  bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value.transpose();
}

void Linear::Collect(std::vector<Parameter*>* params) {
  params->push_back(&weight);
  params->push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, int dim, double eps_in)
    : gamma(MakeParameter(name + ".gamma", 1, dim)),
      beta(MakeParameter(name + ".beta", 1, dim)),
      eps(eps_in) {
  gamma.value.setOnes();
}

Matrix LayerNorm::Forward(const Matrix& x, Cache* cache) const {
  const Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  cache->inv_std =
      (centered.array().square().rowwise().mean() + eps).rsqrt().matrix();
  cache->normalized = centered.array().colwise() * cache->inv_std.array();
  Matrix y = cache->normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Matrix LayerNorm::Backward(const Matrix& dy, const Cache& cache) {
  gamma.grad.row(0) +=
      (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  const Eigen::VectorXd mean_dxhat = dxhat.rowwise().mean();
  const Eigen::VectorXd mean_dxhat_xhat =
      (dxhat.array() * cache.normalized.array()).rowwise().mean();
  Matrix dx = dxhat.colwise() - mean_dxhat;
  dx -= (cache.normalized.array().colwise() * mean_dxhat_xhat.array())
            .matrix();
  dx.array().colwise() *= cache.inv_std.array();
  return dx;
}

void LayerNorm::Collect(std::vector<Parameter*>* params) {
  params->push_back(&gamma);
  params->push_back(&beta);
}

EncoderConfig EncoderConfig::Preset(const std::string& name) {
  EncoderConfig c;
  if (name == "tiny") {
    c.hidden_size = 32;
    c.num_layers = 1;
    c.num_heads = 2;
    c.intermediate_size = 64;
  } else if (name == "small") {
    c.hidden_size = 64;
    c.num_layers = 2;
    c.num_heads = 4;
    c.intermediate_size = 128;
  } else if (name == "base") {
    c.hidden_size = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.intermediate_size = 3072;
    c.max_positions = 512;
  } else if (name == "large") {
    c.hidden_size = 1024;
    c.num_layers = 24;
    c.num_heads = 16;
    c.intermediate_size = 4096;
    c.max_positions = 512;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown encoder preset '" + name +
                    "' (expected tiny, small, base or large)");
  }
  return c;
}

void EncoderConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "encoder config: " + what);
  };
  if (vocab_size <= 0) fail("vocab_size must be positive");
  if (hidden_size <= 0 || num_layers < 0 || num_heads <= 0 ||
      intermediate_size <= 0 || max_positions <= 0) {
    fail("dimensions must be positive");
  }
  if (hidden_size % num_heads != 0) {
    fail("hidden_size must be divisible by num_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must lie in [0, 1)");
}

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.Validate();
  const int d = config.hidden_size;
  token_embedding = MakeParameter("embeddings.token", config.vocab_size, d);
  position_embedding =
      MakeParameter("embeddings.position", config.max_positions, d);
  FillNormal(&token_embedding, rng, 0.02);
  FillNormal(&position_embedding, rng, 0.02);
  embedding_ln_ = LayerNorm("embeddings.ln", d, config.layer_norm_eps);
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    Layer layer;
    layer.query = Linear(p + "query", d, d, rng);
    layer.key = Linear(p + "key", d, d, rng);
    layer.value = Linear(p + "value", d, d, rng);
    layer.attn_out = Linear(p + "attn_out", d, d, rng);
    layer.ln1 = LayerNorm(p + "ln1", d, config.layer_norm_eps);
    layer.ff_in = Linear(p + "ff_in", d, config.intermediate_size, rng);
    layer.ff_out = Linear(p + "ff_out", config.intermediate_size, d, rng);
    layer.ln2 = LayerNorm(p + "ln2", d, config.layer_norm_eps);
    layers_.push_back(std::move(layer));
  }
}

Matrix Encoder::LayerForward(const Layer& layer, const Matrix& x,
                             LayerCache* cache, Rng* dropout_rng) const {
  const Eigen::Index t = x.rows();
  const int heads = config_.num_heads;
  const int dh = config_.hidden_size / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache->input = x;
  cache->q = layer.query.Forward(x);
  cache->k = layer.key.Forward(x);
  cache->v = layer.value.Forward(x);
  cache->context.resize(t, config_.hidden_size);
  cache->probs.resize(heads);
  for (int h = 0; h < heads; ++h) {
    const auto qh = cache->q.middleCols(h * dh, dh);
    const auto kh = cache->k.middleCols(h * dh, dh);
    const auto vh = cache->v.middleCols(h * dh, dh);
    cache->probs[h] = Softmax((qh * kh.transpose()) * scale);
    cache->context.middleCols(h * dh, dh).noalias() = cache->probs[h] * vh;
  }
  Matrix attn = layer.attn_out.Forward(cache->context);
  cache->attn_mask =
      DropoutMask(attn.rows(), attn.cols(), config_.dropout, dropout_rng);
  ApplyMask(cache->attn_mask, &attn);
  cache->h1 = layer.ln1.Forward(x + attn, &cache->ln1);

  cache->ff_pre = layer.ff_in.Forward(cache->h1);
  cache->ff_act = Gelu(cache->ff_pre);
  Matrix ff = layer.ff_out.Forward(cache->ff_act);
  cache->ff_mask =
      DropoutMask(ff.rows(), ff.cols(), config_.dropout, dropout_rng);
  ApplyMask(cache->ff_mask, &ff);
  return layer.ln2.Forward(cache->h1 + ff, &cache->ln2);
}

Matrix Encoder::LayerBackward(Layer& layer, const Matrix& dy,
                              const LayerCache& cache) {
  const int heads = config_.num_heads;
  const int dh = config_.hidden_size / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix d_sum2 = layer.ln2.Backward(dy, cache.ln2);
  Matrix d_ff = d_sum2;
  ApplyMask(cache.ff_mask, &d_ff);
  Matrix d_act = layer.ff_out.Backward(cache.ff_act, d_ff);
  d_act.array() *= GeluGrad(cache.ff_pre).array();
  Matrix d_h1 = d_sum2 + layer.ff_in.Backward(cache.h1, d_act);

  Matrix d_sum1 = layer.ln1.Backward(d_h1, cache.ln1);
  Matrix d_attn = d_sum1;
  ApplyMask(cache.attn_mask, &d_attn);
  const Matrix d_context = layer.attn_out.Backward(cache.context, d_attn);

  Matrix dq(cache.q.rows(), cache.q.cols());
  Matrix dk(cache.k.rows(), cache.k.cols());
  Matrix dv(cache.v.rows(), cache.v.cols());
  for (int h = 0; h < heads; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    const auto dch = d_context.middleCols(h * dh, dh);
    const Matrix& p = cache.probs[h];
    const Matrix dp = dch * vh.transpose();
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dch;
    const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
    Matrix ds = (p.array() * (dp.colwise() - row_dot).array()) * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * kh;
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qh;
  }
  Matrix dx = d_sum1;
  dx += layer.query.Backward(cache.input, dq);
  dx += layer.key.Backward(cache.input, dk);
  dx += layer.value.Backward(cache.input, dv);
  return dx;
}

Matrix Encoder::Forward(std::span<const int> ids, EncoderState* state,
                        Rng* dropout_rng) const {
  const auto t = static_cast<Eigen::Index>(ids.size());
  if (t > config_.max_positions) {
    throw Error(ErrorCode::kInvalidArgument,
                "sequence of " + std::to_string(t) +
                    " tokens exceeds max_positions " +
                    std::to_string(config_.max_positions));
  }
  Matrix x(t, config_.hidden_size);
  for (Eigen::Index i = 0; i < t; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= config_.vocab_size) {
      throw Error(ErrorCode::kInvalidArgument,
                  "token id " + std::to_string(id) + " out of range");
    }
    x.row(i) = token_embedding.value.row(id) + position_embedding.value.row(i);
  }
  state->ids.assign(ids.begin(), ids.end());
  x = embedding_ln_.Forward(x, &state->embedding_ln);
  state->embedding_mask =
      DropoutMask(x.rows(), x.cols(), config_.dropout, dropout_rng);
  ApplyMask(state->embedding_mask, &x);
  state->layers.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = LayerForward(layers_[l], x, &state->layers[l], dropout_rng);
  }
  return x;
}

void Encoder::Backward(const Matrix& d_hidden, const EncoderState& state) {
  Matrix d = d_hidden;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    d = LayerBackward(layers_[l], d, state.layers[l]);
  }
  ApplyMask(state.embedding_mask, &d);
  d = embedding_ln_.Backward(d, state.embedding_ln);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    token_embedding.grad.row(state.ids[i]) += d.row(i);
    position_embedding.grad.row(i) += d.row(i);
  }
}

std::vector<Parameter*> Encoder::Parameters() {
  std::vector<Parameter*> params{&token_embedding, &position_embedding};
  embedding_ln_.Collect(&params);
  for (Layer& layer : layers_) {
    layer.query.Collect(&params);
    layer.key.Collect(&params);
    layer.value.Collect(&params);
    layer.attn_out.Collect(&params);
    layer.ln1.Collect(&params);
    layer.ff_in.Collect(&params);
    layer.ff_out.Collect(&params);
    layer.ln2.Collect(&params);
  }
  return params;
}

std::vector<const Parameter*> Encoder::Parameters() const {
  auto mutable_params = const_cast<Encoder*>(this)->Parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

Matrix Softmax(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Eigen::VectorXd sums = out.rowwise().sum();
  out.array().colwise() /= sums.array();
  return out;
}

double CrossEntropy(const Matrix& logits, std::span<const int> targets,
                    double normalizer, Matrix* grad) {
  const Matrix probs = Softmax(logits);
  if (grad != nullptr) grad->setZero(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int target = targets[i];
    if (target < 0) continue;
    loss -= std::log(std::max(probs(i, target), 1e-300));
    if (grad != nullptr) {
      grad->row(i) = probs.row(i) / normalizer;
      (*grad)(i, target) -= 1.0 / normalizer;
    }
  }
  return loss / normalizer;
}

double ClipGradNorm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (Parameter* p : params) p->grad *= scale;
  }
  return norm;
}

}  // namespace offspan::nn
