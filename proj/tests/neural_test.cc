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

#include <cmath>
#include <random>

#include "doctest.h"
#include "offspan/encoder.h"
#include "offspan/error.h"
#include "offspan/optimizer.h"
#include "offspan/wordpiece.h"
#include "support.h"

namespace offspan {
namespace {

using nn::Matrix;

bool GradientsAgree(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return diff <= 1e-9 || diff / scale < 1e-3;
}

// Loss of a tagger-style model: encoder -> linear head -> cross-entropy.
struct GradFixture {
  nn::Encoder encoder;
  nn::Linear head;
  std::vector<std::vector<int>> ids;
  std::vector<std::vector<int>> labels;

  GradFixture() {
    nn::EncoderConfig config = nn::EncoderConfig::Preset("tiny");
    config.vocab_size = 30;
    config.max_positions = 16;
    config.num_layers = 2;
    Rng rng(99);
    encoder = nn::Encoder(config, rng);
    // Larger head weights keep the gradients well above rounding noise.
    head = nn::Linear("head", config.hidden_size, 2, rng, 0.5);
    ids = {{2, 7, 8, 9, 12, 3}, {2, 15, 6, 3}};
    labels = {{-1, 0, 1, 1, 0, -1}, {-1, 1, 0, -1}};
  }

  std::vector<nn::Parameter*> Params() {
    auto params = encoder.Parameters();
    head.Collect(&params);
    return params;
  }

  double Loss(bool backprop) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      nn::EncoderState state;
      const Matrix hidden = encoder.Forward(ids[i], &state, nullptr);
      Matrix grad;
      loss += nn::CrossEntropy(head.Forward(hidden), labels[i], 6.0,
                               backprop ? &grad : nullptr);
      if (backprop) encoder.Backward(head.Backward(hidden, grad), state);
    }
    return loss;
  }
};

TEST_SUITE("neural") {

TEST_CASE("wordpiece vocabulary and encoding") {
  const std::vector<std::string> corpus = {
      "the stupid idiot said the idiot thing", "stupidity is idiotic",
      "Hello, world!"};
  const auto tok = WordPieceTokenizer::Build(corpus, 200, true);
  CHECK(tok.Piece(WordPieceTokenizer::kCls) == "[CLS]");
  CHECK(tok.Id("[MASK]") == WordPieceTokenizer::kMask);
  CHECK(tok.Id("no-such-piece") == WordPieceTokenizer::kUnk);
  const auto idiot = tok.Encode("IDIOT");
  REQUIRE(idiot.size() == 1);
  CHECK(tok.Piece(idiot[0]) == "idiot");
  // Unseen words decompose into known pieces, never into [UNK].
  for (int id : tok.Encode("idiotstupid")) {
    CHECK(id != WordPieceTokenizer::kUnk);
  }
  CHECK(tok.Encode("world!").size() == 2);
  CHECK(tok.Encode("\xe2\x98\x83") ==
        std::vector<int>{WordPieceTokenizer::kUnk});
  CHECK(tok.size() <= 200);

  testing::TempDir dir;
  tok.Save(dir / "vocab.txt");
  const auto loaded = WordPieceTokenizer::Load(dir / "vocab.txt", true);
  CHECK(loaded.size() == tok.size());
  CHECK(loaded.Encode("stupidity") == tok.Encode("stupidity"));
  CHECK_THROWS_AS(WordPieceTokenizer({"a", "b"}, false), Error);
}

TEST_CASE("vocabulary budget is respected") {
  const auto ds = testing::SyntheticSpanDataset(50, 1);
  const auto tok = WordPieceTokenizer::Build(testing::Texts(ds), 40, false);
  CHECK(tok.size() <= 40);
  for (const auto& post : ds.posts) {
    CHECK_FALSE(tok.Encode(post.text.substr(0, post.text.find(' '))).empty());
  }
}

TEST_CASE("softmax rows are distributions") {
  Matrix logits(3, 4);
  logits << 1, 2, 3, 4, -1000, 0, 1000, 5, 0, 0, 0, 0;
  const Matrix p = nn::Softmax(logits);
  for (int r = 0; r < 3; ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
  CHECK(p(2, 1) == doctest::Approx(0.25));
  CHECK(std::isfinite(p(1, 0)));
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Matrix logits(3, 2);
  logits << 0.3, -1.2, 2.0, 0.5, -0.7, 0.1;
  const std::vector<int> targets = {1, -1, 0};
  Matrix grad;
  nn::CrossEntropy(logits, targets, 2.0, &grad);
  CHECK(grad.row(1).norm() == 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) {
      Matrix plus = logits, minus = logits;
      plus(r, c) += 1e-6;
      minus(r, c) -= 1e-6;
      const double numeric = (nn::CrossEntropy(plus, targets, 2.0, nullptr) -
                              nn::CrossEntropy(minus, targets, 2.0, nullptr)) /
                             2e-6;
      CHECK(GradientsAgree(grad(r, c), numeric));
    }
  }
}

TEST_CASE("encoder is deterministic without dropout and checks lengths") {
  GradFixture f;
  nn::EncoderState a, b;
  const Matrix h1 = f.encoder.Forward(f.ids[0], &a, nullptr);
  const Matrix h2 = f.encoder.Forward(f.ids[0], &b, nullptr);
  CHECK(h1.rows() == 6);
  CHECK(h1.cols() == 32);
  CHECK((h1 - h2).norm() == 0.0);
  Rng dropout(1);
  nn::EncoderState c;
  const Matrix h3 = f.encoder.Forward(f.ids[0], &c, &dropout);
  CHECK((h1 - h3).norm() > 0.0);
  std::vector<int> too_long(17, 5);
  nn::EncoderState d;
  CHECK_THROWS_AS(f.encoder.Forward(too_long, &d, nullptr), Error);
  std::vector<int> bad_id = {2, 30, 3};
  CHECK_THROWS_AS(f.encoder.Forward(bad_id, &d, nullptr), Error);
}

TEST_CASE("whole-model gradients match central differences") {
  GradFixture f;
  auto params = f.Params();
  for (auto* p : params) p->ZeroGrad();
  f.Loss(true);
  std::mt19937_64 rng(3);
  int checked = 0;
  for (nn::Parameter* p : params) {
    // A handful of coordinates per tensor keeps this fast.
    for (int k = 0; k < 4; ++k) {
      const auto idx = static_cast<Eigen::Index>(rng() % p->value.size());
      const double original = p->value.data()[idx];
      p->value.data()[idx] = original + 1e-5;
      const double up = f.Loss(false);
      p->value.data()[idx] = original - 1e-5;
      const double down = f.Loss(false);
      p->value.data()[idx] = original;
      const double numeric = (up - down) / 2e-5;
      const double analytic = p->grad.data()[idx];
      INFO(p->name << "[" << idx << "] analytic " << analytic << " numeric "
                   << numeric);
      CHECK(GradientsAgree(analytic, numeric));
      ++checked;
    }
  }
  CHECK(checked == 4 * static_cast<int>(params.size()));
}

TEST_CASE("gradient clipping scales to the global norm") {
  nn::Parameter a{"a", Matrix::Zero(1, 2), Matrix(1, 2)};
  nn::Parameter b{"b", Matrix::Zero(1, 1), Matrix(1, 1)};
  a.grad << 3, 0;
  b.grad << 4;
  std::vector<nn::Parameter*> params = {&a, &b};
  CHECK(nn::ClipGradNorm(params, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
  CHECK(b.grad(0, 0) == doctest::Approx(0.8));
  CHECK(nn::ClipGradNorm(params, 10.0) == doctest::Approx(1.0));
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("linear schedule warms up then decays to zero") {
  const nn::LinearSchedule s(10, 2);
  CHECK(s.Factor(0) == 0.0);
  CHECK(s.Factor(1) == doctest::Approx(0.5));
  CHECK(s.Factor(2) == doctest::Approx(1.0));
  CHECK(s.Factor(6) == doctest::Approx(0.5));
  CHECK(s.Factor(10) == 0.0);
  const nn::LinearSchedule none(4, 0);
  CHECK(none.Factor(0) == 1.0);
}

TEST_CASE("AdamW matches a scalar reference implementation") {
  nn::AdamW::Options options;
  options.learning_rate = 0.1;
  options.epsilon = 1e-8;
  options.weight_decay = 0.01;
  nn::AdamW opt(options);
  nn::Parameter p{"p", Matrix::Constant(1, 1, 1.0), Matrix(1, 1)};
  std::vector<nn::Parameter*> params = {&p};
  double x = 1.0, m = 0.0, v = 0.0;
  const double grads[] = {0.5, -0.2, 0.9, 0.1};
  for (int t = 1; t <= 4; ++t) {
    const double g = grads[t - 1];
    p.grad(0, 0) = g;
    opt.Step(params, 0.5);
    const double lr = 0.1 * 0.5;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double step =
        lr * std::sqrt(1 - std::pow(0.999, t)) / (1 - std::pow(0.9, t));
    x -= step * m / (std::sqrt(v) + 1e-8);
    x -= lr * 0.01 * x;
    CHECK(p.value(0, 0) == doctest::Approx(x).epsilon(1e-12));
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace offspan
