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

#include <algorithm>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "offspan/error.h"
#include "offspan/metrics.h"
#include "offspan/model.h"
#include "support.h"

namespace offspan {
namespace {

namespace fs = std::filesystem;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an offspan::Error");
  return ErrorCode::kRuntime;
}

// Trains one small tagger per fixture; shared by several cases.
struct Trained {
  Dataset data = testing::SyntheticSpanDataset(48, 5);
  Checkpoint base = testing::TinyCheckpoint(data);
  std::vector<double> step_losses;
  SpanModel model = Train(data, base, testing::FastConfig(), 1,
                          [this](const TrainEvent& e) {
                            if (e.kind == TrainEvent::kStep) {
                              step_losses.push_back(e.loss);
                            }
                          });
};

const Trained& SharedModel() {
  static const Trained trained;
  return trained;
}

TEST_SUITE("model") {

TEST_CASE("sliding windows cover every position and end at the text end") {
  CHECK(SlidingWindows(3, 8, 4) == std::vector<std::pair<int, int>>{{0, 3}});
  CHECK(SlidingWindows(10, 4, 2) ==
        std::vector<std::pair<int, int>>{{0, 4}, {2, 6}, {4, 8}, {6, 10}});
  CHECK(SlidingWindows(0, 4, 2).empty());
  for (int length = 1; length < 60; ++length) {
    for (int capacity = 1; capacity < 12; ++capacity) {
      const int stride = std::max(1, capacity / 2);
      const auto windows = SlidingWindows(length, capacity, stride);
      std::vector<int> covered(length, 0);
      for (auto [s, e] : windows) {
        REQUIRE(0 <= s);
        REQUIRE(s < e);
        REQUIRE(e <= length);
        CHECK(e - s == std::min(length, capacity));
        for (int i = s; i < e; ++i) ++covered[i];
      }
      CHECK(windows.back().second == length);
      CHECK(std::count(covered.begin(), covered.end(), 0) == 0);
    }
  }
  CHECK_THROWS_AS(SlidingWindows(5, 0, 1), Error);
}

TEST_CASE("subword encoding keeps a token map") {
  const auto ds = testing::SyntheticSpanDataset(20, 2);
  const auto ckpt = testing::TinyCheckpoint(ds);
  const EncodedText enc = EncodeText(ckpt.tokenizer, "You idiotic clown!!");
  REQUIRE(enc.sequence.tokens.size() == 4);
  REQUIRE(enc.first_subtoken.size() == 4);
  CHECK(enc.owner.size() == enc.ids.size());
  for (std::size_t t = 0; t < enc.first_subtoken.size(); ++t) {
    CHECK(enc.owner[enc.first_subtoken[t]] == static_cast<int>(t));
  }
  CHECK(std::is_sorted(enc.owner.begin(), enc.owner.end()));
}

TEST_CASE("training examples label every subword of a toxic token") {
  const auto ds = testing::SyntheticSpanDataset(20, 2);
  const auto ckpt = testing::TinyCheckpoint(ds);
  for (const Post& post : ds.posts) {
    const auto labeled =
        SpansToLabels(TokenizeWithOffsets(post.text), *post.gold_spans);
    const EncodedText enc = EncodeText(ckpt.tokenizer, post.text);
    for (int max_seq : {6, 48}) {
      const auto examples = BuildExamples(ckpt.tokenizer, labeled, max_seq);
      REQUIRE_FALSE(examples.empty());
      for (const auto& ex : examples) {
        CHECK(ex.ids.size() == ex.labels.size());
        CHECK(static_cast<int>(ex.ids.size()) <= max_seq);
        CHECK(ex.ids.front() == WordPieceTokenizer::kCls);
        CHECK(ex.ids.back() == WordPieceTokenizer::kSep);
        CHECK(ex.labels.front() == -1);
        CHECK(ex.labels.back() == -1);
      }
      if (max_seq == 48 && enc.ids.size() <= 46) {
        REQUIRE(examples.size() == 1);
        for (std::size_t i = 0; i < enc.ids.size(); ++i) {
          const auto& tok = labeled.tokens[enc.owner[i]];
          CHECK(examples[0].labels[i + 1] ==
                (*tok.label == TokenLabel::kToxic ? 1 : 0));
        }
      }
    }
  }
}

TEST_CASE("majority vote breaks ties toward NOT") {
  using L = TokenLabel;
  CHECK(MajorityLabel(std::vector<L>{L::kToxic, L::kToxic, L::kNot}) ==
        L::kToxic);
  CHECK(MajorityLabel(std::vector<L>{L::kToxic, L::kNot}) == L::kNot);
  CHECK(MajorityLabel(std::vector<L>{L::kToxic, L::kToxic, L::kNot, L::kNot}) ==
        L::kNot);
  CHECK_THROWS_AS(MajorityLabel(std::vector<L>{}), Error);
}

TEST_CASE("model configuration parsing") {
  ModelConfig c = ModelConfigFromJson({{"learning_rate", 2e-5}, {"epochs", 4}});
  CHECK(c.learning_rate == 2e-5);
  CHECK(c.epochs == 4);
  CHECK(c.max_seq_length == 140);
  CHECK(ModelConfigFromJson(ToJson(c)).epochs == 4);
  CHECK(CodeOf([] { ModelConfigFromJson({{"lr", 1.0}}); }) ==
        ErrorCode::kInvalidArgument);
  ModelConfig bad;
  bad.max_seq_length = 2;
  CHECK_THROWS_AS(bad.Validate(), Error);
  CHECK(ParseDevice("cpu") == Device::kCpu);
  CHECK(ParseDevice("gpu") == Device::kAccelerator);
  CHECK_THROWS_AS(ParseDevice("tpu9"), Error);
}

TEST_CASE("masked-LM adaptation lowers held-out loss") {
  const auto ds = testing::SyntheticSpanDataset(80, 9);
  const auto base = testing::TinyCheckpoint(ds);
  ModelConfig config = testing::FastConfig();
  config.epochs = 4;
  config.train_batch_size = 8;
  MlmReport report;
  const auto texts = testing::Texts(ds);
  const Checkpoint adapted = MlmAdapt(base, texts, config, 3, &report);
  CHECK(report.heldout_texts == 8);
  CHECK(report.train_texts == 72);
  CHECK(report.steps > 0);
  CHECK(report.adapted_heldout_loss < report.base_heldout_loss);
  CHECK(report.adapted_perplexity() < report.base_perplexity());
  CHECK(MlmLoss(adapted, texts, 0.15, 48, 4) < MlmLoss(base, texts, 0.15, 48, 4));
  const std::vector<std::string> blank = {"   "};
  CHECK(CodeOf([&] { MlmAdapt(base, blank, config, 3); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("fine-tuning lowers the training loss") {
  const auto& t = SharedModel();
  REQUIRE(t.step_losses.size() >= 30);
  const auto mean = [](auto first, auto last) {
    return std::accumulate(first, last, 0.0) / std::distance(first, last);
  };
  const double head = mean(t.step_losses.begin(), t.step_losses.begin() + 5);
  const double tail = mean(t.step_losses.end() - 5, t.step_losses.end());
  CHECK(tail < 0.7 * head);
  CHECK(t.model.metadata().seed == 1);
  CHECK(t.model.metadata().epochs_completed == 3);
  CHECK(t.model.metadata().train_posts == 48);
}

TEST_CASE("predictions are token aligned and windowed for long texts") {
  const auto& t = SharedModel();
  std::string text;
  for (int i = 0; i < 60; ++i) text += (i % 7 == 3) ? "idiot " : "the plan ";
  const TokenPrediction pred = t.model.PredictTokens(text);
  const auto tokens = TokenizeWithOffsets(text).tokens;
  REQUIRE(pred.tokens.size() == tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    CHECK(pred.tokens[i].token.start == tokens[i].start);
    CHECK(pred.tokens[i].p_not + pred.tokens[i].p_toxic ==
          doctest::Approx(1.0));
    CHECK((*pred.tokens[i].token.label == TokenLabel::kToxic) ==
          (pred.tokens[i].p_toxic > pred.tokens[i].p_not));
  }
  const SpanSet spans = t.model.Predict(text);
  CHECK(spans.FitsWithin(text.size()));
  CHECK(t.model.Predict("").empty());
}

TEST_CASE("saved models reload with identical predictions") {
  const auto& t = SharedModel();
  testing::TempDir dir;
  t.model.Save(dir / "m");
  const SpanModel loaded = SpanModel::Load(dir / "m");
  CHECK(loaded.metadata().seed == t.model.metadata().seed);
  for (const Post& post : t.data.posts) {
    const auto a = t.model.PredictTokens(post.text);
    const auto b = loaded.PredictTokens(post.text);
    REQUIRE(a.tokens.size() == b.tokens.size());
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
      CHECK(a.tokens[i].p_toxic == b.tokens[i].p_toxic);
    }
  }
}

TEST_CASE("corrupted weight files are rejected") {
  const auto& t = SharedModel();
  testing::TempDir dir;
  t.model.Save(dir / "m");
  const fs::path weights = dir / "m" / "encoder.bin";
  const auto size = fs::file_size(weights);
  fs::resize_file(weights, size - 9);
  CHECK(CodeOf([&] { SpanModel::Load(dir / "m"); }) == ErrorCode::kParse);
  {
    std::ofstream out(weights, std::ios::binary | std::ios::trunc);
    out << "NOPE";
  }
  CHECK(CodeOf([&] { SpanModel::Load(dir / "m"); }) == ErrorCode::kParse);
  fs::remove(weights);
  CHECK(CodeOf([&] { SpanModel::Load(dir / "m"); }) == ErrorCode::kIo);
}

TEST_CASE("ensembles vote per token") {
  const auto& t = SharedModel();
  testing::TempDir dir;
  t.model.Save(dir / "seed-1");
  t.model.Save(dir / "seed-2");
  t.model.Save(dir / "seed-3");
  const std::vector<std::string> names = {"seed-1", "seed-2", "seed-3"};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  WriteEnsembleManifest(dir.path(), names, seeds);
  const Ensemble ensemble = Ensemble::Load(dir.path());
  CHECK(ensemble.size() == 3);
  const Ensemble single = Ensemble::Load(dir / "seed-2");
  CHECK(single.size() == 1);
  const SpanModel* raw[] = {&t.model};
  for (const Post& post : t.data.posts) {
    const SpanSet expected = t.model.Predict(post.text);
    CHECK(ensemble.Predict(post.text) == expected);
    CHECK(EnsemblePredict(raw, post.text) == expected);
  }
  CHECK(CodeOf([&] { Ensemble::Load(dir / "missing"); }) ==
        ErrorCode::kNotFound);
}

TEST_CASE("accelerator requests fail cleanly") {
  const auto& t = SharedModel();
  ModelConfig config = testing::FastConfig();
  config.device = Device::kAccelerator;
  CHECK(CodeOf([&] { Train(t.data, t.base, config, 1); }) ==
        ErrorCode::kUnavailable);
}

}  // TEST_SUITE

}  // namespace
}  // namespace offspan
