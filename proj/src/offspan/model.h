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

#ifndef OFFSPAN_MODEL_H_
#define OFFSPAN_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "offspan/alignment.h"
#include "offspan/corpus.h"
#include "offspan/encoder.h"
#include "offspan/rng.h"
#include "offspan/wordpiece.h"

namespace offspan {

enum class Device { kCpu, kAccelerator };

const char* DeviceName(Device device);
Device ParseDevice(std::string_view name);

// Training and inference hyperparameters. Defaults are the published
// fine-tuning settings (lr 1e-5, 3 epochs, 140 subword tokens, ...).
struct ModelConfig {
  std::string base_checkpoint;
  double learning_rate = 1e-5;
  int epochs = 3;
  double adam_epsilon = 1e-8;
  double warmup_ratio = 0.1;
  int warmup_steps = 0;  // > 0 overrides warmup_ratio
  double max_grad_norm = 1.0;
  int max_seq_length = 140;
  int gradient_accumulation_steps = 1;
  int early_stop_patience = 10;  // evaluations without improvement; 0 = off
  int evaluate_every_steps = 50;  // plus once at the end of every epoch
  int train_batch_size = 8;
  double weight_decay = 0.0;
  // Share of posts used for training; the rest is the validation set.
  // 1.0 trains on everything and validates on the training posts.
  double train_fraction = 0.8;
  std::vector<std::uint64_t> seeds = {777, 1234, 2021, 31337, 4242};
  double mlm_mask_probability = 0.15;
  // Vocabulary size used when a checkpoint is bootstrapped from a corpus.
  int vocab_size = 8000;
  Device device = Device::kCpu;

  void Validate() const;
};

nlohmann::json ToJson(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig ModelConfigFromJson(const nlohmann::json& j,
                                ModelConfig base = {});
nlohmann::json ToJson(const nn::EncoderConfig& config);
nn::EncoderConfig EncoderConfigFromJson(const nlohmann::json& j);

// A pretrained encoder with its vocabulary and masked-LM head.
struct Checkpoint {
  std::string id;
  WordPieceTokenizer tokenizer;
  nn::Encoder encoder;
  nn::Linear mlm_head;  // hidden -> vocab logits

  // Fresh checkpoint: vocabulary learned from `corpus`, random weights.
  // `architecture.vocab_size` is the vocabulary budget.
  static Checkpoint Initialize(std::string id,
                               std::span<const std::string> corpus,
                               nn::EncoderConfig architecture,
                               bool lower_case, std::uint64_t seed);

  // Directory with checkpoint.json, vocab.txt, encoder.bin, mlm_head.bin.
  static Checkpoint Load(const std::filesystem::path& dir);
  void Save(const std::filesystem::path& dir) const;
};

struct MlmReport {
  double base_heldout_loss = 0.0;
  double adapted_heldout_loss = 0.0;
  std::size_t train_texts = 0;
  std::size_t heldout_texts = 0;
  long steps = 0;

  double base_perplexity() const;
  double adapted_perplexity() const;
};

// Mean masked-token cross-entropy of `checkpoint` on `texts`. Masks are
// drawn from `seed`, so two checkpoints can be compared on identical masks.
double MlmLoss(const Checkpoint& checkpoint,
               std::span<const std::string> texts, double mask_probability,
               int max_seq_length, std::uint64_t seed);

// Continues masked-LM training of `base` on `corpus` (80/10/10 masking)
// with the optimizer settings of `config`. A tenth of the corpus (at least
// one text) is held out to report the loss before and after; a
// single-text corpus is both trained and evaluated on. Throws
// Error(kInvalidArgument) if the corpus yields no maskable token.
Checkpoint MlmAdapt(const Checkpoint& base, std::span<const std::string> corpus,
                    const ModelConfig& config, std::uint64_t seed,
                    MlmReport* report = nullptr);

// Encoder + binary token classification head. Label index 0 = NOT,
// 1 = TOXIC.
class TokenTagger {
 public:
  static constexpr int kNotIndex = 0;
  static constexpr int kToxicIndex = 1;

  // One window of subword ids framed by [CLS]/[SEP]; label -1 = ignored.
  struct Example {
    std::vector<int> ids;
    std::vector<int> labels;
  };

  TokenTagger() = default;
  TokenTagger(WordPieceTokenizer tokenizer, nn::Encoder encoder,
              nn::Linear head)
      : tokenizer(std::move(tokenizer)),
        encoder(std::move(encoder)),
        head(std::move(head)) {}

  nn::Matrix Logits(std::span<const int> ids) const;

  // Mean token cross-entropy over all labeled positions of the batch. When
  // accumulate is set, gradients are added to the parameters.
  double BatchLoss(std::span<const Example> batch, bool accumulate,
                   Rng* dropout_rng);

  std::vector<nn::Parameter*> Parameters();

  WordPieceTokenizer tokenizer;
  nn::Encoder encoder;
  nn::Linear head;
};

// Subword view of a text: every surface token expands to one or more ids.
struct EncodedText {
  LabeledSequence sequence;
  std::vector<int> ids;
  std::vector<int> owner;           // surface token index per subword
  std::vector<int> first_subtoken;  // subword index per surface token
};

EncodedText EncodeText(const WordPieceTokenizer& tokenizer,
                       std::string_view text);

// [start, end) subword windows of at most `capacity` ids. Windows start
// every `stride` ids; the last one is aligned to the end of the text.
std::vector<std::pair<int, int>> SlidingWindows(int length, int capacity,
                                                int stride);

// Training windows for one labeled sequence. Every subword of a TOXIC
// surface token carries the TOXIC label.
std::vector<TokenTagger::Example> BuildExamples(
    const WordPieceTokenizer& tokenizer, const LabeledSequence& labeled,
    int max_seq_length);

struct TrainingMetadata {
  std::uint64_t seed = 0;
  double validation_f1 = 0.0;
  double validation_loss = 0.0;
  long steps = 0;
  int epochs_completed = 0;
  bool stopped_early = false;
  std::size_t train_posts = 0;
  std::size_t validation_posts = 0;
  std::string started_at;
  std::string finished_at;
};

struct TokenScore {
  AlignedToken token;  // label set to the argmax class
  double p_not = 0.0;
  double p_toxic = 0.0;
};

struct TokenPrediction {
  std::vector<TokenScore> tokens;
};

class SpanModel {
 public:
  SpanModel(ModelConfig config, TokenTagger tagger, TrainingMetadata metadata)
      : config_(std::move(config)),
        tagger_(std::move(tagger)),
        metadata_(std::move(metadata)) {}

  // Directory with config.json, vocab.txt, encoder.bin, head.bin,
  // metadata.json.
  static SpanModel Load(const std::filesystem::path& dir);
  void Save(const std::filesystem::path& dir) const;

  // Per-surface-token probabilities. Texts longer than max_seq_length
  // subwords are windowed with stride max_seq_length / 2; a token is TOXIC
  // if any window containing its first subword says so.
  TokenPrediction PredictTokens(std::string_view text) const;
  SpanSet Predict(std::string_view text, bool merge_adjacent = false) const;

  const ModelConfig& config() const { return config_; }
  const TrainingMetadata& metadata() const { return metadata_; }
  const TokenTagger& tagger() const { return tagger_; }

 private:
  ModelConfig config_;
  TokenTagger tagger_;
  TrainingMetadata metadata_;
};

struct TrainEvent {
  enum Kind { kStep, kEvaluation } kind = kStep;
  long step = 0;
  int epoch = 0;
  double loss = 0.0;
};
using TrainObserver = std::function<void(const TrainEvent&)>;

// Fine-tunes `base` for span tagging on a span dataset. Validation loss is
// tracked every evaluate_every_steps and at each epoch end; training stops
// after early_stop_patience evaluations without improvement and the best
// weights are restored.
SpanModel Train(const Dataset& dataset, const Checkpoint& base,
                const ModelConfig& config, std::uint64_t seed,
                const TrainObserver& observer = {});

// Mode of the votes; a tie (or no majority) resolves to NOT.
TokenLabel MajorityLabel(std::span<const TokenLabel> votes);

// Seed ensemble voting per surface token.
class Ensemble {
 public:
  explicit Ensemble(std::vector<std::shared_ptr<const SpanModel>> members);

  // A model directory, or an ensemble directory with ensemble.json listing
  // member subdirectories.
  static Ensemble Load(const std::filesystem::path& dir);

  LabeledSequence PredictLabels(std::string_view text) const;
  SpanSet Predict(std::string_view text, bool merge_adjacent = false) const;

  std::size_t size() const { return members_.size(); }
  const std::vector<std::shared_ptr<const SpanModel>>& members() const {
    return members_;
  }

 private:
  std::vector<std::shared_ptr<const SpanModel>> members_;
};

SpanSet EnsemblePredict(std::span<const SpanModel* const> models,
                        std::string_view text, bool merge_adjacent = false);

// Writes ensemble.json for member directories `names` under `dir`.
void WriteEnsembleManifest(const std::filesystem::path& dir,
                           std::span<const std::string> names,
                           std::span<const std::uint64_t> seeds);

}  // namespace offspan

#endif  // OFFSPAN_MODEL_H_
