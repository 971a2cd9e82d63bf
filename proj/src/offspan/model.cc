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

#include "offspan/model.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>

#include "spdlog/spdlog.h"

#include "offspan/error.h"
#include "offspan/metrics.h"
#include "offspan/optimizer.h"
#include "offspan/rng.h"

namespace offspan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "weight files are written in host byte order");

constexpr char kWeightsMagic[4] = {'O', 'S', 'P', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

std::string NowIso8601() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void WriteU32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t ReadU32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void WriteTensors(const fs::path& path,
                  std::span<const nn::Parameter* const> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  WriteU32(out, kWeightsVersion);
  WriteU32(out, static_cast<std::uint32_t>(params.size()));
  for (const nn::Parameter* p : params) {
    WriteU32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    WriteU32(out, static_cast<std::uint32_t>(p->value.rows()));
    WriteU32(out, static_cast<std::uint32_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void ReadTensors(const fs::path& path, std::span<nn::Parameter* const> params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kParse, path.string() + ": " + why);
  };
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 4, kWeightsMagic)) {
    throw corrupt("not a weights file");
  }
  if (ReadU32(in) != kWeightsVersion) throw corrupt("unsupported version");
  const std::uint32_t count = ReadU32(in);
  std::map<std::string, nn::Matrix> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = ReadU32(in);
    if (!in || name_len > 4096) throw corrupt("bad tensor name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = ReadU32(in);
    const std::uint32_t cols = ReadU32(in);
    if (!in || static_cast<std::uint64_t>(rows) * cols > (1ULL << 32)) {
      throw corrupt("bad tensor shape");
    }
    nn::Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw corrupt("truncated tensor '" + name + "'");
    tensors.emplace(std::move(name), std::move(m));
  }
  for (nn::Parameter* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) throw corrupt("missing tensor '" + p->name + "'");
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols()) {
      throw corrupt("shape mismatch for '" + p->name + "'");
    }
    p->value = std::move(it->second);
    p->ZeroGrad();
    tensors.erase(it);
  }
  if (!tensors.empty()) {
    throw corrupt("unexpected tensor '" + tensors.begin()->first + "'");
  }
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ZeroGrads(std::span<nn::Parameter* const> params) {
  for (nn::Parameter* p : params) p->ZeroGrad();
}

void RequireCpu(Device device) {
  if (device == Device::kAccelerator) {
    throw Error(ErrorCode::kUnavailable,
                "accelerator device requested but this build has only the "
                "CPU backend");
  }
}

std::vector<int> Frame(std::span<const int> ids) {
  std::vector<int> framed;
  framed.reserve(ids.size() + 2);
  framed.push_back(WordPieceTokenizer::kCls);
  framed.insert(framed.end(), ids.begin(), ids.end());
  framed.push_back(WordPieceTokenizer::kSep);
  return framed;
}

int WindowCapacity(int max_seq_length) { return max_seq_length - 2; }
int WindowStride(int max_seq_length) { return std::max(1, max_seq_length / 2); }

void ExpandSubwords(const WordPieceTokenizer& tokenizer, EncodedText* enc) {
  for (std::size_t t = 0; t < enc->sequence.tokens.size(); ++t) {
    const auto ids = tokenizer.Encode(enc->sequence.tokens[t].surface);
    enc->first_subtoken.push_back(static_cast<int>(enc->ids.size()));
    for (int id : ids) {
      enc->ids.push_back(id);
      enc->owner.push_back(static_cast<int>(t));
    }
  }
}

// Framed id windows covering a whole text.
std::vector<std::vector<int>> TextWindows(const WordPieceTokenizer& tokenizer,
                                          std::string_view text,
                                          int max_seq_length) {
  const EncodedText enc = EncodeText(tokenizer, text);
  std::vector<std::vector<int>> windows;
  for (auto [start, end] :
       SlidingWindows(static_cast<int>(enc.ids.size()),
                      WindowCapacity(max_seq_length),
                      WindowStride(max_seq_length))) {
    windows.push_back(Frame(std::span<const int>(enc.ids).subspan(
        start, end - start)));
  }
  return windows;
}

// BERT-style masking of the non-special positions: 80% [MASK], 10% random
// piece, 10% unchanged. At least one position is always selected.
void MaskWindow(const std::vector<int>& ids, double probability, int vocab_size,
                Rng& rng, std::vector<int>* inputs, std::vector<int>* targets) {
  *inputs = ids;
  targets->assign(ids.size(), -1);
  const int n = static_cast<int>(ids.size());
  if (n <= 2) return;
  std::vector<int> selected;
  for (int i = 1; i < n - 1; ++i) {
    if (UniformUnit(rng) < probability) selected.push_back(i);
  }
  if (selected.empty()) {
    selected.push_back(1 + static_cast<int>(UniformIndex(rng, n - 2)));
  }
  for (int i : selected) {
    (*targets)[i] = ids[i];
    const double r = UniformUnit(rng);
    if (r < 0.8) {
      (*inputs)[i] = WordPieceTokenizer::kMask;
    } else if (r < 0.9 && vocab_size > WordPieceTokenizer::kNumSpecial) {
      (*inputs)[i] = WordPieceTokenizer::kNumSpecial +
                     static_cast<int>(UniformIndex(
                         rng, vocab_size - WordPieceTokenizer::kNumSpecial));
    }
  }
}

std::vector<nn::Parameter*> CheckpointParameters(Checkpoint& checkpoint) {
  auto params = checkpoint.encoder.Parameters();
  checkpoint.mlm_head.Collect(&params);
  return params;
}

// Sums masked-token cross-entropy over the windows; returns (sum, count).
std::pair<double, long> MlmBatch(Checkpoint& checkpoint,
                                 std::span<const std::vector<int>> inputs,
                                 std::span<const std::vector<int>> targets,
                                 double normalizer, bool accumulate,
                                 Rng* dropout_rng) {
  double loss = 0.0;
  long count = 0;
  nn::Matrix grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    nn::EncoderState state;
    const nn::Matrix hidden =
        checkpoint.encoder.Forward(inputs[i], &state, dropout_rng);
    const nn::Matrix logits = checkpoint.mlm_head.Forward(hidden);
    loss += nn::CrossEntropy(logits, targets[i], normalizer,
                             accumulate ? &grad : nullptr);
    count += std::count_if(targets[i].begin(), targets[i].end(),
                           [](int t) { return t >= 0; });
    if (accumulate) {
      checkpoint.encoder.Backward(checkpoint.mlm_head.Backward(hidden, grad),
                                  state);
    }
  }
  return {loss, count};
}

long CountLabeled(std::span<const TokenTagger::Example> batch) {
  long n = 0;
  for (const auto& ex : batch) {
    n += std::count_if(ex.labels.begin(), ex.labels.end(),
                       [](int l) { return l >= 0; });
  }
  return n;
}

long TotalSteps(std::size_t examples, const ModelConfig& config) {
  const long batches = static_cast<long>(
      (examples + config.train_batch_size - 1) / config.train_batch_size);
  const long per_epoch = (batches + config.gradient_accumulation_steps - 1) /
                         config.gradient_accumulation_steps;
  return per_epoch * config.epochs;
}

long WarmupSteps(long total, const ModelConfig& config) {
  if (config.warmup_steps > 0) return config.warmup_steps;
  return static_cast<long>(std::ceil(total * config.warmup_ratio));
}

nn::AdamW MakeOptimizer(const ModelConfig& config) {
  nn::AdamW::Options options;
  options.learning_rate = config.learning_rate;
  options.epsilon = config.adam_epsilon;
  options.weight_decay = config.weight_decay;
  return nn::AdamW(options);
}

void CheckSequenceFits(const ModelConfig& config,
                       const nn::EncoderConfig& encoder) {
  if (config.max_seq_length > encoder.max_positions) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_seq_length " + std::to_string(config.max_seq_length) +
                    " exceeds the encoder's " +
                    std::to_string(encoder.max_positions) + " positions");
  }
}

}  // namespace

const char* DeviceName(Device device) {
  return device == Device::kCpu ? "cpu" : "accelerator";
}

Device ParseDevice(std::string_view name) {
  if (name == "cpu") return Device::kCpu;
  if (name == "accel" || name == "accelerator" || name == "gpu") {
    return Device::kAccelerator;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown device '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "model config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(mlm_mask_probability > 0.0 && mlm_mask_probability < 1.0)) {
    fail("mlm_mask_probability must lie strictly between 0 and 1");
  }
  // One content token plus [CLS] and [SEP].
  if (max_seq_length < 3) fail("max_seq_length must be >= 3");
  if (adam_epsilon <= 0.0) fail("adam_epsilon must be > 0");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    fail("warmup_ratio must lie in [0, 1)");
  }
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (max_grad_norm < 0.0) fail("max_grad_norm must be >= 0");
  if (gradient_accumulation_steps < 1) {
    fail("gradient_accumulation_steps must be >= 1");
  }
  if (early_stop_patience < 0) fail("early_stop_patience must be >= 0");
  if (evaluate_every_steps < 0) fail("evaluate_every_steps must be >= 0");
  if (train_batch_size < 1) fail("train_batch_size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    fail("train_fraction must lie in (0, 1]");
  }
  if (seeds.empty()) fail("at least one seed is required");
  if (vocab_size <= WordPieceTokenizer::kNumSpecial) {
    fail("vocab_size too small");
  }
}

json ToJson(const ModelConfig& c) {
  return {{"base_checkpoint", c.base_checkpoint},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"adam_epsilon", c.adam_epsilon},
          {"warmup_ratio", c.warmup_ratio},
          {"warmup_steps", c.warmup_steps},
          {"max_grad_norm", c.max_grad_norm},
          {"max_seq_length", c.max_seq_length},
          {"gradient_accumulation_steps", c.gradient_accumulation_steps},
          {"early_stop_patience", c.early_stop_patience},
          {"evaluate_every_steps", c.evaluate_every_steps},
          {"train_batch_size", c.train_batch_size},
          {"weight_decay", c.weight_decay},
          {"train_fraction", c.train_fraction},
          {"seeds", c.seeds},
          {"mlm_mask_probability", c.mlm_mask_probability},
          {"vocab_size", c.vocab_size},
          {"device", DeviceName(c.device)}};
}

ModelConfig ModelConfigFromJson(const json& j, ModelConfig c) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "model config must be an object");
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "base_checkpoint") c.base_checkpoint = value.get<std::string>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
      else if (key == "warmup_ratio") c.warmup_ratio = value.get<double>();
      else if (key == "warmup_steps") c.warmup_steps = value.get<int>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "max_seq_length") c.max_seq_length = value.get<int>();
      else if (key == "gradient_accumulation_steps") {
        c.gradient_accumulation_steps = value.get<int>();
      } else if (key == "early_stop_patience") {
        c.early_stop_patience = value.get<int>();
      } else if (key == "evaluate_every_steps") {
        c.evaluate_every_steps = value.get<int>();
      } else if (key == "train_batch_size") {
        c.train_batch_size = value.get<int>();
      } else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "train_fraction") c.train_fraction = value.get<double>();
      else if (key == "seeds") {
        c.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "mlm_mask_probability") {
        c.mlm_mask_probability = value.get<double>();
      } else if (key == "vocab_size") c.vocab_size = value.get<int>();
      else if (key == "device") c.device = ParseDevice(value.get<std::string>());
      else {
        throw Error(ErrorCode::kInvalidArgument,
                    "model config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("model config: ") + e.what());
  }
  return c;
}

json ToJson(const nn::EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"hidden_size", c.hidden_size},
          {"num_layers", c.num_layers},
          {"num_heads", c.num_heads},
          {"intermediate_size", c.intermediate_size},
          {"max_positions", c.max_positions},
          {"dropout", c.dropout},
          {"layer_norm_eps", c.layer_norm_eps}};
}

nn::EncoderConfig EncoderConfigFromJson(const json& j) {
  nn::EncoderConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.intermediate_size = j.at("intermediate_size").get<int>();
    c.max_positions = j.at("max_positions").get<int>();
    c.dropout = j.value("dropout", c.dropout);
    c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("encoder config: ") + e.what());
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------
// Checkpoint

Checkpoint Checkpoint::Initialize(std::string id,
                                  std::span<const std::string> corpus,
                                  nn::EncoderConfig architecture,
                                  bool lower_case, std::uint64_t seed) {
  Checkpoint checkpoint;
  checkpoint.id = std::move(id);
  checkpoint.tokenizer =
      WordPieceTokenizer::Build(corpus, architecture.vocab_size, lower_case);
  architecture.vocab_size = checkpoint.tokenizer.size();
  Rng rng(seed);
  checkpoint.encoder = nn::Encoder(architecture, rng);
  checkpoint.mlm_head = nn::Linear("mlm_head", architecture.hidden_size,
                                   architecture.vocab_size, rng);
  return checkpoint;
}

Checkpoint Checkpoint::Load(const fs::path& dir) {
  const json meta = ReadJsonFile(dir / "checkpoint.json");
  Checkpoint checkpoint;
  checkpoint.id = meta.value("id", dir.filename().string());
  const nn::EncoderConfig arch = EncoderConfigFromJson(meta.at("encoder"));
  checkpoint.tokenizer = WordPieceTokenizer::Load(
      dir / "vocab.txt", meta.value("lower_case", false));
  if (checkpoint.tokenizer.size() != arch.vocab_size) {
    throw Error(ErrorCode::kParse, dir.string() + ": vocabulary size " +
                                       std::to_string(checkpoint.tokenizer.size()) +
                                       " does not match encoder");
  }
  Rng unused(0);
  checkpoint.encoder = nn::Encoder(arch, unused);
  checkpoint.mlm_head =
      nn::Linear("mlm_head", arch.hidden_size, arch.vocab_size, unused);
  ReadTensors(dir / "encoder.bin", checkpoint.encoder.Parameters());
  std::vector<nn::Parameter*> head;
  checkpoint.mlm_head.Collect(&head);
  ReadTensors(dir / "mlm_head.bin", head);
  return checkpoint;
}

void Checkpoint::Save(const fs::path& dir) const {
  fs::create_directories(dir);
  WriteJsonFile(dir / "checkpoint.json",
                {{"id", id},
                 {"encoder", ToJson(encoder.config())},
                 {"lower_case", tokenizer.lower_case()}});
  tokenizer.Save(dir / "vocab.txt");
  WriteTensors(dir / "encoder.bin", encoder.Parameters());
  std::vector<const nn::Parameter*> head{&mlm_head.weight, &mlm_head.bias};
  WriteTensors(dir / "mlm_head.bin", head);
}

// ---------------------------------------------------------------------------
// Masked-LM adaptation

double MlmReport::base_perplexity() const { return std::exp(base_heldout_loss); }
double MlmReport::adapted_perplexity() const {
  return std::exp(adapted_heldout_loss);
}

double MlmLoss(const Checkpoint& checkpoint,
               std::span<const std::string> texts, double mask_probability,
               int max_seq_length, std::uint64_t seed) {
  Rng rng(seed);
  Checkpoint& scratch = const_cast<Checkpoint&>(checkpoint);
  double sum = 0.0;
  long count = 0;
  for (const auto& text : texts) {
    for (const auto& window :
         TextWindows(checkpoint.tokenizer, text, max_seq_length)) {
      std::vector<int> inputs, targets;
      MaskWindow(window, mask_probability, checkpoint.tokenizer.size(), rng,
                 &inputs, &targets);
      // accumulate=false never touches the gradients.
      const auto [loss, n] =
          MlmBatch(scratch, std::span(&inputs, 1), std::span(&targets, 1), 1.0,
                   false, nullptr);
      sum += loss;
      count += n;
    }
  }
  return count ? sum / count : 0.0;
}

Checkpoint MlmAdapt(const Checkpoint& base, std::span<const std::string> corpus,
                    const ModelConfig& config, std::uint64_t seed,
                    MlmReport* report) {
  config.Validate();
  RequireCpu(config.device);
  CheckSequenceFits(config, base.encoder.config());
  if (corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "MLM corpus is empty");
  }

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  Shuffle(order, rng);
  std::vector<std::string> train_texts;
  std::vector<std::string> heldout_texts;
  const std::size_t n_heldout =
      corpus.size() < 2 ? 0 : std::max<std::size_t>(1, corpus.size() / 10);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_heldout ? heldout_texts : train_texts).push_back(corpus[order[i]]);
  }
  if (heldout_texts.empty()) heldout_texts = train_texts;

  std::vector<std::vector<int>> windows;
  for (const auto& text : train_texts) {
    for (auto& w : TextWindows(base.tokenizer, text, config.max_seq_length)) {
      if (w.size() > 2) windows.push_back(std::move(w));
    }
  }
  if (windows.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "MLM corpus has no maskable tokens (shorter than one batch "
                "element)");
  }

  const std::uint64_t eval_seed = seed ^ 0x9E3779B97F4A7C15ULL;
  MlmReport local;
  local.train_texts = train_texts.size();
  local.heldout_texts = heldout_texts.size();
  local.base_heldout_loss =
      MlmLoss(base, heldout_texts, config.mlm_mask_probability,
              config.max_seq_length, eval_seed);

  Checkpoint adapted = base;
  auto params = CheckpointParameters(adapted);
  ZeroGrads(params);
  nn::AdamW optimizer = MakeOptimizer(config);
  const long total = TotalSteps(windows.size(), config);
  const nn::LinearSchedule schedule(total, WarmupSteps(total, config));
  const int vocab = adapted.tokenizer.size();

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Shuffle(windows, rng);
    int pending = 0;
    for (std::size_t begin = 0; begin < windows.size();
         begin += config.train_batch_size) {
      const std::size_t end =
          std::min(windows.size(), begin + config.train_batch_size);
      std::vector<std::vector<int>> inputs(end - begin), targets(end - begin);
      long masked = 0;
      for (std::size_t i = begin; i < end; ++i) {
        MaskWindow(windows[i], config.mlm_mask_probability, vocab, rng,
                   &inputs[i - begin], &targets[i - begin]);
        masked += std::count_if(targets[i - begin].begin(),
                                targets[i - begin].end(),
                                [](int t) { return t >= 0; });
      }
      MlmBatch(adapted, inputs, targets,
               static_cast<double>(masked) * config.gradient_accumulation_steps,
               true, &rng);
      if (++pending == config.gradient_accumulation_steps ||
          end == windows.size()) {
        nn::ClipGradNorm(params, config.max_grad_norm);
        optimizer.Step(params, schedule.Factor(step));
        ZeroGrads(params);
        ++step;
        pending = 0;
      }
    }
  }
  local.steps = step;
  local.adapted_heldout_loss =
      MlmLoss(adapted, heldout_texts, config.mlm_mask_probability,
              config.max_seq_length, eval_seed);
  spdlog::info("mlm adaptation: {} steps, held-out loss {:.4f} -> {:.4f}",
               step, local.base_heldout_loss, local.adapted_heldout_loss);
  if (report != nullptr) *report = local;
  return adapted;
}

// ---------------------------------------------------------------------------
// Token tagging

nn::Matrix TokenTagger::Logits(std::span<const int> ids) const {
  nn::EncoderState state;
  return head.Forward(encoder.Forward(ids, &state, nullptr));
}

double TokenTagger::BatchLoss(std::span<const Example> batch, bool accumulate,
                              Rng* dropout_rng) {
  const long labeled = CountLabeled(batch);
  if (labeled == 0) return 0.0;
  double loss = 0.0;
  nn::Matrix grad;
  for (const Example& ex : batch) {
    nn::EncoderState state;
    const nn::Matrix hidden = encoder.Forward(ex.ids, &state, dropout_rng);
    const nn::Matrix logits = head.Forward(hidden);
    loss += nn::CrossEntropy(logits, ex.labels, static_cast<double>(labeled),
                             accumulate ? &grad : nullptr);
    if (accumulate) encoder.Backward(head.Backward(hidden, grad), state);
  }
  return loss;
}

std::vector<nn::Parameter*> TokenTagger::Parameters() {
  auto params = encoder.Parameters();
  head.Collect(&params);
  return params;
}

EncodedText EncodeText(const WordPieceTokenizer& tokenizer,
                       std::string_view text) {
  EncodedText enc;
  enc.sequence = TokenizeWithOffsets(text);
  ExpandSubwords(tokenizer, &enc);
  return enc;
}

std::vector<std::pair<int, int>> SlidingWindows(int length, int capacity,
                                                int stride) {
  if (capacity < 1 || stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "window capacity and stride must "
                                             "be positive");
  }
  std::vector<std::pair<int, int>> windows;
  if (length <= 0) return windows;
  if (length <= capacity) return {{0, length}};
  int start = 0;
  while (start + capacity < length) {
    windows.emplace_back(start, start + capacity);
    start += stride;
  }
  windows.emplace_back(length - capacity, length);
  return windows;
}

std::vector<TokenTagger::Example> BuildExamples(
    const WordPieceTokenizer& tokenizer, const LabeledSequence& labeled,
    int max_seq_length) {
  EncodedText enc;
  enc.sequence = labeled;
  ExpandSubwords(tokenizer, &enc);
  std::vector<TokenTagger::Example> examples;
  for (auto [start, end] : SlidingWindows(static_cast<int>(enc.ids.size()),
                                          WindowCapacity(max_seq_length),
                                          WindowStride(max_seq_length))) {
    TokenTagger::Example ex;
    ex.ids = Frame(std::span<const int>(enc.ids).subspan(start, end - start));
    ex.labels.push_back(-1);
    for (int i = start; i < end; ++i) {
      const auto& label = enc.sequence.tokens[enc.owner[i]].label;
      if (!label) {
        throw Error(ErrorCode::kInvalidArgument,
                    "training sequence has an unlabeled token");
      }
      ex.labels.push_back(*label == TokenLabel::kToxic
                              ? TokenTagger::kToxicIndex
                              : TokenTagger::kNotIndex);
    }
    ex.labels.push_back(-1);
    examples.push_back(std::move(ex));
  }
  return examples;
}

// ---------------------------------------------------------------------------
// SpanModel

SpanModel SpanModel::Load(const fs::path& dir) {
  const json config_json = ReadJsonFile(dir / "config.json");
  const json meta = ReadJsonFile(dir / "metadata.json");
  ModelConfig config = ModelConfigFromJson(config_json.at("model"));
  const nn::EncoderConfig arch =
      EncoderConfigFromJson(config_json.at("encoder"));
  WordPieceTokenizer tokenizer = WordPieceTokenizer::Load(
      dir / "vocab.txt", config_json.value("lower_case", false));
  if (tokenizer.size() != arch.vocab_size) {
    throw Error(ErrorCode::kParse,
                dir.string() + ": vocabulary does not match encoder");
  }
  Rng unused(0);
  nn::Encoder encoder(arch, unused);
  nn::Linear head("head", arch.hidden_size, 2, unused);
  ReadTensors(dir / "encoder.bin", encoder.Parameters());
  std::vector<nn::Parameter*> head_params;
  head.Collect(&head_params);
  ReadTensors(dir / "head.bin", head_params);

  TrainingMetadata m;
  try {
    m.seed = meta.value("seed", std::uint64_t{0});
    m.validation_f1 = meta.value("validation_f1", 0.0);
    m.validation_loss = meta.value("validation_loss", 0.0);
    m.steps = meta.value("steps", 0L);
    m.epochs_completed = meta.value("epochs_completed", 0);
    m.stopped_early = meta.value("stopped_early", false);
    m.train_posts = meta.value("train_posts", std::size_t{0});
    m.validation_posts = meta.value("validation_posts", std::size_t{0});
    m.started_at = meta.value("started_at", "");
    m.finished_at = meta.value("finished_at", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, dir.string() + "/metadata.json: " + e.what());
  }
  return SpanModel(std::move(config),
                   TokenTagger(std::move(tokenizer), std::move(encoder),
                               std::move(head)),
                   std::move(m));
}

void SpanModel::Save(const fs::path& dir) const {
  fs::create_directories(dir);
  WriteJsonFile(dir / "config.json",
                {{"model", ToJson(config_)},
                 {"encoder", ToJson(tagger_.encoder.config())},
                 {"lower_case", tagger_.tokenizer.lower_case()},
                 {"labels", {"NOT", "TOXIC"}}});
  tagger_.tokenizer.Save(dir / "vocab.txt");
  WriteTensors(dir / "encoder.bin", tagger_.encoder.Parameters());
  std::vector<const nn::Parameter*> head{&tagger_.head.weight,
                                         &tagger_.head.bias};
  WriteTensors(dir / "head.bin", head);
  WriteJsonFile(dir / "metadata.json",
                {{"seed", metadata_.seed},
                 {"validation_f1", metadata_.validation_f1},
                 {"validation_loss", metadata_.validation_loss},
                 {"steps", metadata_.steps},
                 {"epochs_completed", metadata_.epochs_completed},
                 {"stopped_early", metadata_.stopped_early},
                 {"train_posts", metadata_.train_posts},
                 {"validation_posts", metadata_.validation_posts},
                 {"started_at", metadata_.started_at},
                 {"finished_at", metadata_.finished_at}});
}

TokenPrediction SpanModel::PredictTokens(std::string_view text) const {
  const EncodedText enc = EncodeText(tagger_.tokenizer, text);
  const std::size_t n_tokens = enc.sequence.tokens.size();
  std::vector<double> p_toxic(n_tokens, -1.0);
  std::vector<double> p_not(n_tokens, 0.0);
  for (auto [start, end] : SlidingWindows(
           static_cast<int>(enc.ids.size()),
           WindowCapacity(config_.max_seq_length),
           WindowStride(config_.max_seq_length))) {
    const auto framed =
        Frame(std::span<const int>(enc.ids).subspan(start, end - start));
    const nn::Matrix probs = nn::Softmax(tagger_.Logits(framed));
    for (int i = start; i < end; ++i) {
      const int token = enc.owner[i];
      if (enc.first_subtoken[token] != i) continue;
      const double toxic = probs(i - start + 1, TokenTagger::kToxicIndex);
      if (toxic > p_toxic[token]) {
        p_toxic[token] = toxic;
        p_not[token] = probs(i - start + 1, TokenTagger::kNotIndex);
      }
    }
  }
  TokenPrediction prediction;
  prediction.tokens.reserve(n_tokens);
  for (std::size_t t = 0; t < n_tokens; ++t) {
    TokenScore score{enc.sequence.tokens[t], p_not[t], p_toxic[t]};
    score.token.label =
        p_toxic[t] > p_not[t] ? TokenLabel::kToxic : TokenLabel::kNot;
    prediction.tokens.push_back(std::move(score));
  }
  return prediction;
}

SpanSet SpanModel::Predict(std::string_view text, bool merge_adjacent) const {
  LabeledSequence labeled;
  labeled.text = std::string(text);
  for (auto& score : PredictTokens(text).tokens) {
    labeled.tokens.push_back(std::move(score.token));
  }
  return LabelsToSpans(labeled, merge_adjacent);
}

// ---------------------------------------------------------------------------
// Training

SpanModel Train(const Dataset& dataset, const Checkpoint& base,
                const ModelConfig& config, std::uint64_t seed,
                const TrainObserver& observer) {
  config.Validate();
  RequireCpu(config.device);
  CheckSequenceFits(config, base.encoder.config());
  if (dataset.granularity != Granularity::kSpan) {
    throw Error(ErrorCode::kInvalidArgument,
                "training requires a span-annotated dataset");
  }
  if (dataset.posts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "training dataset is empty");
  }
  TrainingMetadata metadata;
  metadata.seed = seed;
  metadata.started_at = NowIso8601();

  Dataset train_set;
  Dataset validation_set;
  if (config.train_fraction < 1.0) {
    std::tie(train_set, validation_set) =
        SplitTrainValidation(dataset, config.train_fraction, seed);
  } else {
    train_set = dataset;
    validation_set = dataset;
  }
  metadata.train_posts = train_set.size();
  metadata.validation_posts = validation_set.size();

  auto examples_for = [&](const Dataset& ds) {
    std::vector<TokenTagger::Example> examples;
    for (const Post& post : ds.posts) {
      auto labeled = SpansToLabels(TokenizeWithOffsets(post.text),
                                   post.gold_spans.value_or(SpanSet{}));
      for (auto& ex : BuildExamples(base.tokenizer, labeled,
                                    config.max_seq_length)) {
        examples.push_back(std::move(ex));
      }
    }
    return examples;
  };
  std::vector<TokenTagger::Example> train_examples = examples_for(train_set);
  const std::vector<TokenTagger::Example> validation_examples =
      examples_for(validation_set);
  if (train_examples.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "training dataset contains no tokens");
  }
  long toxic = 0, labeled = 0;
  for (const auto& ex : train_examples) {
    for (int l : ex.labels) {
      labeled += l >= 0;
      toxic += l == TokenTagger::kToxicIndex;
    }
  }
  if (toxic == 0 || toxic == labeled) {
    spdlog::warn("training data contains a single token class ({}); "
                 "training anyway",
                 toxic == 0 ? "NOT" : "TOXIC");
  }

  Rng rng(seed);
  TokenTagger tagger(
      base.tokenizer, base.encoder,
      nn::Linear("head", base.encoder.config().hidden_size, 2, rng));
  auto params = tagger.Parameters();
  ZeroGrads(params);
  nn::AdamW optimizer = MakeOptimizer(config);
  const long total = TotalSteps(train_examples.size(), config);
  const nn::LinearSchedule schedule(total, WarmupSteps(total, config));

  nn::Encoder best_encoder = tagger.encoder;
  nn::Linear best_head = tagger.head;
  double best_loss = std::numeric_limits<double>::infinity();
  int evaluations_without_improvement = 0;
  long step = 0;
  long last_eval_step = -1;
  bool stop = false;

  auto evaluate = [&](int epoch) {
    last_eval_step = step;
    const double loss =
        tagger.BatchLoss(validation_examples, false, nullptr);
    if (observer) observer({TrainEvent::kEvaluation, step, epoch, loss});
    if (loss < best_loss) {
      best_loss = loss;
      best_encoder = tagger.encoder;
      best_head = tagger.head;
      evaluations_without_improvement = 0;
    } else if (config.early_stop_patience > 0 &&
               ++evaluations_without_improvement >=
                   config.early_stop_patience) {
      stop = true;
    }
  };

  int epoch = 0;
  for (; epoch < config.epochs && !stop; ++epoch) {
    Shuffle(train_examples, rng);
    int pending = 0;
    double pending_loss = 0.0;
    for (std::size_t begin = 0; begin < train_examples.size() && !stop;
         begin += config.train_batch_size) {
      const std::size_t end =
          std::min(train_examples.size(), begin + config.train_batch_size);
      std::span<const TokenTagger::Example> batch(
          train_examples.data() + begin, end - begin);
      // Scale so that accumulated gradients average over the batches.
      const double batch_loss = tagger.BatchLoss(batch, true, &rng);
      if (config.gradient_accumulation_steps > 1) {
        for (nn::Parameter* p : params) {
          p->grad *= 1.0 / config.gradient_accumulation_steps;
        }
      }
      pending_loss += batch_loss;
      if (++pending == config.gradient_accumulation_steps ||
          end == train_examples.size()) {
        nn::ClipGradNorm(params, config.max_grad_norm);
        optimizer.Step(params, schedule.Factor(step));
        ZeroGrads(params);
        ++step;
        if (observer) {
          observer({TrainEvent::kStep, step, epoch, pending_loss / pending});
        }
        pending = 0;
        pending_loss = 0.0;
        if (config.evaluate_every_steps > 0 &&
            step % config.evaluate_every_steps == 0) {
          evaluate(epoch);
        }
      }
    }
    if (!stop && last_eval_step != step) evaluate(epoch);
  }
  metadata.epochs_completed = epoch;
  metadata.stopped_early = stop;
  metadata.steps = step;
  metadata.validation_loss = best_loss;
  tagger.encoder = std::move(best_encoder);
  tagger.head = std::move(best_head);
  for (nn::Parameter* p : tagger.Parameters()) p->grad.resize(0, 0);

  SpanModel model(config, std::move(tagger), metadata);
  double f1_sum = 0.0;
  for (const Post& post : validation_set.posts) {
    f1_sum += SpanF1(model.Predict(post.text),
                     post.gold_spans.value_or(SpanSet{}))
                  .f1;
  }
  metadata.validation_f1 =
      validation_set.posts.empty() ? 0.0 : f1_sum / validation_set.size();
  metadata.finished_at = NowIso8601();
  spdlog::info("seed {}: {} steps, validation loss {:.4f}, span F1 {:.4f}",
               seed, step, best_loss, metadata.validation_f1);
  return SpanModel(model.config(), model.tagger(), metadata);
}

// ---------------------------------------------------------------------------
// Ensembles

TokenLabel MajorityLabel(std::span<const TokenLabel> votes) {
  if (votes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no votes to aggregate");
  }
  const auto toxic = std::count(votes.begin(), votes.end(), TokenLabel::kToxic);
  return 2 * static_cast<std::size_t>(toxic) > votes.size() ? TokenLabel::kToxic
                                                            : TokenLabel::kNot;
}

Ensemble::Ensemble(std::vector<std::shared_ptr<const SpanModel>> members)
    : members_(std::move(members)) {
  if (members_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "an ensemble needs >= 1 model");
  }
}

Ensemble Ensemble::Load(const fs::path& dir) {
  std::vector<std::shared_ptr<const SpanModel>> members;
  const fs::path manifest = dir / "ensemble.json";
  if (fs::exists(manifest)) {
    const json j = ReadJsonFile(manifest);
    if (!j.contains("members") || !j["members"].is_array()) {
      throw Error(ErrorCode::kParse, manifest.string() + ": no member list");
    }
    for (const auto& name : j["members"]) {
      members.push_back(std::make_shared<const SpanModel>(
          SpanModel::Load(dir / name.get<std::string>())));
    }
  } else if (fs::exists(dir / "config.json")) {
    members.push_back(std::make_shared<const SpanModel>(SpanModel::Load(dir)));
  } else {
    throw Error(ErrorCode::kNotFound,
                dir.string() + " is not a model or ensemble directory");
  }
  return Ensemble(std::move(members));
}

LabeledSequence Ensemble::PredictLabels(std::string_view text) const {
  std::vector<TokenPrediction> predictions;
  predictions.reserve(members_.size());
  for (const auto& model : members_) {
    predictions.push_back(model->PredictTokens(text));
  }
  LabeledSequence labeled;
  labeled.text = std::string(text);
  const std::size_t n = predictions.front().tokens.size();
  std::vector<TokenLabel> votes(members_.size());
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t m = 0; m < members_.size(); ++m) {
      votes[m] = *predictions[m].tokens[t].token.label;
    }
    AlignedToken token = predictions.front().tokens[t].token;
    token.label = MajorityLabel(votes);
    labeled.tokens.push_back(std::move(token));
  }
  return labeled;
}

SpanSet Ensemble::Predict(std::string_view text, bool merge_adjacent) const {
  return LabelsToSpans(PredictLabels(text), merge_adjacent);
}

SpanSet EnsemblePredict(std::span<const SpanModel* const> models,
                        std::string_view text, bool merge_adjacent) {
  std::vector<std::shared_ptr<const SpanModel>> members;
  for (const SpanModel* m : models) {
    // Non-owning: the caller keeps the models alive for this call.
    members.emplace_back(m, [](const SpanModel*) {});
  }
  return Ensemble(std::move(members)).Predict(text, merge_adjacent);
}

void WriteEnsembleManifest(const fs::path& dir,
                           std::span<const std::string> names,
                           std::span<const std::uint64_t> seeds) {
  fs::create_directories(dir);
  WriteJsonFile(dir / "ensemble.json",
                {{"members", std::vector<std::string>(names.begin(), names.end())},
                 {"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())},
                 {"vote", "mode; ties resolve to NOT"}});
}

}  // namespace offspan
