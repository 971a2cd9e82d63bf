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

#include "offspan/offspan.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "spdlog/spdlog.h"

#include "offspan/bench.h"
#include "offspan/bundle.h"
#include "offspan/corpus.h"
#include "offspan/error.h"
#include "offspan/lexicon.h"
#include "offspan/metrics.h"
#include "offspan/model.h"
#include "offspan/postlevel.h"
#include "offspan/registry.h"
#include "offspan/service.h"
#include "offspan/unicode.h"

struct osp_dataset {
  offspan::Dataset dataset;
};

struct osp_model {
  std::shared_ptr<const offspan::Ensemble> ensemble;
};

struct osp_registry {
  std::shared_ptr<offspan::Registry> registry;
};

struct osp_service {
  std::unique_ptr<offspan::SpanService> service;
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using offspan::Error;
using offspan::ErrorCode;

thread_local std::string g_last_error;

osp_status StatusOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return OSP_ERR_INVALID_ARGUMENT;
    case ErrorCode::kParse: return OSP_ERR_PARSE;
    case ErrorCode::kValidation: return OSP_ERR_VALIDATION;
    case ErrorCode::kNotFound: return OSP_ERR_NOT_FOUND;
    case ErrorCode::kIntegrity: return OSP_ERR_INTEGRITY;
    case ErrorCode::kIo: return OSP_ERR_IO;
    case ErrorCode::kRuntime: return OSP_ERR_RUNTIME;
    case ErrorCode::kUnavailable: return OSP_ERR_UNAVAILABLE;
  }
  return OSP_ERR_RUNTIME;
}

template <typename Fn>
osp_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return OSP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return StatusOf(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return OSP_ERR_PARSE;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return OSP_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OSP_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return OSP_ERR_RUNTIME;
  }
}

void Require(bool condition, const char* what) {
  if (!condition) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what));
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void Emit(char** out, const json& j) { *out = Dup(j.dump()); }

json ParseOptional(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  json j = json::parse(text);
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "expected a JSON object");
  }
  return j;
}

offspan::SpanSet ParseOffsets(const char* text) {
  const json j = json::parse(text);
  if (!j.is_array()) {
    throw Error(ErrorCode::kInvalidArgument, "expected an offset array");
  }
  return offspan::SpanSet::FromOffsets(j.get<std::vector<offspan::Offset>>());
}

json SpansJson(const offspan::SpanSet& spans) {
  return {{"offsets", spans.offsets()}, {"spans", offspan::SpanPairs(spans)}};
}

std::ofstream OpenOut(const char* path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
  return out;
}

json ScoreJson(const offspan::SpanScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

extern "C" {

const char* osp_version(void) { return "0.1.0"; }

const char* osp_status_name(osp_status status) {
  switch (status) {
    case OSP_OK: return "ok";
    case OSP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case OSP_ERR_PARSE: return "parse_error";
    case OSP_ERR_VALIDATION: return "validation_error";
    case OSP_ERR_NOT_FOUND: return "not_found";
    case OSP_ERR_INTEGRITY: return "integrity_error";
    case OSP_ERR_IO: return "io_error";
    case OSP_ERR_RUNTIME: return "runtime_error";
    case OSP_ERR_UNAVAILABLE: return "unavailable";
  }
  return "unknown";
}

const char* osp_last_error(void) { return g_last_error.c_str(); }

void osp_string_free(char* s) { std::free(s); }

osp_status osp_set_log_level(const char* level) {
  return Guard([&] {
    Require(level != nullptr, "level is null");
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(parsed);
  });
}

// ---- datasets --------------------------------------------------------------

osp_status osp_dataset_load(const char* path, const char* options_json,
                            osp_dataset** out) {
  return Guard([&] {
    Require(path != nullptr && out != nullptr, "null argument");
    const json o = ParseOptional(options_json);
    offspan::LoadOptions options;
    options.name = o.value("name", fs::path(path).stem().string());
    options.language = o.value("language", options.language);
    options.lenient = o.value("lenient", false);
    offspan::PostSchema schema;
    if (o.contains("schema")) {
      const json& s = o["schema"];
      schema.id_column = s.value("id_column", schema.id_column);
      schema.text_column = s.value("text_column", schema.text_column);
      schema.label_column = s.value("label_column", schema.label_column);
    }
    auto handle = std::make_unique<osp_dataset>();
    handle->dataset = offspan::LoadDataset(path, options, schema);
    *out = handle.release();
  });
}

void osp_dataset_free(osp_dataset* dataset) { delete dataset; }

size_t osp_dataset_size(const osp_dataset* dataset) {
  return dataset ? dataset->dataset.size() : 0;
}

osp_status osp_dataset_info(const osp_dataset* dataset, char** out) {
  return Guard([&] {
    Require(dataset != nullptr && out != nullptr, "null argument");
    const auto& d = dataset->dataset;
    Emit(out, {{"name", d.name},
               {"language", d.language},
               {"granularity",
                d.granularity == offspan::Granularity::kSpan ? "SPAN" : "POST"},
               {"size", d.size()}});
  });
}

osp_status osp_dataset_write_jsonl(const osp_dataset* dataset,
                                   const char* path) {
  return Guard([&] {
    Require(dataset != nullptr && path != nullptr, "null argument");
    auto out = OpenOut(path);
    offspan::WriteJsonl(dataset->dataset, out);
  });
}

// ---- metrics ---------------------------------------------------------------

osp_status osp_span_f1(const char* pred_json, const char* gold_json,
                       double* f1) {
  return Guard([&] {
    Require(pred_json && gold_json && f1, "null argument");
    *f1 = offspan::SpanF1(ParseOffsets(pred_json), ParseOffsets(gold_json)).f1;
  });
}

osp_status osp_evaluate(const char* predictions_path, const osp_dataset* gold,
                        int post_level, char** report_json) {
  return Guard([&] {
    Require(predictions_path && gold && report_json, "null argument");
    std::ifstream in(predictions_path);
    if (!in) {
      throw Error(ErrorCode::kIo,
                  std::string("cannot open ") + predictions_path);
    }
    std::map<std::string, offspan::SpanSet> spans;
    std::map<std::string, offspan::PostLabel> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string(predictions_path) +
                                           ":" + std::to_string(line_no) +
                                           ": " + e.what());
      }
      const std::string id = j.at("id").is_string()
                                 ? j["id"].get<std::string>()
                                 : j["id"].dump();
      offspan::SpanSet set = offspan::SpanSet::FromOffsets(
          j.value("spans", std::vector<offspan::Offset>{}));
      if (j.contains("label")) {
        auto label = offspan::ParsePostLabel(j["label"].get<std::string>());
        if (!label) {
          throw Error(ErrorCode::kParse,
                      std::string(predictions_path) + ":" +
                          std::to_string(line_no) + ": unmapped label");
        }
        labels[id] = *label;
      } else {
        labels[id] = offspan::ToPostLabel(set);
      }
      spans[id] = std::move(set);
    }
    if (post_level) {
      offspan::CrossDomainReport report;
      report.dataset = gold->dataset.name;
      report.model = fs::path(predictions_path).filename().string();
      report.scores = offspan::MacroF1(labels, gold->dataset);
      Emit(report_json, report.ToJson());
      return;
    }
    const offspan::EvalReport report =
        offspan::EvaluateSpans(spans, gold->dataset);
    json per_post = json::array();
    for (const auto& [id, score] : report.per_post) {
      json entry = ScoreJson(score);
      entry["id"] = id;
      per_post.push_back(std::move(entry));
    }
    Emit(report_json, {{"dataset", gold->dataset.name},
                       {"n_posts", report.n_posts},
                       {"mean_f1", report.mean_f1},
                       {"per_post", std::move(per_post)}});
  });
}

// ---- lexicon ---------------------------------------------------------------

osp_status osp_lexicon_predict(const char* const* lexicon_paths,
                               size_t n_paths, const osp_dataset* dataset,
                               const char* out_path) {
  return Guard([&] {
    Require(lexicon_paths && n_paths > 0 && dataset && out_path,
            "null argument");
    std::vector<fs::path> paths(lexicon_paths, lexicon_paths + n_paths);
    const offspan::Lexicon lexicon = offspan::Lexicon::Load(paths);
    auto out = OpenOut(out_path);
    for (const auto& post : dataset->dataset.posts) {
      const auto spans = offspan::LexiconDetect(post.text, lexicon);
      out << json{{"id", post.id}, {"spans", spans.offsets()}}.dump() << '\n';
    }
  });
}

// ---- checkpoints and training -----------------------------------------------

osp_status osp_checkpoint_init(const osp_dataset* corpus, const char* id,
                               const char* arch_json, const char* out_dir) {
  return Guard([&] {
    Require(corpus && id && out_dir, "null argument");
    const json a = ParseOptional(arch_json);
    offspan::nn::EncoderConfig arch =
        offspan::nn::EncoderConfig::Preset(a.value("preset", "small"));
    arch.vocab_size = a.value("vocab_size", 8000);
    arch.hidden_size = a.value("hidden_size", arch.hidden_size);
    arch.num_layers = a.value("num_layers", arch.num_layers);
    arch.num_heads = a.value("num_heads", arch.num_heads);
    arch.intermediate_size = a.value("intermediate_size", arch.intermediate_size);
    arch.max_positions = a.value("max_positions", arch.max_positions);
    arch.dropout = a.value("dropout", arch.dropout);
    std::vector<std::string> texts;
    for (const auto& post : corpus->dataset.posts) texts.push_back(post.text);
    offspan::Checkpoint::Initialize(id, texts, arch, a.value("lower_case", false),
                                    a.value("seed", std::uint64_t{42}))
        .Save(out_dir);
  });
}

osp_status osp_train(const osp_dataset* dataset,
                     const char* base_checkpoint_dir, const char* config_json,
                     const char* out_dir, osp_progress_fn progress,
                     void* user_data, char** report_json) {
  return Guard([&] {
    Require(dataset && base_checkpoint_dir && out_dir, "null argument");
    json overrides = ParseOptional(config_json);
    const bool skip_mlm = overrides.value("skip_mlm", false);
    overrides.erase("skip_mlm");
    offspan::ModelConfig config = offspan::ModelConfigFromJson(overrides);
    if (config.base_checkpoint.empty()) {
      config.base_checkpoint = base_checkpoint_dir;
    }
    config.Validate();
    const offspan::Checkpoint base =
        offspan::Checkpoint::Load(base_checkpoint_dir);
    const fs::path out(out_dir);
    fs::create_directories(out);

    json report = {{"dataset", dataset->dataset.name},
                   {"base_checkpoint", config.base_checkpoint},
                   {"config", offspan::ToJson(config)}};
    offspan::Checkpoint adapted = base;
    if (!skip_mlm) {
      std::vector<std::string> texts;
      for (const auto& post : dataset->dataset.posts) texts.push_back(post.text);
      offspan::MlmReport mlm;
      adapted = offspan::MlmAdapt(base, texts, config, config.seeds.front(),
                                  &mlm);
      adapted.id = base.id + "+mlm";
      adapted.Save(out / "adapted-checkpoint");
      report["mlm"] = {{"steps", mlm.steps},
                       {"train_texts", mlm.train_texts},
                       {"heldout_texts", mlm.heldout_texts},
                       {"base_heldout_loss", mlm.base_heldout_loss},
                       {"adapted_heldout_loss", mlm.adapted_heldout_loss},
                       {"base_perplexity", mlm.base_perplexity()},
                       {"adapted_perplexity", mlm.adapted_perplexity()}};
    }

    std::vector<std::string> names;
    json members = json::array();
    for (std::uint64_t seed : config.seeds) {
      offspan::TrainObserver observer;
      if (progress != nullptr) {
        observer = [&](const offspan::TrainEvent& e) {
          const json event = {
              {"seed", seed},
              {"kind", e.kind == offspan::TrainEvent::kStep ? "step" : "eval"},
              {"step", e.step},
              {"epoch", e.epoch},
              {"loss", e.loss}};
          progress(event.dump().c_str(), user_data);
        };
      }
      const offspan::SpanModel model =
          offspan::Train(dataset->dataset, adapted, config, seed, observer);
      const std::string name = "seed-" + std::to_string(seed);
      model.Save(out / name);
      names.push_back(name);
      const auto& m = model.metadata();
      members.push_back({{"name", name},
                         {"seed", seed},
                         {"validation_f1", m.validation_f1},
                         {"validation_loss", m.validation_loss},
                         {"steps", m.steps},
                         {"epochs_completed", m.epochs_completed},
                         {"stopped_early", m.stopped_early},
                         {"train_posts", m.train_posts},
                         {"validation_posts", m.validation_posts}});
    }
    offspan::WriteEnsembleManifest(out, names, config.seeds);
    report["members"] = std::move(members);
    {
      std::ofstream file(out / "validation_report.json");
      file << report.dump(2) << '\n';
    }
    if (report_json != nullptr) Emit(report_json, report);
  });
}

// ---- models ----------------------------------------------------------------

osp_status osp_registry_open(const char* config_path, osp_registry** out) {
  return Guard([&] {
    Require(out != nullptr, "null argument");
    std::optional<fs::path> path;
    if (config_path != nullptr && *config_path != '\0') path = config_path;
    auto handle = std::make_unique<osp_registry>();
    handle->registry = std::make_shared<offspan::Registry>(
        offspan::RegistryOptions::FromConfigFile(path));
    *out = handle.release();
  });
}

void osp_registry_free(osp_registry* registry) { delete registry; }

osp_status osp_registry_list(osp_registry* registry, char** out) {
  return Guard([&] {
    Require(registry && out, "null argument");
    json cards = json::array();
    for (const auto& card : registry->registry->List()) {
      json j = card.ToJson();
      j["available"] = registry->registry->IsAvailable(card);
      cards.push_back(std::move(j));
    }
    Emit(out, cards);
  });
}

osp_status osp_registry_register(osp_registry* registry, const char* name,
                                 const char* artifact_path, char** card_json) {
  return Guard([&] {
    Require(registry && name && artifact_path, "null argument");
    const auto card = registry->registry->Register(name, artifact_path);
    if (card_json != nullptr) Emit(card_json, card.ToJson());
  });
}

osp_status osp_model_resolve(osp_registry* registry, const char* name_or_path,
                             osp_model** out) {
  return Guard([&] {
    Require(registry && name_or_path && out, "null argument");
    auto handle = std::make_unique<osp_model>();
    handle->ensemble = registry->registry->Resolve(name_or_path);
    *out = handle.release();
  });
}

osp_status osp_model_load(const char* dir, osp_model** out) {
  return Guard([&] {
    Require(dir && out, "null argument");
    auto handle = std::make_unique<osp_model>();
    handle->ensemble =
        std::make_shared<const offspan::Ensemble>(offspan::Ensemble::Load(dir));
    *out = handle.release();
  });
}

void osp_model_free(osp_model* model) { delete model; }

size_t osp_model_members(const osp_model* model) {
  return model ? model->ensemble->size() : 0;
}

osp_status osp_model_predict(const osp_model* model, const char* text,
                             int merge_adjacent, char** result_json) {
  return Guard([&] {
    Require(model && text && result_json, "null argument");
    Emit(result_json,
         SpansJson(model->ensemble->Predict(text, merge_adjacent != 0)));
  });
}

osp_status osp_model_predict_dataset(const osp_model* model,
                                     const osp_dataset* dataset,
                                     int merge_adjacent, const char* out_path) {
  return Guard([&] {
    Require(model && dataset && out_path, "null argument");
    auto out = OpenOut(out_path);
    for (const auto& post : dataset->dataset.posts) {
      const auto spans = model->ensemble->Predict(post.text, merge_adjacent != 0);
      out << json{{"id", post.id},
                  {"spans", spans.offsets()},
                  {"ranges", offspan::SpanPairs(spans)}}
                 .dump()
          << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, std::string("failed writing ") + out_path);
  });
}

osp_status osp_model_evaluate_posts(const osp_model* model,
                                    const osp_dataset* dataset,
                                    const char* model_name,
                                    char** report_json) {
  return Guard([&] {
    Require(model && dataset && report_json, "null argument");
    Emit(report_json,
         offspan::EvaluateCrossDomain(*model->ensemble, dataset->dataset,
                                      model_name ? model_name : "")
             .ToJson());
  });
}

osp_status osp_model_bench(const osp_model* model, const osp_dataset* dataset,
                           size_t n, size_t warmup, const char* model_name,
                           const char* device, char** result_json) {
  return Guard([&] {
    Require(model && result_json, "null argument");
    Require(n > 0, "n must be positive");
    const std::string device_name = device ? device : "cpu";
    if (offspan::ParseDevice(device_name) != offspan::Device::kCpu) {
      throw Error(ErrorCode::kUnavailable,
                  "accelerator device requested but this build has only the "
                  "CPU backend");
    }
    std::vector<std::string> pool;
    if (dataset != nullptr) {
      for (const auto& post : dataset->dataset.posts) pool.push_back(post.text);
    } else {
      pool = offspan::DefaultBenchTexts();
    }
    Require(!pool.empty(), "benchmark corpus is empty");
    std::vector<std::string> texts;
    for (size_t i = 0; i < n; ++i) texts.push_back(pool[i % pool.size()]);
    const auto& ensemble = *model->ensemble;
    offspan::BenchResult result = offspan::RunBenchmark(
        [&ensemble](std::string_view text) { return ensemble.Predict(text); },
        texts, warmup, model_name ? model_name : "model", device_name);
    json j = result.ToJson();
    j["table"] = offspan::FormatBenchTable(std::span(&result, 1));
    Emit(result_json, j);
  });
}

osp_status osp_highlight(const char* text, const char* spans_json, int color,
                         char** out) {
  return Guard([&] {
    Require(text && spans_json && out, "null argument");
    const offspan::SpanSet spans = ParseOffsets(spans_json);
    const std::u32string cps = offspan::DecodeUtf8(text);
    if (!spans.FitsWithin(cps.size())) {
      throw Error(ErrorCode::kValidation, "span offset beyond text length");
    }
    const char* open = color ? "\x1b[1;31m" : "[[";
    const char* close = color ? "\x1b[0m" : "]]";
    std::string rendered;
    std::size_t pos = 0;
    for (const auto& range : spans.Ranges()) {
      rendered += offspan::EncodeUtf8(
          std::u32string_view(cps).substr(pos, range.start - pos));
      rendered += open;
      rendered += offspan::EncodeUtf8(std::u32string_view(cps).substr(
          range.start, range.end - range.start));
      rendered += close;
      pos = static_cast<std::size_t>(range.end);
    }
    rendered += offspan::EncodeUtf8(std::u32string_view(cps).substr(pos));
    *out = Dup(rendered);
  });
}

// ---- bundles ---------------------------------------------------------------

osp_status osp_bundle_pack(const char* dir, const char* bundle_path,
                           char** sha256_hex) {
  return Guard([&] {
    Require(dir && bundle_path, "null argument");
    offspan::PackDirectory(dir, bundle_path);
    if (sha256_hex != nullptr) {
      *sha256_hex = Dup(offspan::Sha256File(bundle_path));
    }
  });
}

osp_status osp_bundle_unpack(const char* bundle_path, const char* dir) {
  return Guard([&] {
    Require(bundle_path && dir, "null argument");
    offspan::UnpackBundle(bundle_path, dir);
  });
}

osp_status osp_sha256_file(const char* path, char** sha256_hex) {
  return Guard([&] {
    Require(path && sha256_hex, "null argument");
    *sha256_hex = Dup(offspan::Sha256File(path));
  });
}

// ---- service ---------------------------------------------------------------

osp_status osp_service_create(osp_registry* registry, const char* config_path,
                              const char* overrides_json, osp_service** out) {
  return Guard([&] {
    Require(registry && out, "null argument");
    std::optional<fs::path> path;
    if (config_path != nullptr && *config_path != '\0') path = config_path;
    offspan::ServiceConfig config = offspan::ServiceConfig::Load(path);
    config.ApplyJson(ParseOptional(overrides_json));
    auto handle = std::make_unique<osp_service>();
    handle->service = std::make_unique<offspan::SpanService>(
        std::move(config), offspan::RegistryBackend(registry->registry));
    *out = handle.release();
  });
}

osp_status osp_service_bind(osp_service* service, int* port) {
  return Guard([&] {
    Require(service && port, "null argument");
    *port = service->service->Bind();
  });
}

osp_status osp_service_serve(osp_service* service) {
  return Guard([&] {
    Require(service != nullptr, "null argument");
    service->service->Serve();
  });
}

void osp_service_stop(osp_service* service) {
  if (service != nullptr) service->service->Stop();
}

void osp_service_free(osp_service* service) { delete service; }

}  // extern "C"
