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

// Command-line frontend. Talks to the library only through the C API.

#include <signal.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "offspan/offspan.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::uint64_t> kDefaultSeeds = {777, 1234, 2021, 31337, 4242};

// Carries a failed status out of a subcommand.
struct Failure {
  osp_status status;
  std::string message;
};

int ExitCodeFor(osp_status status) {
  switch (status) {
    case OSP_OK:
      return kExitOk;
    case OSP_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    case OSP_ERR_PARSE:
    case OSP_ERR_VALIDATION:
    case OSP_ERR_NOT_FOUND:
    case OSP_ERR_INTEGRITY:
    case OSP_ERR_IO:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

void Check(osp_status status) {
  if (status != OSP_OK) throw Failure{status, osp_last_error()};
}

std::string TakeString(char* s) {
  std::string out = s ? s : "";
  osp_string_free(s);
  return out;
}

struct DatasetDeleter {
  void operator()(osp_dataset* d) const { osp_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(osp_model* m) const { osp_model_free(m); }
};
struct RegistryDeleter {
  void operator()(osp_registry* r) const { osp_registry_free(r); }
};
struct ServiceDeleter {
  void operator()(osp_service* s) const { osp_service_free(s); }
};
using DatasetPtr = std::unique_ptr<osp_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<osp_model, ModelDeleter>;
using RegistryPtr = std::unique_ptr<osp_registry, RegistryDeleter>;
using ServicePtr = std::unique_ptr<osp_service, ServiceDeleter>;

struct GlobalOptions {
  std::string log_level = "warn";
  std::string registry_config;
};

struct SchemaOptions {
  std::string name;
  std::string language;
  std::string id_column = "id";
  std::string text_column = "text";
  std::string label_column = "label";
  bool lenient = false;

  void AddTo(CLI::App* app) {
    app->add_option("--name", name, "Dataset name (defaults to file stem)");
    app->add_option("--language", language, "BCP-47 language tag");
    app->add_option("--id-column", id_column, "TSV id column")
        ->capture_default_str();
    app->add_option("--text-column", text_column, "TSV text column")
        ->capture_default_str();
    app->add_option("--label-column", label_column, "TSV label column")
        ->capture_default_str();
    app->add_flag("--lenient", lenient, "Skip (and log) unparseable rows");
  }

  std::string Json() const {
    json j = {{"lenient", lenient},
              {"schema",
               {{"id_column", id_column},
                {"text_column", text_column},
                {"label_column", label_column}}}};
    if (!name.empty()) j["name"] = name;
    if (!language.empty()) j["language"] = language;
    return j.dump();
  }
};

DatasetPtr LoadDataset(const std::string& path, const SchemaOptions& schema) {
  osp_dataset* d = nullptr;
  Check(osp_dataset_load(path.c_str(), schema.Json().c_str(), &d));
  return DatasetPtr(d);
}

RegistryPtr OpenRegistry(const GlobalOptions& global) {
  osp_registry* r = nullptr;
  Check(osp_registry_open(
      global.registry_config.empty() ? nullptr : global.registry_config.c_str(),
      &r));
  return RegistryPtr(r);
}

ModelPtr ResolveModel(osp_registry* registry, const std::string& name) {
  osp_model* m = nullptr;
  Check(osp_model_resolve(registry, name.c_str(), &m));
  return ModelPtr(m);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{OSP_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- train -----------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string base;
  std::string config;
  std::string out;
  int seeds = 5;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool skip_mlm = false;
  bool quiet = false;
  SchemaOptions schema;
};

void ProgressPrinter(const char* event_json, void*) {
  const json e = json::parse(event_json);
  if (e["kind"] == "eval") {
    std::fprintf(stderr, "seed %llu step %lld epoch %d: validation loss %.5f\n",
                 static_cast<unsigned long long>(e["seed"].get<std::uint64_t>()),
                 static_cast<long long>(e["step"].get<long>()),
                 e["epoch"].get<int>(), e["loss"].get<double>());
  }
}

int RunTrain(const TrainOptions& o) {
  json config = json::object();
  if (!o.config.empty()) {
    try {
      config = json::parse(ReadFile(o.config));
    } catch (const json::exception& e) {
      throw Failure{OSP_ERR_PARSE, o.config + ": " + e.what()};
    }
  }
  if (o.seeds < 1) throw Failure{OSP_ERR_INVALID_ARGUMENT, "--seeds must be >= 1"};
  if (o.seed || o.seeds != 5 || !config.contains("seeds")) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < o.seeds; ++i) {
      if (o.seed) {
        seeds.push_back(*o.seed + static_cast<std::uint64_t>(i));
      } else if (i < static_cast<int>(kDefaultSeeds.size())) {
        seeds.push_back(kDefaultSeeds[i]);
      } else {
        seeds.push_back(kDefaultSeeds.back() + static_cast<std::uint64_t>(i));
      }
    }
    config["seeds"] = seeds;
  }
  if (o.epochs) config["epochs"] = *o.epochs;
  if (o.skip_mlm) config["skip_mlm"] = true;
  DatasetPtr dataset = LoadDataset(o.data, o.schema);
  char* report = nullptr;
  Check(osp_train(dataset.get(), o.base.c_str(), config.dump().c_str(),
                  o.out.c_str(), o.quiet ? nullptr : ProgressPrinter, nullptr,
                  &report));
  const json r = json::parse(TakeString(report));
  for (const auto& m : r["members"]) {
    std::printf("%-16s validation span F1 %.4f (%ld steps)\n",
                m["name"].get<std::string>().c_str(),
                m["validation_f1"].get<double>(), m["steps"].get<long>());
  }
  std::printf("ensemble written to %s\n", o.out.c_str());
  return kExitOk;
}

// ---- predict ---------------------------------------------------------------

struct PredictOptions {
  std::string model;
  std::optional<std::string> text;
  std::string in;
  std::string out;
  bool merge_adjacent = false;
  bool color = false;
  SchemaOptions schema;
};

int RunPredict(const PredictOptions& o, const GlobalOptions& global) {
  if (!o.text && o.in.empty()) {
    throw Failure{OSP_ERR_INVALID_ARGUMENT, "give --text or --in/--out"};
  }
  if (!o.in.empty() && o.out.empty()) {
    throw Failure{OSP_ERR_INVALID_ARGUMENT, "--in requires --out"};
  }
  RegistryPtr registry = OpenRegistry(global);
  ModelPtr model = ResolveModel(registry.get(), o.model);
  if (o.text) {
    char* result = nullptr;
    Check(osp_model_predict(model.get(), o.text->c_str(), o.merge_adjacent,
                            &result));
    const json r = json::parse(TakeString(result));
    char* highlighted = nullptr;
    Check(osp_highlight(o.text->c_str(), r["offsets"].dump().c_str(), o.color,
                        &highlighted));
    std::printf("%s\n", TakeString(highlighted).c_str());
    std::printf("offsets: %s\n", r["offsets"].dump().c_str());
    std::string ranges;
    for (const auto& pair : r["spans"]) {
      if (!ranges.empty()) ranges += ", ";
      ranges += "[" + std::to_string(pair[0].get<int>()) + ", " +
                std::to_string(pair[1].get<int>()) + ")";
    }
    std::printf("spans: [%s]\n", ranges.c_str());
    return kExitOk;
  }
  DatasetPtr dataset = LoadDataset(o.in, o.schema);
  Check(osp_model_predict_dataset(model.get(), dataset.get(), o.merge_adjacent,
                                  o.out.c_str()));
  std::fprintf(stderr, "wrote %zu predictions to %s\n",
               osp_dataset_size(dataset.get()), o.out.c_str());
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateOptions {
  std::string pred;
  std::string gold;
  bool post_level = false;
  bool json_output = false;
  SchemaOptions schema;
};

int RunEvaluate(const EvaluateOptions& o) {
  DatasetPtr gold = LoadDataset(o.gold, o.schema);
  char* report = nullptr;
  Check(osp_evaluate(o.pred.c_str(), gold.get(), o.post_level, &report));
  const json r = json::parse(TakeString(report));
  if (o.json_output) {
    std::printf("%s\n", r.dump(2).c_str());
  } else if (o.post_level) {
    std::printf("dataset   %s\n", r["dataset"].get<std::string>().c_str());
    std::printf("macro F1  %.4f\n", r["macro_f1"].get<double>());
    for (const char* cls : {"OFF", "NOT"}) {
      const auto& c = r["per_class"][cls];
      std::printf("%-4s P %.4f  R %.4f  F1 %.4f\n", cls, c["p"].get<double>(),
                  c["r"].get<double>(), c["f1"].get<double>());
    }
    const auto& m = r["confusion"];
    std::printf("confusion [[tp %d, fp %d], [fn %d, tn %d]]\n",
                m[0][0].get<int>(), m[0][1].get<int>(), m[1][0].get<int>(),
                m[1][1].get<int>());
  } else {
    std::printf("dataset     %s\n", r["dataset"].get<std::string>().c_str());
    std::printf("posts       %zu\n", r["n_posts"].get<std::size_t>());
    std::printf("mean F1     %.4f\n", r["mean_f1"].get<double>());
  }
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchOptions {
  std::string model;
  std::size_t n = 100;
  std::size_t warmup = 2;
  std::string device = "cpu";
  std::string data;
  bool json_output = false;
  SchemaOptions schema;
};

int RunBench(const BenchOptions& o, const GlobalOptions& global) {
  RegistryPtr registry = OpenRegistry(global);
  ModelPtr model = ResolveModel(registry.get(), o.model);
  DatasetPtr dataset;
  if (!o.data.empty()) dataset = LoadDataset(o.data, o.schema);
  char* result = nullptr;
  Check(osp_model_bench(model.get(), dataset.get(), o.n, o.warmup,
                        o.model.c_str(), o.device.c_str(), &result));
  const json r = json::parse(TakeString(result));
  if (o.json_output) {
    json copy = r;
    copy.erase("table");
    std::printf("%s\n", copy.dump(2).c_str());
  } else {
    std::printf("%s", r["table"].get<std::string>().c_str());
    const auto& t = r["per_text_seconds"];
    std::printf("n=%zu total %.4fs  mean %.4fs  p50 %.4fs  p95 %.4fs\n",
                r["n_texts"].get<std::size_t>(),
                r["total_seconds"].get<double>(), t["mean"].get<double>(),
                t["p50"].get<double>(), t["p95"].get<double>());
  }
  return kExitOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeOptions {
  std::string config;
  std::optional<std::string> host;
  std::optional<int> port;
  std::vector<std::string> datasets;
  std::string static_dir;
  std::optional<std::size_t> cache_size;
};

int RunServe(const ServeOptions& o, const GlobalOptions& global) {
  json overrides = json::object();
  if (o.host) overrides["host"] = *o.host;
  if (o.port) overrides["port"] = *o.port;
  if (o.cache_size) overrides["model_cache_size"] = *o.cache_size;
  if (!o.static_dir.empty()) overrides["static_dir"] = o.static_dir;
  for (const std::string& spec : o.datasets) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Failure{OSP_ERR_INVALID_ARGUMENT,
                    "--dataset expects NAME=PATH, got '" + spec + "'"};
    }
    overrides["datasets"][spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  RegistryPtr registry = OpenRegistry(global);
  osp_service* raw = nullptr;
  Check(osp_service_create(registry.get(),
                           o.config.empty() ? nullptr : o.config.c_str(),
                           overrides.dump().c_str(), &raw));
  ServicePtr service(raw);
  int port = 0;
  Check(osp_service_bind(service.get(), &port));
  std::fprintf(stderr, "listening on port %d\n", port);

  // Stop cleanly on SIGINT/SIGTERM from a dedicated thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    osp_service_stop(service.get());
  });
  const osp_status status = osp_service_serve(service.get());
  if (watcher.joinable()) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
  }
  Check(status);
  return kExitOk;
}

// ---- models ----------------------------------------------------------------

int RunModelsList(const GlobalOptions& global, bool json_output) {
  RegistryPtr registry = OpenRegistry(global);
  char* list = nullptr;
  Check(osp_registry_list(registry.get(), &list));
  const json cards = json::parse(TakeString(list));
  if (json_output) {
    std::printf("%s\n", cards.dump(2).c_str());
    return kExitOk;
  }
  std::printf("%-20s %-20s %-10s %s\n", "name", "base", "span F1", "status");
  for (const auto& c : cards) {
    std::printf("%-20s %-20s %-10.4f %s\n",
                c["name"].get<std::string>().c_str(),
                c["base_checkpoint"].get<std::string>().c_str(),
                c["reported_f1"].get<double>(),
                c["available"].get<bool>() ? "available" : "unavailable");
  }
  return kExitOk;
}

int RunModelsRegister(const GlobalOptions& global, const std::string& name,
                      const std::string& artifact) {
  RegistryPtr registry = OpenRegistry(global);
  char* card = nullptr;
  Check(osp_registry_register(registry.get(), name.c_str(), artifact.c_str(),
                              &card));
  std::printf("%s\n", json::parse(TakeString(card)).dump(2).c_str());
  return kExitOk;
}

// ---- init-checkpoint ---------------------------------------------------------

struct InitOptions {
  std::string corpus;
  std::string out;
  std::string id;
  std::string preset = "small";
  int vocab_size = 8000;
  std::optional<int> max_positions;
  bool lower_case = false;
  std::uint64_t seed = 42;
  SchemaOptions schema;
};

int RunInit(const InitOptions& o) {
  DatasetPtr corpus = LoadDataset(o.corpus, o.schema);
  json arch = {{"preset", o.preset},
               {"vocab_size", o.vocab_size},
               {"lower_case", o.lower_case},
               {"seed", o.seed}};
  if (o.max_positions) arch["max_positions"] = *o.max_positions;
  const std::string id = o.id.empty() ? "offspan-" + o.preset : o.id;
  Check(osp_checkpoint_init(corpus.get(), id.c_str(), arch.dump().c_str(),
                            o.out.c_str()));
  std::printf("checkpoint '%s' written to %s\n", id.c_str(), o.out.c_str());
  return kExitOk;
}

// ---- lexicon -----------------------------------------------------------------

int RunLexicon(const std::vector<std::string>& lexicons, const std::string& data,
               const std::string& out, const SchemaOptions& schema) {
  DatasetPtr dataset = LoadDataset(data, schema);
  std::vector<const char*> paths;
  for (const auto& p : lexicons) paths.push_back(p.c_str());
  Check(osp_lexicon_predict(paths.data(), paths.size(), dataset.get(),
                            out.c_str()));
  std::fprintf(stderr, "wrote %zu predictions to %s\n",
               osp_dataset_size(dataset.get()), out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offensive span detection: train, predict, evaluate, "
               "benchmark and serve span models."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(osp_version()));
  GlobalOptions global;
  app.add_option("--log-level", global.log_level,
                 "trace, debug, info, warn, error or off")
      ->capture_default_str();
  app.add_option("--registry-config", global.registry_config,
                 "Registry config JSON {cache_dir, manifest, offline}");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand(
      "train", "Masked-LM adaptation then one tagger per seed; writes an "
               "ensemble directory");
  train_cmd->add_option("--data", train.data, "Span CSV / JSON-lines")->required();
  train_cmd->add_option("--base", train.base, "Base checkpoint directory")
      ->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--config", train.config, "Hyperparameter JSON file");
  train_cmd->add_option("--seeds", train.seeds, "Number of seeded runs")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed,
                        "First seed; runs use seed, seed+1, ...");
  train_cmd->add_option("--epochs", train.epochs, "Override the epoch count");
  train_cmd->add_flag("--skip-mlm", train.skip_mlm,
                      "Skip the masked-LM adaptation phase");
  train_cmd->add_flag("--quiet", train.quiet, "No per-evaluation progress");
  train.schema.AddTo(train_cmd);

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict offensive spans");
  predict_cmd->add_option("--model", predict.model,
                          "Registered model name or model/ensemble path")
      ->required();
  auto* text_opt =
      predict_cmd->add_option("--text", predict.text, "A single text");
  auto* in_opt = predict_cmd->add_option("--in", predict.in,
                                         "Input dataset (JSON-lines output)");
  predict_cmd->add_option("--out", predict.out, "JSON-lines output file");
  text_opt->excludes(in_opt);
  predict_cmd->add_flag("--merge-adjacent", predict.merge_adjacent,
                        "Also mark whitespace between adjacent toxic tokens");
  predict_cmd->add_flag("--color", predict.color,
                        "Highlight in red instead of [[...]] markers");
  predict.schema.AddTo(predict_cmd);

  EvaluateOptions evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score predictions against gold data");
  evaluate_cmd->add_option("--pred", evaluate.pred,
                           "Predictions JSON-lines {id, spans[, label]}")
      ->required();
  evaluate_cmd->add_option("--gold", evaluate.gold, "Gold dataset")->required();
  evaluate_cmd->add_flag("--post-level", evaluate.post_level,
                         "Project spans to OFF/NOT and report macro F1");
  evaluate_cmd->add_flag("--json", evaluate.json_output, "Print the JSON report");
  evaluate.schema.AddTo(evaluate_cmd);

  BenchOptions bench;
  auto* bench_cmd =
      app.add_subcommand("bench", "Per-text latency at batch size 1");
  bench_cmd->add_option("--model", bench.model, "Model name or path")
      ->required();
  bench_cmd->add_option("--n", bench.n, "Number of timed texts")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup calls")
      ->capture_default_str();
  bench_cmd->add_option("--device", bench.device, "cpu or accel")
      ->capture_default_str();
  bench_cmd->add_option("--data", bench.data,
                        "Text source (defaults to built-in samples)");
  bench_cmd->add_flag("--json", bench.json_output, "Print the JSON result");
  bench.schema.AddTo(bench_cmd);

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", serve.config, "Service config JSON");
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--dataset", serve.datasets,
                        "Browsable dataset as NAME=PATH (repeatable)");
  serve_cmd->add_option("--static", serve.static_dir,
                        "Directory with the console bundle");
  serve_cmd->add_option("--model-cache-size", serve.cache_size,
                        "Resident models kept in memory");

  auto* models_cmd = app.add_subcommand("models", "List or register models");
  models_cmd->require_subcommand(1);
  bool models_json = false;
  auto* list_cmd = models_cmd->add_subcommand("list", "List model cards");
  list_cmd->add_flag("--json", models_json, "Print JSON");
  std::string register_name;
  std::string register_path;
  auto* register_cmd = models_cmd->add_subcommand(
      "register", "Add a local model directory or bundle to the cache");
  register_cmd->add_option("name", register_name, "Model name")->required();
  register_cmd->add_option("artifact", register_path, "Directory or bundle")
      ->required();

  InitOptions init;
  auto* init_cmd = app.add_subcommand(
      "init-checkpoint",
      "Bootstrap a base checkpoint (vocabulary from a corpus, random weights)");
  init_cmd->add_option("--corpus", init.corpus, "Dataset whose texts build "
                                                "the vocabulary")
      ->required();
  init_cmd->add_option("--out", init.out, "Output directory")->required();
  init_cmd->add_option("--id", init.id, "Checkpoint id");
  init_cmd->add_option("--preset", init.preset, "tiny, small, base or large")
      ->capture_default_str();
  init_cmd->add_option("--vocab-size", init.vocab_size, "Vocabulary budget")
      ->capture_default_str();
  init_cmd->add_option("--max-positions", init.max_positions,
                       "Position embeddings");
  init_cmd->add_flag("--lower-case", init.lower_case, "Lower-case inputs");
  init_cmd->add_option("--seed", init.seed, "Initialisation seed")
      ->capture_default_str();
  init.schema.AddTo(init_cmd);

  std::vector<std::string> lexicons;
  std::string lexicon_data;
  std::string lexicon_out;
  SchemaOptions lexicon_schema;
  auto* lexicon_cmd = app.add_subcommand(
      "lexicon", "Word-list baseline: mark every lexicon word");
  lexicon_cmd->add_option("--lexicon", lexicons, "Word list (repeatable)")
      ->required();
  lexicon_cmd->add_option("--data", lexicon_data, "Dataset")->required();
  lexicon_cmd->add_option("--out", lexicon_out, "JSON-lines output")->required();
  lexicon_schema.AddTo(lexicon_cmd);

  std::string bundle_a;
  std::string bundle_b;
  auto* bundle_cmd =
      app.add_subcommand("bundle", "Pack, unpack or hash model bundles");
  bundle_cmd->require_subcommand(1);
  auto* pack_cmd = bundle_cmd->add_subcommand("pack", "Directory to bundle");
  pack_cmd->add_option("dir", bundle_a, "Model directory")->required();
  pack_cmd->add_option("bundle", bundle_b, "Bundle file")->required();
  auto* unpack_cmd = bundle_cmd->add_subcommand("unpack", "Bundle to directory");
  unpack_cmd->add_option("bundle", bundle_a, "Bundle file")->required();
  unpack_cmd->add_option("dir", bundle_b, "Target directory")->required();
  auto* hash_cmd = bundle_cmd->add_subcommand("sha256", "Checksum a file");
  hash_cmd->add_option("file", bundle_a, "File")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Check(osp_set_log_level(global.log_level.c_str()));
    if (*train_cmd) return RunTrain(train);
    if (*predict_cmd) return RunPredict(predict, global);
    if (*evaluate_cmd) return RunEvaluate(evaluate);
    if (*bench_cmd) return RunBench(bench, global);
    if (*serve_cmd) return RunServe(serve, global);
    if (*list_cmd) return RunModelsList(global, models_json);
    if (*register_cmd) {
      return RunModelsRegister(global, register_name, register_path);
    }
    if (*init_cmd) return RunInit(init);
    if (*lexicon_cmd) {
      return RunLexicon(lexicons, lexicon_data, lexicon_out, lexicon_schema);
    }
    if (*pack_cmd) {
      char* sha = nullptr;
      Check(osp_bundle_pack(bundle_a.c_str(), bundle_b.c_str(), &sha));
      std::printf("%s  %s\n", TakeString(sha).c_str(), bundle_b.c_str());
      return kExitOk;
    }
    if (*unpack_cmd) {
      Check(osp_bundle_unpack(bundle_a.c_str(), bundle_b.c_str()));
      return kExitOk;
    }
    if (*hash_cmd) {
      char* sha = nullptr;
      Check(osp_sha256_file(bundle_a.c_str(), &sha));
      std::printf("%s  %s\n", TakeString(sha).c_str(), bundle_a.c_str());
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", osp_status_name(f.status),
                 f.message.c_str());
    return ExitCodeFor(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
