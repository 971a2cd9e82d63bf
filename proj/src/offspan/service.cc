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

#include "offspan/service.h"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "httplib.h"
#include "spdlog/spdlog.h"

#include "offspan/error.h"
#include "offspan/unicode.h"

namespace offspan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

HttpReply ErrorReply(int status, const std::string& message,
                     json extra = json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kUnavailable:
      return 503;
    default:
      return 500;
  }
}

std::optional<long> ParseNonNegative(const std::string& s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::size_t EnvSize(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  auto parsed = ParseNonNegative(v);
  if (!parsed) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(*parsed);
}

json PostJson(const Post& post) {
  json j = {{"id", post.id}, {"text", post.text}};
  if (post.gold_spans) {
    j["spans"] = SpanPairs(*post.gold_spans);
    j["offsets"] = post.gold_spans->offsets();
  }
  if (post.label) j["label"] = PostLabelName(*post.label);
  return j;
}

}  // namespace

json SpanPairs(const SpanSet& spans) {
  json pairs = json::array();
  for (const CharRange& r : spans.Ranges()) pairs.push_back({r.start, r.end});
  return pairs;
}

void ServiceConfig::ApplyJson(const json& j) {
  try {
    host = j.value("host", host);
    port = j.value("port", port);
    max_text_length = j.value("max_text_length", max_text_length);
    model_cache_size = j.value("model_cache_size", model_cache_size);
    queue_capacity = j.value("queue_capacity", queue_capacity);
    worker_threads = j.value("worker_threads", worker_threads);
    max_page_size = j.value("max_page_size", max_page_size);
    default_model = j.value("default_model", default_model);
    log_text = j.value("log_text", log_text);
    if (j.contains("static_dir")) {
      static_dir = j["static_dir"].get<std::string>();
    }
    for (const auto& [name, file] :
         j.value("datasets", json::object()).items()) {
      datasets[name] = file.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("service config: ") + e.what());
  }
  if (model_cache_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model cache size must be >= 1");
  }
}

ServiceConfig ServiceConfig::Load(const std::optional<fs::path>& path) {
  ServiceConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path->string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path->string() + ": " + e.what());
    }
    c.ApplyJson(j);
  }
  c.port = static_cast<int>(EnvSize("OFFSPAN_PORT", c.port));
  c.max_text_length = EnvSize("OFFSPAN_MAX_TEXT_LENGTH", c.max_text_length);
  c.model_cache_size = EnvSize("OFFSPAN_MODEL_CACHE_SIZE", c.model_cache_size);
  if (c.model_cache_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model cache size must be >= 1");
  }
  return c;
}

ServiceBackend RegistryBackend(std::shared_ptr<Registry> registry) {
  ServiceBackend backend;
  backend.loader = [registry](const std::string& name) {
    return registry->Resolve(name);
  };
  backend.catalog = [registry]() {
    std::vector<ModelSummary> out;
    for (const ModelCard& card : registry->List()) {
      out.push_back({card.name, card.base_checkpoint, card.languages,
                     card.reported_f1, registry->IsAvailable(card)});
    }
    return out;
  };
  return backend;
}

// ---------------------------------------------------------------------------
// ModelPool

ModelPool::ModelPool(ModelLoader loader, std::size_t capacity,
                     std::size_t queue_capacity)
    : loader_(std::move(loader)),
      capacity_(std::max<std::size_t>(1, capacity)),
      queue_capacity_(std::max<std::size_t>(1, queue_capacity)) {}

std::shared_ptr<ModelPool::Slot> ModelPool::Acquire(const std::string& name) {
  {
    std::lock_guard<std::mutex> guard(mutex_);
    if (auto it = slots_.find(name); it != slots_.end()) {
      lru_.remove(name);
      lru_.push_front(name);
      return it->second;
    }
    if (loading_.count(name)) {
      throw Error(ErrorCode::kUnavailable,
                  "model '" + name + "' is loading; retry shortly");
    }
    loading_.insert(name);
  }
  std::shared_ptr<const Ensemble> model;
  try {
    model = loader_(name);
  } catch (...) {
    std::lock_guard<std::mutex> guard(mutex_);
    loading_.erase(name);
    throw;
  }
  auto slot = std::make_shared<Slot>();
  slot->model = std::move(model);
  std::lock_guard<std::mutex> guard(mutex_);
  loading_.erase(name);
  slots_[name] = slot;
  lru_.push_front(name);
  while (lru_.size() > capacity_) {
    spdlog::info("evicting model '{}' from memory", lru_.back());
    slots_.erase(lru_.back());
    lru_.pop_back();
  }
  return slot;
}

SpanSet ModelPool::Predict(const std::string& name, std::string_view text,
                           bool merge_adjacent) {
  std::shared_ptr<Slot> slot = Acquire(name);
  if (slot->waiting.fetch_add(1) >= queue_capacity_) {
    slot->waiting.fetch_sub(1);
    throw Error(ErrorCode::kUnavailable,
                "model '" + name + "' has too many queued requests");
  }
  std::lock_guard<std::mutex> guard(slot->inference);
  slot->waiting.fetch_sub(1);
  return slot->model->Predict(text, merge_adjacent);
}

std::vector<std::string> ModelPool::Resident() const {
  std::lock_guard<std::mutex> guard(mutex_);
  return {lru_.begin(), lru_.end()};
}

// ---------------------------------------------------------------------------
// SpanService

SpanService::SpanService(ServiceConfig config, ServiceBackend backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      pool_(backend_.loader, config_.model_cache_size, config_.queue_capacity),
      server_(std::make_unique<httplib::Server>()) {
  InstallRoutes();
}

SpanService::~SpanService() { Stop(); }

HttpReply SpanService::HandlePredict(const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception&) {
    return ErrorReply(400, "request body is not valid JSON");
  }
  if (!request.is_object() || !request.contains("text") ||
      !request["text"].is_string()) {
    return ErrorReply(400, "field 'text' (string) is required");
  }
  if (request.contains("model") && !request["model"].is_string()) {
    return ErrorReply(400, "field 'model' must be a string");
  }
  if (request.contains("merge_adjacent") &&
      !request["merge_adjacent"].is_boolean()) {
    return ErrorReply(400, "field 'merge_adjacent' must be a boolean");
  }
  const std::string text = request["text"].get<std::string>();
  const std::string model = request.value("model", config_.default_model);
  const bool merge = request.value("merge_adjacent", false);
  const std::size_t length = CodePointLength(text);
  if (length > config_.max_text_length) {
    return ErrorReply(400, "text has " + std::to_string(length) +
                               " characters; the limit is " +
                               std::to_string(config_.max_text_length));
  }

  std::vector<std::string> names;
  bool known = false;
  for (const auto& summary : backend_.catalog()) {
    names.push_back(summary.name);
    known |= summary.name == model;
  }
  if (!known) {
    return ErrorReply(404, "unknown model '" + model + "'",
                      {{"available", names}});
  }

  const auto start = std::chrono::steady_clock::now();
  SpanSet spans;
  try {
    spans = pool_.Predict(model, text, merge);
  } catch (const Error& e) {
    json extra = json::object();
    if (e.code() == ErrorCode::kNotFound) extra["available"] = names;
    return ErrorReply(StatusFor(e.code()), e.what(), std::move(extra));
  }
  const double latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
  return {200,
          {{"spans", SpanPairs(spans)},
           {"offsets", spans.offsets()},
           {"model", model},
           {"latency_ms", latency_ms}}};
}

HttpReply SpanService::HandleModels() {
  json models = json::array();
  for (const auto& s : backend_.catalog()) {
    models.push_back({{"name", s.name},
                      {"base_checkpoint", s.base_checkpoint},
                      {"languages", s.languages},
                      {"reported_f1", s.reported_f1},
                      {"available", s.available}});
  }
  return {200, std::move(models)};
}

const Dataset* SpanService::FindDataset(const std::string& name) {
  std::lock_guard<std::mutex> guard(datasets_mutex_);
  if (auto it = datasets_.find(name); it != datasets_.end()) {
    return it->second.get();
  }
  auto path = config_.datasets.find(name);
  if (path == config_.datasets.end()) return nullptr;
  LoadOptions options;
  options.name = name;
  auto dataset = std::make_shared<const Dataset>(
      LoadDataset(path->second, options));
  return datasets_.emplace(name, std::move(dataset)).first->second.get();
}

HttpReply SpanService::HandleDataset(const std::string& name,
                                     const std::optional<std::string>& page,
                                     const std::optional<std::string>& size) {
  const auto page_no = page ? ParseNonNegative(*page) : std::optional<long>(0);
  const auto page_size =
      size ? ParseNonNegative(*size)
           : std::optional<long>(std::min<long>(
                 20, static_cast<long>(config_.max_page_size)));
  if (!page_no || !page_size || *page_size == 0 ||
      static_cast<std::size_t>(*page_size) > config_.max_page_size) {
    return ErrorReply(400, "page must be >= 0 and size in [1, " +
                               std::to_string(config_.max_page_size) + "]");
  }
  const Dataset* dataset = nullptr;
  try {
    dataset = FindDataset(name);
  } catch (const Error& e) {
    return ErrorReply(500, std::string("dataset failed to load: ") + e.what());
  }
  if (dataset == nullptr) {
    std::vector<std::string> names;
    for (const auto& [n, _] : config_.datasets) names.push_back(n);
    return ErrorReply(404, "unknown dataset '" + name + "'",
                      {{"available", names}});
  }
  json posts = json::array();
  const std::size_t begin = static_cast<std::size_t>(*page_no) * *page_size;
  for (std::size_t i = begin;
       i < dataset->size() && i < begin + static_cast<std::size_t>(*page_size);
       ++i) {
    posts.push_back(PostJson(dataset->posts[i]));
  }
  return {200,
          {{"dataset", name},
           {"page", *page_no},
           {"size", *page_size},
           {"total", dataset->size()},
           {"posts", std::move(posts)}}};
}

void SpanService::InstallRoutes() {
  httplib::Server& server = *server_;
  const std::size_t threads = std::max<std::size_t>(1, config_.worker_threads);
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server.Post("/api/spans", [this, send](const httplib::Request& req,
                                         httplib::Response& res) {
    send(res, HandlePredict(req.body));
  });
  server.Get("/api/models", [this, send](const httplib::Request&,
                                         httplib::Response& res) {
    send(res, HandleModels());
  });
  server.Get(R"(/api/datasets/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               auto param = [&](const char* key) -> std::optional<std::string> {
                 if (!req.has_param(key)) return std::nullopt;
                 return req.get_param_value(key);
               };
               send(res, HandleDataset(req.matches[1], param("page"),
                                       param("size")));
             });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", "application/json");
  });
  server.Options(R"(/api/.*)", [](const httplib::Request&,
                                  httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  if (config_.static_dir) server.set_mount_point("/", config_.static_dir->string());

  const bool log_text = config_.log_text;
  server.set_logger([log_text](const httplib::Request& req,
                               const httplib::Response& res) {
    if (log_text && req.path == "/api/spans") {
      spdlog::info("{} {} -> {} body={}", req.method, req.path, res.status,
                   req.body);
    } else {
      spdlog::info("{} {} -> {} request_bytes={} response_bytes={}",
                   req.method, req.path, res.status, req.body.size(),
                   res.body.size());
    }
  });
}

int SpanService::Bind() {
  const int port =
      config_.port == 0 ? server_->bind_to_any_port(config_.host)
                        : (server_->bind_to_port(config_.host, config_.port)
                               ? config_.port
                               : -1);
  if (port < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + config_.host + ":" +
                                    std::to_string(config_.port));
  }
  return port;
}

void SpanService::Serve() { server_->listen_after_bind(); }

void SpanService::Stop() {
  if (server_) server_->stop();
}

}  // namespace offspan
