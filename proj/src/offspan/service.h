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

#ifndef OFFSPAN_SERVICE_H_
#define OFFSPAN_SERVICE_H_

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "offspan/corpus.h"
#include "offspan/model.h"
#include "offspan/registry.h"

namespace httplib {
class Server;
}

namespace offspan {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_text_length = 20000;  // code points
  std::size_t model_cache_size = 2;     // resident models (LRU)
  std::size_t queue_capacity = 32;      // waiting requests per model
  std::size_t worker_threads = 4;
  std::size_t max_page_size = 500;
  std::string default_model = "en-base";
  std::map<std::string, std::filesystem::path> datasets;
  std::optional<std::filesystem::path> static_dir;  // console bundle
  bool log_text = false;  // request bodies stay out of the logs by default

  // JSON file first, then OFFSPAN_PORT, OFFSPAN_MAX_TEXT_LENGTH and
  // OFFSPAN_MODEL_CACHE_SIZE override individual fields.
  static ServiceConfig Load(const std::optional<std::filesystem::path>& path);
  // Overwrites the fields present in `j`.
  void ApplyJson(const nlohmann::json& j);
};

struct ModelSummary {
  std::string name;
  std::string base_checkpoint;
  std::vector<std::string> languages;
  double reported_f1 = 0.0;
  bool available = false;
};

using ModelLoader =
    std::function<std::shared_ptr<const Ensemble>(const std::string& name)>;
using ModelCatalog = std::function<std::vector<ModelSummary>()>;

struct ServiceBackend {
  ModelLoader loader;
  ModelCatalog catalog;
};

ServiceBackend RegistryBackend(std::shared_ptr<Registry> registry);

// Lazily loaded models kept in a bounded LRU. Inference on one model is
// serialized; at most `queue_capacity` callers wait for it.
class ModelPool {
 public:
  struct Slot {
    std::shared_ptr<const Ensemble> model;
    std::mutex inference;
    std::atomic<std::size_t> waiting{0};
  };

  ModelPool(ModelLoader loader, std::size_t capacity,
            std::size_t queue_capacity);

  // Throws Error(kUnavailable) while another caller is loading `name`.
  std::shared_ptr<Slot> Acquire(const std::string& name);

  // Predicts with model `name` under its inference lock.
  SpanSet Predict(const std::string& name, std::string_view text,
                  bool merge_adjacent);

  std::vector<std::string> Resident() const;

 private:
  ModelLoader loader_;
  std::size_t capacity_;
  std::size_t queue_capacity_;
  mutable std::mutex mutex_;
  std::list<std::string> lru_;  // most recent first
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::set<std::string> loading_;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class SpanService {
 public:
  SpanService(ServiceConfig config, ServiceBackend backend);
  ~SpanService();

  SpanService(const SpanService&) = delete;
  SpanService& operator=(const SpanService&) = delete;

  // Transport-independent handlers; the HTTP routes call these.
  HttpReply HandlePredict(const std::string& body);
  HttpReply HandleModels();
  HttpReply HandleDataset(const std::string& name,
                          const std::optional<std::string>& page,
                          const std::optional<std::string>& size);

  // Binds (port 0 picks a free port) and returns the bound port.
  int Bind();
  // Serves until Stop(); call after Bind().
  void Serve();
  void Stop();

  ModelPool& pool() { return pool_; }

 private:
  void InstallRoutes();
  const Dataset* FindDataset(const std::string& name);

  ServiceConfig config_;
  ServiceBackend backend_;
  ModelPool pool_;
  std::mutex datasets_mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::unique_ptr<httplib::Server> server_;
};

// Wire form of a span set: sorted, end-exclusive [start, end) pairs.
nlohmann::json SpanPairs(const SpanSet& spans);

}  // namespace offspan

#endif  // OFFSPAN_SERVICE_H_
