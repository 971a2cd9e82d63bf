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

#ifndef OFFSPAN_REGISTRY_H_
#define OFFSPAN_REGISTRY_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "offspan/model.h"

namespace offspan {

struct ModelCard {
  std::string name;
  std::string base_checkpoint;
  std::vector<std::string> languages;
  double reported_f1 = 0.0;  // provenance only
  std::string uri;           // bundle location; empty when not hosted
  std::string checksum;      // SHA-256 of the bundle
  nlohmann::json config = nlohmann::json::object();
  bool builtin = false;

  nlohmann::json ToJson() const;
  static ModelCard FromJson(const nlohmann::json& j);
};

// The four released model names with their base encoders and reported
// span F1.
std::vector<ModelCard> BuiltinCards();

// Moves bytes from a URI to a local file. Implementations must be safe to
// call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void Fetch(const std::string& uri,
                     const std::filesystem::path& destination) = 0;
};

// file:// URIs, plain paths, and http(s) URLs.
class DefaultTransport : public Transport {
 public:
  void Fetch(const std::string& uri,
             const std::filesystem::path& destination) override;
};

struct RegistryOptions {
  // Highest-precedence cache location (from a config file).
  std::optional<std::filesystem::path> cache_dir;
  // name -> {uri, checksum, config}; overrides and extends built-in cards.
  std::optional<std::filesystem::path> manifest;
  bool offline = false;  // fail instead of fetching
  std::shared_ptr<Transport> transport;

  // Reads {"cache_dir", "manifest", "offline"} from a JSON config file;
  // OFFSPAN_MANIFEST and OFFSPAN_OFFLINE fill in what the file leaves unset.
  static RegistryOptions FromConfigFile(
      const std::optional<std::filesystem::path>& path);
};

// configured > $OFFSPAN_CACHE_DIR > $XDG_CACHE_HOME/offspan >
// $HOME/.cache/offspan.
std::filesystem::path ResolveCacheDir(
    const std::optional<std::filesystem::path>& configured);

class Registry {
 public:
  explicit Registry(RegistryOptions options = {});

  // Built-in cards (after manifest overrides), manifest-only cards, then
  // locally registered cards. Unreadable local cards are skipped.
  std::vector<ModelCard> List() const;
  std::optional<ModelCard> Find(const std::string& name) const;

  // True when the artifact is cached, or fetchable while online.
  bool IsAvailable(const ModelCard& card) const;

  // Copies a model directory or bundle into the cache and records a card.
  ModelCard Register(const std::string& name,
                     const std::filesystem::path& artifact,
                     std::vector<std::string> languages = {"en"});

  // Loads a registered name or a local model/ensemble directory or bundle,
  // fetching and verifying the artifact on first use.
  std::shared_ptr<const Ensemble> Resolve(const std::string& name_or_path);

  // Directory holding the extracted artifact for `card`.
  std::filesystem::path Materialize(const ModelCard& card);

  const std::filesystem::path& cache_dir() const { return cache_dir_; }
  bool offline() const { return options_.offline; }

 private:
  std::filesystem::path ExtractedDir(const std::string& checksum) const;
  std::filesystem::path InstallBundle(const std::filesystem::path& bundle,
                                      const std::string& checksum);
  std::shared_ptr<std::mutex> NameLock(const std::string& name);
  std::map<std::string, ModelCard> ManifestCards() const;

  RegistryOptions options_;
  std::filesystem::path cache_dir_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> name_locks_;
};

}  // namespace offspan

#endif  // OFFSPAN_REGISTRY_H_
