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

#include "offspan/registry.h"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include "httplib.h"
#include "spdlog/spdlog.h"

#include "offspan/bundle.h"
#include "offspan/error.h"

namespace offspan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kCompleteMarker[] = ".complete";

std::optional<std::string> Env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

bool Truthy(const std::string& s) {
  return s == "1" || s == "true" || s == "yes" || s == "on";
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

// Unique sibling path for write-then-rename.
fs::path TempPath(const fs::path& dir, const std::string& stem) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  return dir / (stem + ".tmp-" + std::to_string(rd()) + "-" +
                std::to_string(counter++));
}

std::string NameList(const std::vector<ModelCard>& cards) {
  std::string names;
  for (const auto& card : cards) {
    if (!names.empty()) names += ", ";
    names += card.name;
  }
  return names;
}

}  // namespace

json ModelCard::ToJson() const {
  return {{"name", name},
          {"base_checkpoint", base_checkpoint},
          {"languages", languages},
          {"reported_f1", reported_f1},
          {"uri", uri},
          {"checksum", checksum},
          {"config", config},
          {"builtin", builtin}};
}

ModelCard ModelCard::FromJson(const json& j) {
  ModelCard card;
  try {
    card.name = j.at("name").get<std::string>();
    card.base_checkpoint = j.value("base_checkpoint", "");
    card.languages = j.value("languages", std::vector<std::string>{});
    card.reported_f1 = j.value("reported_f1", 0.0);
    card.uri = j.value("uri", "");
    card.checksum = j.value("checksum", "");
    card.config = j.value("config", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model card: ") + e.what());
  }
  if (card.name.empty()) {
    throw Error(ErrorCode::kParse, "model card without a name");
  }
  return card;
}

std::vector<ModelCard> BuiltinCards() {
  auto card = [](std::string name, std::string base,
                 std::vector<std::string> languages, double f1) {
    ModelCard c;
    c.name = std::move(name);
    c.base_checkpoint = std::move(base);
    c.languages = std::move(languages);
    c.reported_f1 = f1;
    c.builtin = true;
    return c;
  };
  return {card("en-base", "xlnet-base-cased", {"en"}, 0.6734),
          card("en-large", "roberta-large", {"en"}, 0.6886),
          card("multilingual-base", "xlm-roberta-base", {"en", "da", "el"},
               0.6160),
          card("multilingual-large", "xlm-roberta-large", {"en", "da", "el"},
               0.6338)};
}

void DefaultTransport::Fetch(const std::string& uri, const fs::path& dest) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (std::regex_match(uri, m, kUrl)) {
    httplib::Client client(m[1].str());
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    std::ofstream out(dest, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + dest.string());
    auto res = client.Get(m[2].matched ? m[2].str() : "/",
                          [&](const char* data, std::size_t n) {
                            out.write(data, static_cast<std::streamsize>(n));
                            return static_cast<bool>(out);
                          });
    if (!res) {
      throw Error(ErrorCode::kUnavailable,
                  "download of " + uri + " failed: " +
                      httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kUnavailable, "download of " + uri +
                                               " returned HTTP " +
                                               std::to_string(res->status));
    }
    return;
  }
  fs::path source = uri.rfind("file://", 0) == 0 ? fs::path(uri.substr(7))
                                                 : fs::path(uri);
  if (!fs::is_regular_file(source)) {
    throw Error(ErrorCode::kNotFound, "artifact " + uri + " does not exist");
  }
  fs::copy_file(source, dest, fs::copy_options::overwrite_existing);
}

RegistryOptions RegistryOptions::FromConfigFile(
    const std::optional<fs::path>& path) {
  RegistryOptions options;
  if (path) {
    const json j = ReadJson(*path);
    if (j.contains("cache_dir")) {
      options.cache_dir = fs::path(j["cache_dir"].get<std::string>());
    }
    if (j.contains("manifest")) {
      options.manifest = fs::path(j["manifest"].get<std::string>());
    }
    options.offline = j.value("offline", false);
  }
  if (!options.manifest) {
    if (auto m = Env("OFFSPAN_MANIFEST")) options.manifest = fs::path(*m);
  }
  if (auto o = Env("OFFSPAN_OFFLINE")) options.offline |= Truthy(*o);
  return options;
}

fs::path ResolveCacheDir(const std::optional<fs::path>& configured) {
  if (configured) return *configured;
  if (auto dir = Env("OFFSPAN_CACHE_DIR")) return *dir;
  if (auto xdg = Env("XDG_CACHE_HOME")) return fs::path(*xdg) / "offspan";
  if (auto home = Env("HOME")) return fs::path(*home) / ".cache" / "offspan";
  return fs::temp_directory_path() / "offspan-cache";
}

Registry::Registry(RegistryOptions options)
    : options_(std::move(options)),
      cache_dir_(ResolveCacheDir(options_.cache_dir)) {
  if (!options_.transport) {
    options_.transport = std::make_shared<DefaultTransport>();
  }
}

std::map<std::string, ModelCard> Registry::ManifestCards() const {
  std::map<std::string, ModelCard> cards;
  fs::path path;
  if (options_.manifest) {
    path = *options_.manifest;
  } else if (fs::exists(cache_dir_ / "manifest.json")) {
    path = cache_dir_ / "manifest.json";
  } else {
    return cards;
  }
  const json j = ReadJson(path);
  if (!j.is_object()) {
    throw Error(ErrorCode::kParse, path.string() + ": expected an object");
  }
  for (const auto& [name, entry] : j.items()) {
    ModelCard card;
    card.name = name;
    try {
      card.uri = entry.at("uri").get<std::string>();
      card.checksum = entry.at("checksum").get<std::string>();
      card.config = entry.value("config", json::object());
      card.base_checkpoint = entry.value("base_checkpoint", "");
      card.languages =
          entry.value("languages", std::vector<std::string>{"en"});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ": entry '" + name + "': " + e.what());
    }
    cards[name] = std::move(card);
  }
  return cards;
}

std::vector<ModelCard> Registry::List() const {
  std::vector<ModelCard> cards = BuiltinCards();
  auto manifest = ManifestCards();
  for (ModelCard& card : cards) {
    auto it = manifest.find(card.name);
    if (it == manifest.end()) continue;
    card.uri = it->second.uri;
    card.checksum = it->second.checksum;
    card.config = it->second.config;
    manifest.erase(it);
  }
  for (auto& [name, card] : manifest) cards.push_back(std::move(card));

  std::set<std::string> seen;
  for (const auto& card : cards) seen.insert(card.name);
  const fs::path card_dir = cache_dir_ / "cards";
  if (fs::is_directory(card_dir)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(card_dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        ModelCard card = ModelCard::FromJson(ReadJson(file));
        if (seen.insert(card.name).second) cards.push_back(std::move(card));
      } catch (const Error& e) {
        spdlog::warn("skipping unreadable model card {}: {}", file.string(),
                     e.what());
      }
    }
  }
  return cards;
}

std::optional<ModelCard> Registry::Find(const std::string& name) const {
  for (auto& card : List()) {
    if (card.name == name) return card;
  }
  return std::nullopt;
}

fs::path Registry::ExtractedDir(const std::string& checksum) const {
  return cache_dir_ / "models" / checksum;
}

bool Registry::IsAvailable(const ModelCard& card) const {
  if (card.checksum.empty()) return false;
  if (fs::exists(ExtractedDir(card.checksum) / kCompleteMarker)) return true;
  return !options_.offline && !card.uri.empty();
}

std::shared_ptr<std::mutex> Registry::NameLock(const std::string& name) {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto& lock = name_locks_[name];
  if (!lock) lock = std::make_shared<std::mutex>();
  return lock;
}

fs::path Registry::InstallBundle(const fs::path& bundle,
                                 const std::string& checksum) {
  const fs::path blobs = cache_dir_ / "blobs";
  fs::create_directories(blobs);
  const fs::path blob = blobs / (checksum + ".ospb");
  if (!fs::exists(blob)) {
    const fs::path tmp = TempPath(blobs, checksum);
    fs::copy_file(bundle, tmp);
    fs::rename(tmp, blob);
  }
  const fs::path dir = ExtractedDir(checksum);
  if (!fs::exists(dir / kCompleteMarker)) {
    const fs::path tmp = TempPath(dir.parent_path(), checksum);
    UnpackBundle(blob, tmp);
    std::ofstream(tmp / kCompleteMarker) << checksum << '\n';
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::rename(tmp, dir);
  }
  return dir;
}

fs::path Registry::Materialize(const ModelCard& card) {
  if (card.checksum.empty()) {
    throw Error(ErrorCode::kUnavailable,
                "model '" + card.name +
                    "' has no published artifact; add it to the registry "
                    "manifest or register a local artifact");
  }
  auto lock = NameLock(card.name);
  std::lock_guard<std::mutex> guard(*lock);
  const fs::path dir = ExtractedDir(card.checksum);
  if (fs::exists(dir / kCompleteMarker)) return dir;
  if (options_.offline) {
    throw Error(ErrorCode::kUnavailable,
                "model '" + card.name + "' is not cached and offline mode is on");
  }
  if (card.uri.empty()) {
    throw Error(ErrorCode::kUnavailable,
                "model '" + card.name + "' has no download location");
  }
  const fs::path staging = cache_dir_ / "tmp";
  fs::create_directories(staging);
  const fs::path download = TempPath(staging, card.name);
  spdlog::info("fetching model '{}' from {}", card.name, card.uri);
  try {
    options_.transport->Fetch(card.uri, download);
    const std::string actual = Sha256File(download);
    if (actual != card.checksum) {
      throw Error(ErrorCode::kIntegrity,
                  "checksum mismatch for model '" + card.name +
                      "': expected " + card.checksum + ", got " + actual);
    }
    const fs::path installed = InstallBundle(download, card.checksum);
    fs::remove(download);
    return installed;
  } catch (...) {
    std::error_code ec;
    fs::remove(download, ec);
    throw;
  }
}

ModelCard Registry::Register(const std::string& name, const fs::path& artifact,
                             std::vector<std::string> languages) {
  if (name.empty() || name.find('/') != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "invalid model name '" + name + "'");
  }
  for (const auto& card : BuiltinCards()) {
    if (card.name == name) {
      throw Error(ErrorCode::kInvalidArgument,
                  "'" + name + "' is a built-in model name");
    }
  }
  fs::create_directories(cache_dir_ / "tmp");
  fs::path bundle = artifact;
  fs::path packed;
  if (fs::is_directory(artifact)) {
    Ensemble::Load(artifact);  // refuse to register something unloadable
    packed = TempPath(cache_dir_ / "tmp", name);
    PackDirectory(artifact, packed);
    bundle = packed;
  } else if (!fs::is_regular_file(artifact)) {
    throw Error(ErrorCode::kNotFound, artifact.string() + " does not exist");
  }
  ModelCard card;
  card.name = name;
  card.languages = std::move(languages);
  card.checksum = Sha256File(bundle);
  InstallBundle(bundle, card.checksum);
  if (!packed.empty()) fs::remove(packed);
  card.uri = "file://" +
             (cache_dir_ / "blobs" / (card.checksum + ".ospb")).string();
  const fs::path card_dir = cache_dir_ / "cards";
  fs::create_directories(card_dir);
  const fs::path tmp = TempPath(card_dir, name);
  std::ofstream(tmp) << card.ToJson().dump(2) << '\n';
  fs::rename(tmp, card_dir / (name + ".json"));
  return card;
}

std::shared_ptr<const Ensemble> Registry::Resolve(
    const std::string& name_or_path) {
  if (auto card = Find(name_or_path)) {
    return std::make_shared<const Ensemble>(Ensemble::Load(Materialize(*card)));
  }
  const fs::path path(name_or_path);
  if (fs::is_directory(path)) {
    return std::make_shared<const Ensemble>(Ensemble::Load(path));
  }
  if (fs::is_regular_file(path)) {
    const std::string checksum = Sha256File(path);
    auto lock = NameLock(checksum);
    std::lock_guard<std::mutex> guard(*lock);
    return std::make_shared<const Ensemble>(
        Ensemble::Load(InstallBundle(path, checksum)));
  }
  throw Error(ErrorCode::kNotFound, "unknown model '" + name_or_path +
                                        "'; available models: " +
                                        NameList(List()));
}

}  // namespace offspan
