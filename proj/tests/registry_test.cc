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

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "offspan/bundle.h"
#include "offspan/error.h"
#include "offspan/registry.h"
#include "support.h"

namespace offspan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an offspan::Error");
  return ErrorCode::kRuntime;
}

// Serves "mem://<key>" from a map of local files and counts fetches.
class CountingTransport : public Transport {
 public:
  void Fetch(const std::string& uri, const fs::path& destination) override {
    ++fetches;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const auto it = files.find(uri);
    if (it == files.end()) throw Error(ErrorCode::kNotFound, uri);
    fs::copy_file(it->second, destination,
                  fs::copy_options::overwrite_existing);
  }

  std::map<std::string, fs::path> files;
  std::atomic<int> fetches{0};
};

void WriteFile(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A packed tiny model plus a manifest pointing "en-base" at it.
struct RegistryFixture {
  testing::TempDir dir;
  std::shared_ptr<CountingTransport> transport =
      std::make_shared<CountingTransport>();
  fs::path bundle;
  std::string checksum;

  RegistryFixture() {
    testing::SharedTinyModel()->Save(dir / "model");
    bundle = dir / "model.ospb";
    PackDirectory(dir / "model", bundle);
    checksum = Sha256File(bundle);
    transport->files["mem://en-base"] = bundle;
    WriteManifest(checksum);
  }

  void WriteManifest(const std::string& sum) {
    WriteFile(dir / "manifest.json",
              json{{"en-base", {{"uri", "mem://en-base"}, {"checksum", sum}}}}
                  .dump());
  }

  RegistryOptions Options(bool offline = false) {
    RegistryOptions options;
    options.cache_dir = dir / "cache";
    options.manifest = dir / "manifest.json";
    options.offline = offline;
    options.transport = transport;
    return options;
  }
};

TEST_SUITE("registry") {

TEST_CASE("sha-256 known answers") {
  CHECK(Sha256Hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::TempDir dir;
  WriteFile(dir / "f", "abc");
  CHECK(Sha256File(dir / "f") == Sha256Hex("abc"));
}

TEST_CASE("bundles round-trip directory trees deterministically") {
  testing::TempDir dir;
  fs::create_directories(dir / "src" / "sub");
  WriteFile(dir / "src" / "a.txt", "alpha");
  WriteFile(dir / "src" / "sub" / "b.bin", std::string("\0\1\2", 3));
  PackDirectory(dir / "src", dir / "one.ospb");
  PackDirectory(dir / "src", dir / "two.ospb");
  CHECK(ReadFile(dir / "one.ospb") == ReadFile(dir / "two.ospb"));
  UnpackBundle(dir / "one.ospb", dir / "out");
  CHECK(ReadFile(dir / "out" / "a.txt") == "alpha");
  CHECK(ReadFile(dir / "out" / "sub" / "b.bin") == std::string("\0\1\2", 3));

  const std::string bytes = ReadFile(dir / "one.ospb");
  WriteFile(dir / "short.ospb", bytes.substr(0, bytes.size() - 2));
  CHECK(CodeOf([&] { UnpackBundle(dir / "short.ospb", dir / "x"); }) ==
        ErrorCode::kParse);
  WriteFile(dir / "junk.ospb", "PK\3\4 not ours");
  CHECK(CodeOf([&] { UnpackBundle(dir / "junk.ospb", dir / "x"); }) ==
        ErrorCode::kParse);
}

TEST_CASE("bundle entries may not escape the target directory") {
  testing::TempDir dir;
  std::string evil = "OSPB";
  auto u32 = [&](std::uint32_t v) {
    evil.append(reinterpret_cast<const char*>(&v), 4);
  };
  u32(1);
  u32(1);
  const std::string name = "../escaped.txt";
  u32(static_cast<std::uint32_t>(name.size()));
  evil += name;
  const std::uint64_t size = 2;
  evil.append(reinterpret_cast<const char*>(&size), 8);
  evil += "hi";
  WriteFile(dir / "evil.ospb", evil);
  CHECK(CodeOf([&] { UnpackBundle(dir / "evil.ospb", dir / "inner"); }) ==
        ErrorCode::kParse);
  CHECK_FALSE(fs::exists(dir / "escaped.txt"));
}

TEST_CASE("built-in cards list the four released models") {
  const auto cards = BuiltinCards();
  REQUIRE(cards.size() == 4);
  CHECK(cards[0].name == "en-base");
  CHECK(cards[0].base_checkpoint == "xlnet-base-cased");
  CHECK(cards[0].reported_f1 == doctest::Approx(0.6734));
  CHECK(cards[1].name == "en-large");
  CHECK(cards[1].reported_f1 == doctest::Approx(0.6886));
  CHECK(cards[2].name == "multilingual-base");
  CHECK(cards[3].name == "multilingual-large");
  CHECK(cards[3].base_checkpoint == "xlm-roberta-large");
  for (const auto& card : cards) {
    CHECK(ModelCard::FromJson(card.ToJson()).name == card.name);
  }
}

TEST_CASE("first use downloads exactly once and later uses hit the cache") {
  RegistryFixture f;
  Registry registry(f.Options());
  CHECK(registry.IsAvailable(*registry.Find("en-base")));
  std::vector<std::thread> threads;
  std::vector<std::shared_ptr<const Ensemble>> loaded(4);
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { loaded[i] = registry.Resolve("en-base"); });
  }
  for (auto& t : threads) t.join();
  CHECK(f.transport->fetches == 1);
  for (const auto& e : loaded) {
    REQUIRE(e);
    CHECK(e->size() == 1);
  }
  const std::string text = "you are a stupid clown";
  CHECK(loaded[0]->Predict(text) == testing::SharedTinyModel()->Predict(text));

  Registry again(f.Options(true));  // offline, but cached
  CHECK(again.Resolve("en-base")->size() == 1);
  CHECK(f.transport->fetches == 1);
}

TEST_CASE("checksum mismatches are integrity errors") {
  RegistryFixture f;
  f.WriteManifest(std::string(64, '0'));
  Registry registry(f.Options());
  CHECK(CodeOf([&] { registry.Resolve("en-base"); }) == ErrorCode::kIntegrity);
  CHECK_FALSE(fs::exists(registry.cache_dir() / "models" / std::string(64, '0')));
}

TEST_CASE("offline mode refuses to fetch") {
  RegistryFixture f;
  Registry registry(f.Options(true));
  CHECK_FALSE(registry.IsAvailable(*registry.Find("en-base")));
  CHECK(CodeOf([&] { registry.Resolve("en-base"); }) ==
        ErrorCode::kUnavailable);
  CHECK(f.transport->fetches == 0);
}

TEST_CASE("unregistered built-ins are listed but unavailable") {
  testing::TempDir dir;
  RegistryOptions options;
  options.cache_dir = dir / "cache";
  Registry registry(options);
  const auto cards = registry.List();
  CHECK(cards.size() == 4);
  for (const auto& card : cards) CHECK_FALSE(registry.IsAvailable(card));
  CHECK(CodeOf([&] { registry.Resolve("en-large"); }) ==
        ErrorCode::kUnavailable);
}

TEST_CASE("unknown names list the available models") {
  RegistryFixture f;
  Registry registry(f.Options());
  try {
    registry.Resolve("no-such-model");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
    const std::string message = e.what();
    for (const auto& card : BuiltinCards()) {
      CHECK(message.find(card.name) != std::string::npos);
    }
  }
}

TEST_CASE("registering a local artifact adds a fifth card") {
  RegistryFixture f;
  Registry registry(f.Options());
  const ModelCard card = registry.Register("my-model", f.dir / "model");
  CHECK(card.checksum.size() == 64);
  CHECK(registry.List().size() == 5);
  CHECK(registry.IsAvailable(*registry.Find("my-model")));
  CHECK(registry.Resolve("my-model")->size() == 1);
  CHECK(f.transport->fetches == 0);
  const ModelCard from_bundle = registry.Register("bundled", f.bundle);
  CHECK(from_bundle.checksum == f.checksum);
  CHECK(CodeOf([&] { registry.Register("en-base", f.dir / "model"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { registry.Register("x", f.dir / "nope"); }) ==
        ErrorCode::kNotFound);
  CHECK(CodeOf([&] { registry.Register("../bad", f.dir / "model"); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("corrupt local cards are skipped") {
  RegistryFixture f;
  Registry registry(f.Options());
  registry.Register("good", f.dir / "model");
  WriteFile(registry.cache_dir() / "cards" / "bad.json", "{not json");
  const auto cards = registry.List();
  CHECK(cards.size() == 5);
  CHECK(cards.back().name == "good");
}

TEST_CASE("local paths resolve without a card") {
  RegistryFixture f;
  Registry registry(f.Options());
  CHECK(registry.Resolve((f.dir / "model").string())->size() == 1);
  CHECK(registry.Resolve(f.bundle.string())->size() == 1);
}

TEST_CASE("cache directory precedence") {
  CHECK(ResolveCacheDir(fs::path("/x/configured")) == "/x/configured");
  ::setenv("OFFSPAN_CACHE_DIR", "/x/env", 1);
  CHECK(ResolveCacheDir(std::nullopt) == "/x/env");
  ::unsetenv("OFFSPAN_CACHE_DIR");
  ::setenv("XDG_CACHE_HOME", "/x/xdg", 1);
  CHECK(ResolveCacheDir(std::nullopt) == fs::path("/x/xdg/offspan"));
  ::unsetenv("XDG_CACHE_HOME");
  const char* home = std::getenv("HOME");
  const std::string saved = home ? home : "";
  ::setenv("HOME", "/x/home", 1);
  CHECK(ResolveCacheDir(std::nullopt) == fs::path("/x/home/.cache/offspan"));
  ::setenv("HOME", saved.c_str(), 1);
}

}  // TEST_SUITE

}  // namespace
}  // namespace offspan
