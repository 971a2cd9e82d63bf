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

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "offspan/error.h"
#include "offspan/service.h"
#include "support.h"

// After Eigen: <resolv.h>, pulled in here, defines a `_res` macro.
#include "httplib.h"

namespace offspan {
namespace {

using nlohmann::json;

// A loader whose "slow" model blocks until released, so tests can observe a
// request that arrives while a model is still loading.
struct StubBackend {
  std::mutex mutex;
  std::condition_variable cv;
  bool release = false;
  bool slow_started = false;
  std::atomic<int> loads{0};

  ServiceBackend Make() {
    ServiceBackend backend;
    backend.catalog = [] {
      std::vector<ModelSummary> models;
      for (const char* name : {"tiny", "tiny-2", "slow", "broken"}) {
        ModelSummary s;
        s.name = name;
        s.base_checkpoint = "tiny";
        s.languages = {"en"};
        s.available = true;
        models.push_back(s);
      }
      return models;
    };
    backend.loader = [this](const std::string& name)
        -> std::shared_ptr<const Ensemble> {
      ++loads;
      if (name == "slow") {
        std::unique_lock<std::mutex> lock(mutex);
        slow_started = true;
        cv.notify_all();
        cv.wait(lock, [this] { return release; });
        return testing::SharedTinyEnsemble();
      }
      if (name == "broken") {
        throw Error(ErrorCode::kUnavailable, "artifact is not reachable");
      }
      return testing::SharedTinyEnsemble();
    };
    return backend;
  }
};

ServiceConfig TestConfig() {
  ServiceConfig config;
  config.port = 0;
  config.default_model = "tiny";
  return config;
}

std::string Body(const std::string& text, const std::string& model = "tiny") {
  return json{{"text", text}, {"model", model}}.dump();
}

TEST_SUITE("service") {

TEST_CASE("predictions match the library on fifty texts") {
  StubBackend stub;
  SpanService service(TestConfig(), stub.Make());
  const auto ds = testing::SyntheticSpanDataset(50, 23);
  const auto model = testing::SharedTinyModel();
  for (const Post& post : ds.posts) {
    const HttpReply reply = service.HandlePredict(Body(post.text));
    REQUIRE(reply.status == 200);
    const SpanSet expected = model->Predict(post.text);
    CHECK(reply.body["offsets"] == json(expected.offsets()));
    CHECK(reply.body["spans"] == SpanPairs(expected));
    CHECK(reply.body["model"] == "tiny");
    CHECK(reply.body["latency_ms"].get<double>() >= 0.0);
  }
  CHECK(stub.loads == 1);
}

TEST_CASE("span pairs are sorted and end-exclusive") {
  CHECK(SpanPairs(SpanSet::FromOffsets({9, 1, 2, 3})) ==
        json::parse("[[1, 4], [9, 10]]"));
  CHECK(SpanPairs(SpanSet()) == json::array());
}

TEST_CASE("malformed requests are client errors") {
  StubBackend stub;
  ServiceConfig config = TestConfig();
  config.max_text_length = 10;
  SpanService service(config, stub.Make());
  CHECK(service.HandlePredict("{nope").status == 400);
  CHECK(service.HandlePredict("[]").status == 400);
  CHECK(service.HandlePredict(R"({"txt": "a"})").status == 400);
  CHECK(service.HandlePredict(R"({"text": 5})").status == 400);
  CHECK(service.HandlePredict(R"({"text": "a", "model": 1})").status == 400);
  CHECK(service.HandlePredict(R"({"text": "a", "merge_adjacent": "y"})")
            .status == 400);
  // The limit counts code points, not bytes.
  CHECK(service.HandlePredict(Body("ααααααααα")).status == 200);
  const HttpReply big = service.HandlePredict(Body("abcdefghijk"));
  CHECK(big.status == 400);
  CHECK(big.body["error"].get<std::string>().find("10") != std::string::npos);
  CHECK(stub.loads == 1);
}

TEST_CASE("unknown models are 404 with the available names") {
  StubBackend stub;
  SpanService service(TestConfig(), stub.Make());
  const HttpReply reply = service.HandlePredict(Body("hi", "nope"));
  CHECK(reply.status == 404);
  CHECK(reply.body["available"].size() == 4);
  CHECK(stub.loads == 0);
}

TEST_CASE("loading and unreachable models are 503") {
  StubBackend stub;
  SpanService service(TestConfig(), stub.Make());
  auto first = std::async(std::launch::async, [&] {
    return service.HandlePredict(Body("you idiot", "slow"));
  });
  {
    std::unique_lock<std::mutex> lock(stub.mutex);
    stub.cv.wait(lock, [&] { return stub.slow_started; });
  }
  const HttpReply busy = service.HandlePredict(Body("you idiot", "slow"));
  CHECK(busy.status == 503);
  {
    std::lock_guard<std::mutex> lock(stub.mutex);
    stub.release = true;
  }
  stub.cv.notify_all();
  CHECK(first.get().status == 200);
  CHECK(service.HandlePredict(Body("you idiot", "slow")).status == 200);
  CHECK(service.HandlePredict(Body("x", "broken")).status == 503);
}

TEST_CASE("model pool evicts the least recently used model") {
  StubBackend stub;
  ModelPool pool(stub.Make().loader, 2, 4);
  pool.Acquire("tiny");
  pool.Acquire("tiny-2");
  pool.Acquire("tiny");
  pool.Acquire("slow-free");
  CHECK(pool.Resident() == std::vector<std::string>{"slow-free", "tiny"});
  CHECK(stub.loads == 3);
  pool.Acquire("tiny");
  CHECK(stub.loads == 3);
}

TEST_CASE("datasets are served in pages") {
  testing::TempDir dir;
  const auto ds = testing::SyntheticSpanDataset(7, 3, "demo");
  {
    std::ofstream out(dir / "demo.jsonl");
    WriteJsonl(ds, out);
  }
  StubBackend stub;
  ServiceConfig config = TestConfig();
  config.datasets["demo"] = dir / "demo.jsonl";
  config.max_page_size = 5;
  SpanService service(config, stub.Make());

  const HttpReply first = service.HandleDataset("demo", "0", "3");
  REQUIRE(first.status == 200);
  CHECK(first.body["total"] == 7);
  REQUIRE(first.body["posts"].size() == 3);
  CHECK(first.body["posts"][0]["id"] == ds.posts[0].id);
  CHECK(first.body["posts"][0]["offsets"] ==
        json(ds.posts[0].gold_spans->offsets()));
  const HttpReply last = service.HandleDataset("demo", "2", "3");
  REQUIRE(last.body["posts"].size() == 1);
  CHECK(last.body["posts"][0]["id"] == ds.posts[6].id);
  CHECK(service.HandleDataset("demo", "9", "3").body["posts"].empty());
  CHECK(service.HandleDataset("demo", std::nullopt, std::nullopt)
            .body["size"] == 5);
  CHECK(service.HandleDataset("demo", "0", "0").status == 400);
  CHECK(service.HandleDataset("demo", "-1", "3").status == 400);
  CHECK(service.HandleDataset("demo", "0", "6").status == 400);
  CHECK(service.HandleDataset("demo", "x", "3").status == 400);
  const HttpReply missing = service.HandleDataset("other", "0", "3");
  CHECK(missing.status == 404);
  CHECK(missing.body["available"] == json::array({"demo"}));
}

TEST_CASE("environment overrides the config file") {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "service.json");
    out << R"({"port": 9000, "max_text_length": 50, "default_model": "x"})";
  }
  ::setenv("OFFSPAN_PORT", "9100", 1);
  const ServiceConfig config = ServiceConfig::Load(dir / "service.json");
  ::unsetenv("OFFSPAN_PORT");
  CHECK(config.port == 9100);
  CHECK(config.max_text_length == 50);
  CHECK(config.default_model == "x");
  ServiceConfig applied;
  CHECK_THROWS_AS(applied.ApplyJson({{"port", "eighty"}}), Error);
}

TEST_CASE("http routes end to end") {
  StubBackend stub;
  SpanService service(TestConfig(), stub.Make());
  const int port = service.Bind();
  REQUIRE(port > 0);
  std::thread server([&] { service.Serve(); });
  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto models = client.Get("/api/models");
  REQUIRE(models);
  CHECK(json::parse(models->body).size() == 4);
  const std::string text = "what a stupid plan";
  const auto spans =
      client.Post("/api/spans", Body(text), "application/json");
  REQUIRE(spans);
  CHECK(spans->status == 200);
  CHECK(spans->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(spans->body)["offsets"] ==
        json(testing::SharedTinyModel()->Predict(text).offsets()));
  const auto bad = client.Post("/api/spans", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  service.Stop();
  server.join();
}

}  // TEST_SUITE

}  // namespace
}  // namespace offspan
