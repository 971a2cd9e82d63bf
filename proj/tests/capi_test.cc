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

// Exercises the shared library through its public header only, plus the
// command-line front end's exit codes.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "offspan/offspan.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("offspan-capi-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void Write(const fs::path& path, const std::string& content) {
  std::ofstream(path) << content;
}

std::string Take(char* s) {
  std::string out = s ? s : "";
  osp_string_free(s);
  return out;
}

// Posts where "idiot" and "clown" are the offensive words.
std::string TrainingCsv(int n) {
  const char* neutral[] = {"the", "plan", "city", "was", "new", "report",
                           "vote", "today", "we", "budget"};
  const char* toxic[] = {"idiot", "clown"};
  std::mt19937 rng(4);
  std::string csv = "spans,text\n";
  for (int i = 0; i < n; ++i) {
    std::string text;
    std::vector<int> offsets;
    const int len = 5 + static_cast<int>(rng() % 5);
    const int bad = i % 3 == 0 ? -1 : static_cast<int>(rng() % len);
    for (int w = 0; w < len; ++w) {
      if (w) text += ' ';
      const std::string word = w == bad ? toxic[rng() % 2] : neutral[rng() % 10];
      if (w == bad) {
        for (std::size_t c = 0; c < word.size(); ++c) {
          offsets.push_back(static_cast<int>(text.size() + c));
        }
      }
      text += word;
    }
    csv += "\"" + json(offsets).dump() + "\",\"" + text + "\"\n";
  }
  return csv;
}

int RunCli(const std::string& args, const fs::path& cache) {
  const std::string command = "OFFSPAN_CACHE_DIR='" + cache.string() + "' '" +
                              OFFSPAN_CLI_PATH + "' " + args +
                              " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_SUITE("capi") {

TEST_CASE("status names and errors") {
  CHECK(std::string(osp_status_name(OSP_OK)) == "ok");
  CHECK(std::string(osp_version()).size() > 0);
  osp_dataset* ds = nullptr;
  CHECK(osp_dataset_load("/nonexistent/file.csv", nullptr, &ds) != OSP_OK);
  CHECK(ds == nullptr);
  CHECK(std::string(osp_last_error()).find("nonexistent") != std::string::npos);
  CHECK(osp_set_log_level("loud") == OSP_ERR_INVALID_ARGUMENT);
  CHECK(osp_set_log_level("error") == OSP_OK);
}

TEST_CASE("span F1 through the C boundary") {
  double f1 = -1;
  REQUIRE(osp_span_f1("[1, 2, 3, 4]", "[3, 4, 5, 6]", &f1) == OSP_OK);
  CHECK(f1 == doctest::Approx(0.5));
  REQUIRE(osp_span_f1("[]", "[]", &f1) == OSP_OK);
  CHECK(f1 == 1.0);
  CHECK(osp_span_f1("[1,", "[]", &f1) == OSP_ERR_PARSE);
}

TEST_CASE("datasets, lexicon predictions and evaluation") {
  Scratch dir;
  Write(dir / "gold.csv",
        "spans,text\n\"[0, 1, 2, 3, 4, 5]\",\"Stupid idea\"\n"
        "\"[]\",\"Nice idea\"\n");
  Write(dir / "words.txt", "stupid\n");
  osp_dataset* ds = nullptr;
  REQUIRE(osp_dataset_load((dir / "gold.csv").c_str(), nullptr, &ds) == OSP_OK);
  CHECK(osp_dataset_size(ds) == 2);
  char* info = nullptr;
  REQUIRE(osp_dataset_info(ds, &info) == OSP_OK);
  CHECK(json::parse(Take(info))["granularity"] == "SPAN");

  const std::string words = (dir / "words.txt").string();
  const char* paths[] = {words.c_str()};
  REQUIRE(osp_lexicon_predict(paths, 1, ds, (dir / "pred.jsonl").c_str()) ==
          OSP_OK);
  char* report = nullptr;
  REQUIRE(osp_evaluate((dir / "pred.jsonl").c_str(), ds, 0, &report) == OSP_OK);
  CHECK(json::parse(Take(report))["mean_f1"].get<double>() == 1.0);

  char* marked = nullptr;
  REQUIRE(osp_highlight("Stupid idea", "[0,1,2,3,4,5]", 0, &marked) == OSP_OK);
  CHECK(Take(marked) == "[[Stupid]] idea");
  osp_dataset_free(ds);
}

TEST_CASE("train, load, predict and bench through the C API") {
  Scratch dir;
  Write(dir / "train.csv", TrainingCsv(30));
  osp_dataset* ds = nullptr;
  REQUIRE(osp_dataset_load((dir / "train.csv").c_str(), nullptr, &ds) ==
          OSP_OK);
  const std::string arch =
      R"({"preset": "tiny", "vocab_size": 200, "max_positions": 64,
          "dropout": 0.0, "lower_case": true})";
  REQUIRE(osp_checkpoint_init(ds, "tiny", arch.c_str(),
                              (dir / "base").c_str()) == OSP_OK);
  const std::string config =
      R"({"learning_rate": 0.003, "epochs": 2, "max_seq_length": 48,
          "train_batch_size": 4, "warmup_ratio": 0.0,
          "evaluate_every_steps": 0, "early_stop_patience": 0,
          "train_fraction": 1.0, "seeds": [1, 2], "skip_mlm": true})";
  int events = 0;
  char* report = nullptr;
  REQUIRE(osp_train(
              ds, (dir / "base").c_str(), config.c_str(),
              (dir / "out").c_str(),
              [](const char* event, void* user) {
                CHECK(json::parse(event).contains("step"));
                ++*static_cast<int*>(user);
              },
              &events, &report) == OSP_OK);
  CHECK(events > 0);
  CHECK(json::parse(Take(report)).is_object());
  CHECK(fs::exists(dir / "out" / "ensemble.json"));

  osp_model* model = nullptr;
  REQUIRE(osp_model_load((dir / "out").c_str(), &model) == OSP_OK);
  CHECK(osp_model_members(model) == 2);
  char* result = nullptr;
  REQUIRE(osp_model_predict(model, "the idiot plan", 0, &result) == OSP_OK);
  const json spans = json::parse(Take(result));
  CHECK(spans.contains("offsets"));
  CHECK(spans.contains("spans"));

  char* bench = nullptr;
  REQUIRE(osp_model_bench(model, ds, 5, 1, "tiny", "cpu", &bench) == OSP_OK);
  const json b = json::parse(Take(bench));
  CHECK(b["n_texts"] == 5);
  CHECK(b["table"].get<std::string>().find("tiny") != std::string::npos);
  CHECK(osp_model_bench(model, ds, 5, 1, "tiny", "accel", &bench) ==
        OSP_ERR_UNAVAILABLE);

  char* sum = nullptr;
  REQUIRE(osp_bundle_pack((dir / "out").c_str(), (dir / "m.ospb").c_str(),
                          &sum) == OSP_OK);
  CHECK(Take(sum).size() == 64);
  osp_model_free(model);
  osp_dataset_free(ds);
}

TEST_CASE("command-line exit codes") {
  Scratch dir;
  const fs::path cache = dir / "cache";
  Write(dir / "train.csv", TrainingCsv(20));
  Write(dir / "bad.csv", "spans,text\n\"[1, oops]\",\"x\"\n");
  Write(dir / "train.json",
        R"({"learning_rate": 0.003, "max_seq_length": 48,
            "train_batch_size": 4, "warmup_ratio": 0.0,
            "evaluate_every_steps": 0, "early_stop_patience": 0,
            "train_fraction": 1.0})");
  const std::string d = dir / "";

  CHECK(RunCli("--help", cache) == 0);
  CHECK(RunCli("predict", cache) == 1);
  CHECK(RunCli("no-such-command", cache) == 1);
  CHECK(RunCli("evaluate --pred " + d + "none.jsonl --gold " + d + "bad.csv",
               cache) == 2);
  CHECK(RunCli("init-checkpoint --corpus " + d + "train.csv --out " + d +
                   "base --preset tiny --vocab-size 150 --max-positions 64"
                   " --lower-case",
               cache) == 0);
  CHECK(RunCli("train --data " + d + "train.csv --base " + d + "base --out " +
                   d + "model --config " + d + "train.json --seeds 1"
                   " --epochs 1 --skip-mlm --quiet",
               cache) == 0);
  CHECK(RunCli("predict --model " + d + "model --text 'you idiot'", cache) ==
        0);
  CHECK(RunCli("predict --model " + d + "model --in " + d + "train.csv --out " +
                   d + "pred.jsonl",
               cache) == 0);
  CHECK(RunCli("evaluate --pred " + d + "pred.jsonl --gold " + d + "train.csv",
               cache) == 0);
  CHECK(RunCli("bench --model " + d + "model --n 3 --warmup 1", cache) == 0);
  CHECK(RunCli("bench --model " + d + "model --device accel", cache) == 3);
  CHECK(RunCli("models list", cache) == 0);
  CHECK(RunCli("models register mine " + d + "model", cache) == 0);
  CHECK(RunCli("predict --model mine --text 'a clown'", cache) == 0);
  CHECK(RunCli("predict --model en-base --text hi", cache) == 3);
  CHECK(RunCli("predict --model nowhere --text hi", cache) == 2);
}

}  // TEST_SUITE

}  // namespace
