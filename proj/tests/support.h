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

// Shared fixtures for the test binaries.

#ifndef OFFSPAN_TESTS_SUPPORT_H_
#define OFFSPAN_TESTS_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "offspan/corpus.h"
#include "offspan/model.h"

namespace offspan::testing {

struct AnnotatedRow {
  std::string text;
  std::vector<Offset> offsets;
};

// The four annotated example posts and their gold offset lists.
inline const std::vector<AnnotatedRow>& AnnotatedExamples() {
  static const std::vector<AnnotatedRow> rows = {
      {"Stupid hatcheries have completely fucked everything",
       {0, 1, 2, 3, 4, 5, 34, 35, 36, 37, 38, 39}},
      {"Victimitis: You are such an asshole.", {28, 29, 30, 31, 32, 33, 34}},
      {"So is his mother. They are silver spoon parasites.", {}},
      {"You're just silly.", {12, 13, 14, 15, 16}},
  };
  return rows;
}

// The four rows as a TSD-format CSV document.
inline std::string AnnotatedExamplesCsv() {
  std::string csv = "spans,text\n";
  for (const auto& row : AnnotatedExamples()) {
    std::string spans = "[";
    for (std::size_t i = 0; i < row.offsets.size(); ++i) {
      if (i) spans += ", ";
      spans += std::to_string(row.offsets[i]);
    }
    spans += "]";
    csv += "\"" + spans + "\",\"" + row.text + "\"\n";
  }
  return csv;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("offspan-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string>& OffensiveWords() {
  static const std::vector<std::string> words = {
      "idiot", "stupid", "moron", "pathetic", "loser",
      "dumb",  "garbage", "clown", "fool",   "jerk"};
  return words;
}

inline const std::vector<std::string>& NeutralWords() {
  static const std::vector<std::string> words = {
      "the",    "council", "meeting", "weather", "today", "policy",
      "people", "article", "writer",  "city",    "plan",  "is",
      "was",    "really",  "a",       "very",    "new",   "old",
      "they",   "we",      "report",  "budget",  "vote",  "this",
      "that",   "and",     "about",   "never",   "always", "road"};
  return words;
}

// Posts of 5-12 ASCII words; about 60% carry one or two words from
// OffensiveWords(), which are exactly the gold characters. Words sometimes
// end with punctuation that is never part of a span.
inline Dataset SyntheticSpanDataset(std::size_t n, std::uint64_t seed,
                                    std::string name = "synthetic") {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t k) {
    return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  };
  Dataset ds;
  ds.name = std::move(name);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 5 + pick(8);
    std::vector<bool> toxic(len, false);
    if (pick(10) < 6) {
      toxic[pick(len)] = true;
      if (pick(3) == 0) toxic[pick(len)] = true;
    }
    std::string text;
    std::vector<Offset> offsets;
    for (std::size_t w = 0; w < len; ++w) {
      if (w) text += ' ';
      const std::string& word = toxic[w]
                                    ? OffensiveWords()[pick(OffensiveWords().size())]
                                    : NeutralWords()[pick(NeutralWords().size())];
      if (toxic[w]) {
        for (std::size_t c = 0; c < word.size(); ++c) {
          offsets.push_back(static_cast<Offset>(text.size() + c));
        }
      }
      text += word;
      if (w + 1 == len || pick(6) == 0) text += pick(2) ? "." : "!";
    }
    Post post;
    post.id = "p" + std::to_string(i);
    post.text = text;
    post.gold_spans = SpanSet::FromOffsets(offsets);
    post.label = offsets.empty() ? PostLabel::kNotOffensive
                                 : PostLabel::kOffensive;
    ds.posts.push_back(std::move(post));
  }
  return ds;
}

inline std::vector<std::string> Texts(const Dataset& ds) {
  std::vector<std::string> texts;
  for (const auto& post : ds.posts) texts.push_back(post.text);
  return texts;
}

// A one-layer encoder with a vocabulary learned from `ds`.
inline Checkpoint TinyCheckpoint(const Dataset& ds, std::uint64_t seed = 11) {
  nn::EncoderConfig arch = nn::EncoderConfig::Preset("tiny");
  arch.vocab_size = 400;
  arch.max_positions = 64;
  arch.dropout = 0.0;
  return Checkpoint::Initialize("tiny-test", Texts(ds), arch, true, seed);
}

// Fast settings for smoke training on tiny fixtures.
inline ModelConfig FastConfig() {
  ModelConfig c;
  c.learning_rate = 3e-3;
  c.epochs = 3;
  c.warmup_ratio = 0.0;
  c.max_seq_length = 48;
  c.train_batch_size = 4;
  c.evaluate_every_steps = 0;
  c.early_stop_patience = 0;
  c.train_fraction = 1.0;
  c.seeds = {1};
  return c;
}

// A tagger trained once per process on a small synthetic corpus.
inline std::shared_ptr<const SpanModel> SharedTinyModel() {
  static const std::shared_ptr<const SpanModel> model = [] {
    const Dataset ds = SyntheticSpanDataset(48, 5);
    return std::make_shared<const SpanModel>(
        Train(ds, TinyCheckpoint(ds), FastConfig(), 1));
  }();
  return model;
}

inline std::shared_ptr<const Ensemble> SharedTinyEnsemble() {
  return std::make_shared<const Ensemble>(
      std::vector<std::shared_ptr<const SpanModel>>{SharedTinyModel()});
}

}  // namespace offspan::testing

#endif  // OFFSPAN_TESTS_SUPPORT_H_
