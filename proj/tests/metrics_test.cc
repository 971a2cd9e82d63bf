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

#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "offspan/error.h"
#include "offspan/metrics.h"
#include "support.h"

namespace offspan {
namespace {

// Independent reference: plain std::set arithmetic.
double ReferenceF1(const std::set<int>& pred, const std::set<int>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  int common = 0;
  for (int p : pred) common += static_cast<int>(gold.count(p));
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / pred.size();
  const double recall = static_cast<double>(common) / gold.size();
  return 2 * precision * recall / (precision + recall);
}

SpanSet ToSpanSet(const std::set<int>& s) {
  return SpanSet::FromOffsets(std::vector<Offset>(s.begin(), s.end()));
}

TEST_SUITE("metrics") {

TEST_CASE("span F1 equals the set-arithmetic reference") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::set<int> pred, gold;
    const int universe = 1 + static_cast<int>(rng() % 60);
    const int mode = trial % 4;  // exercise empty/non-empty mixes
    for (int i = 0; i < universe; ++i) {
      if (mode != 1 && rng() % 3 == 0) pred.insert(i);
      if (mode != 2 && rng() % 3 == 0) gold.insert(i);
    }
    if (mode == 3) {
      pred.clear();
      gold.clear();
    }
    CHECK(SpanF1(ToSpanSet(pred), ToSpanSet(gold)).f1 ==
          doctest::Approx(ReferenceF1(pred, gold)).epsilon(1e-15));
  }
}

TEST_CASE("degenerate combinations") {
  const SpanSet empty;
  const SpanSet some = SpanSet::FromOffsets({1, 2});
  CHECK(SpanF1(empty, empty).f1 == 1.0);
  CHECK(SpanF1(some, empty).f1 == 0.0);
  CHECK(SpanF1(empty, some).f1 == 0.0);
  CHECK(SpanF1(some, some).f1 == 1.0);
  CHECK(SpanF1(SpanSet::FromOffsets({1}), SpanSet::FromOffsets({2})).f1 == 0.0);
}

TEST_CASE("hand-computed partial overlap") {
  // pred {12..17}, gold {12..16}: P = 5/6, R = 1, F1 = 10/11.
  const auto s = SpanF1(SpanSet::FromOffsets({12, 13, 14, 15, 16, 17}),
                        SpanSet::FromOffsets({12, 13, 14, 15, 16}));
  CHECK(s.precision == doctest::Approx(5.0 / 6.0));
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("corpus mean is unweighted and strict about ids") {
  Dataset gold;
  for (int i = 0; i < 3; ++i) {
    Post p;
    p.id = "p" + std::to_string(i);
    p.text = "abcdef";
    p.gold_spans = SpanSet::FromOffsets({0, 1});
    gold.posts.push_back(p);
  }
  std::map<std::string, SpanSet> pred = {
      {"p0", SpanSet::FromOffsets({0, 1})},
      {"p1", SpanSet()},
      {"p2", SpanSet::FromOffsets({0})},
      {"extra", SpanSet()}};
  const EvalReport report = EvaluateSpans(pred, gold);
  CHECK(report.n_posts == 3);
  CHECK(report.mean_f1 == doctest::Approx((1.0 + 0.0 + 2.0 / 3.0) / 3.0));
  pred.erase("p1");
  try {
    EvaluateSpans(pred, gold);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(std::string(e.what()).find("p1") != std::string::npos);
  }
}

TEST_CASE("macro F1 from a confusion matrix") {
  // Reference: per-class F1 = 2tp / (2tp + fp + fn), mean over classes.
  auto reference = [](double tp, double fp, double fn, double tn) {
    auto f1 = [](double a, double b, double c) {
      return a == 0 ? 0.0 : 2 * a / (2 * a + b + c);
    };
    return (f1(tp, fp, fn) + f1(tn, fn, fp)) / 2;
  };
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    Confusion c{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
    CHECK(MacroF1FromConfusion(c).macro_f1 ==
          doctest::Approx(reference(c.tp, c.fp, c.fn, c.tn)).epsilon(1e-12));
  }
  const auto all_not = MacroF1FromConfusion({0, 0, 41, 288});
  CHECK(all_not.offensive.f1 == 0.0);
  CHECK(all_not.macro_f1 == doctest::Approx(0.4668).epsilon(5e-5));
}

TEST_CASE("macro F1 over labelled posts") {
  Dataset gold;
  gold.granularity = Granularity::kPost;
  const std::vector<PostLabel> truth = {
      PostLabel::kOffensive, PostLabel::kOffensive, PostLabel::kNotOffensive,
      PostLabel::kNotOffensive};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    Post p;
    p.id = std::to_string(i);
    p.text = "x";
    p.label = truth[i];
    gold.posts.push_back(p);
  }
  std::map<std::string, PostLabel> pred = {{"0", PostLabel::kOffensive},
                                           {"1", PostLabel::kNotOffensive},
                                           {"2", PostLabel::kNotOffensive},
                                           {"3", PostLabel::kNotOffensive}};
  const auto r = MacroF1(pred, gold);
  CHECK(r.confusion.tp == 1);
  CHECK(r.confusion.fn == 1);
  CHECK(r.confusion.tn == 2);
  CHECK(r.confusion.fp == 0);
  // OFF: P 1, R 0.5, F1 2/3; NOT: P 2/3, R 1, F1 0.8.
  CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
  pred.erase("3");
  CHECK_THROWS_AS(MacroF1(pred, gold), Error);
}

TEST_CASE("round half to even") {
  CHECK(RoundHalfEven(0.12345, 4) == doctest::Approx(0.1234));
  CHECK(RoundHalfEven(0.5, 0) == 0.0);
  CHECK(RoundHalfEven(1.5, 0) == 2.0);
  CHECK(RoundHalfEven(2.5, 0) == 2.0);
  CHECK(RoundHalfEven(0.66666, 4) == doctest::Approx(0.6667));
}

}  // TEST_SUITE

}  // namespace
}  // namespace offspan
