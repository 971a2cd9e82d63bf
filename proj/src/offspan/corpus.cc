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

#include "offspan/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "spdlog/spdlog.h"

#include "offspan/csv.h"
#include "offspan/error.h"
#include "offspan/rng.h"
#include "offspan/unicode.h"

namespace offspan {
namespace {

using nlohmann::json;

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return in;
}

std::string DefaultName(const LoadOptions& options,
                        const std::filesystem::path& path) {
  return options.name.empty() ? path.stem().string() : options.name;
}

void StripBom(std::string* field) {
  if (field->rfind("\xEF\xBB\xBF", 0) == 0) field->erase(0, 3);
}

// Finds the column index for `name` in a header row, or -1.
int ColumnIndex(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void CheckBounds(const Post& post) {
  if (!post.gold_spans) return;
  const std::size_t length = CodePointLength(post.text);
  if (!post.gold_spans->FitsWithin(length)) {
    throw Error(ErrorCode::kValidation,
                "post '" + post.id + "': span offset " +
                    std::to_string(post.gold_spans->offsets().back()) +
                    " is outside text of length " + std::to_string(length));
  }
}

// Reports a row-level problem: rethrows in strict mode, logs in lenient mode.
void RowFailure(const LoadOptions& options, const Error& error) {
  if (!options.lenient) throw error;
  spdlog::warn("skipping row: {}", error.what());
}

}  // namespace

SpanSet SpanSet::FromOffsets(std::vector<Offset> offsets) {
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
  if (!offsets.empty() && offsets.front() < 0) {
    throw Error(ErrorCode::kValidation,
                "negative span offset " + std::to_string(offsets.front()));
  }
  return SpanSet(std::move(offsets));
}

SpanSet SpanSet::FromRanges(std::span<const CharRange> ranges) {
  std::vector<Offset> offsets;
  for (const CharRange& r : ranges) {
    for (Offset i = r.start; i < r.end; ++i) offsets.push_back(i);
  }
  return FromOffsets(std::move(offsets));
}

SpanSet SpanSet::Parse(std::string_view literal) {
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kParse, "malformed span literal '" +
                                        std::string(literal) + "': " + why);
  };
  std::size_t i = 0;
  auto skip_space = [&] {
    while (i < literal.size() &&
           std::isspace(static_cast<unsigned char>(literal[i]))) {
      ++i;
    }
  };
  skip_space();
  if (i >= literal.size() || literal[i] != '[') throw fail("expected '['");
  ++i;
  std::vector<Offset> offsets;
  skip_space();
  if (i < literal.size() && literal[i] == ']') {
    ++i;
  } else {
    for (;;) {
      skip_space();
      const std::size_t begin = i;
      if (i < literal.size() && (literal[i] == '-' || literal[i] == '+')) ++i;
      while (i < literal.size() &&
             std::isdigit(static_cast<unsigned char>(literal[i]))) {
        ++i;
      }
      if (i == begin || !std::isdigit(static_cast<unsigned char>(
                            literal[i - 1]))) {
        throw fail("expected integer");
      }
      const long long value =
          std::stoll(std::string(literal.substr(begin, i - begin)));
      if (value < 0) throw fail("negative offset");
      if (value > INT32_MAX) throw fail("offset too large");
      offsets.push_back(static_cast<Offset>(value));
      skip_space();
      if (i < literal.size() && literal[i] == ',') {
        ++i;
        continue;
      }
      if (i < literal.size() && literal[i] == ']') {
        ++i;
        break;
      }
      throw fail("expected ',' or ']'");
    }
  }
  skip_space();
  if (i != literal.size()) throw fail("trailing characters");
  return FromOffsets(std::move(offsets));
}

bool SpanSet::Contains(Offset offset) const {
  return std::binary_search(offsets_.begin(), offsets_.end(), offset);
}

bool SpanSet::FitsWithin(std::size_t text_length) const {
  return offsets_.empty() ||
         static_cast<std::size_t>(offsets_.back()) < text_length;
}

std::vector<CharRange> SpanSet::Ranges() const {
  std::vector<CharRange> ranges;
  for (Offset o : offsets_) {
    if (!ranges.empty() && ranges.back().end == o) {
      ++ranges.back().end;
    } else {
      ranges.push_back({o, o + 1});
    }
  }
  return ranges;
}

std::size_t SpanSet::IntersectionSize(const SpanSet& other) const {
  std::size_t count = 0;
  auto a = offsets_.begin();
  auto b = other.offsets_.begin();
  while (a != offsets_.end() && b != other.offsets_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++count, ++a, ++b;
    }
  }
  return count;
}

SpanSet SpanSet::Union(const SpanSet& other) const {
  std::vector<Offset> merged;
  merged.reserve(offsets_.size() + other.offsets_.size());
  std::set_union(offsets_.begin(), offsets_.end(), other.offsets_.begin(),
                 other.offsets_.end(), std::back_inserter(merged));
  return SpanSet(std::move(merged));
}

std::string SpanSet::ToString() const {
  std::string out = "[";
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(offsets_[i]);
  }
  out += "]";
  return out;
}

const char* PostLabelName(PostLabel label) {
  return label == PostLabel::kOffensive ? "OFF" : "NOT";
}

std::optional<PostLabel> ParsePostLabel(std::string_view name) {
  if (name == "OFF") return PostLabel::kOffensive;
  if (name == "NOT") return PostLabel::kNotOffensive;
  return std::nullopt;
}

const Post* Dataset::Find(std::string_view id) const {
  for (const Post& post : posts) {
    if (post.id == id) return &post;
  }
  return nullptr;
}

Dataset ParseSpanCsv(std::istream& in, const LoadOptions& options) {
  CsvReader reader(in);
  auto header = reader.Next();
  if (!header) throw Error(ErrorCode::kParse, "missing header row");
  if (!header->fields.empty()) StripBom(&header->fields.front());
  const int spans_col = ColumnIndex(header->fields, "spans");
  const int text_col = ColumnIndex(header->fields, "text");
  const int id_col = ColumnIndex(header->fields, "id");
  if (spans_col < 0 || text_col < 0) {
    throw Error(ErrorCode::kParse,
                "line 1: header must contain 'spans' and 'text' columns");
  }

  Dataset dataset;
  dataset.name = options.name;
  dataset.language = options.language;
  dataset.granularity = Granularity::kSpan;
  std::size_t row = 0;
  while (auto record = reader.Next()) {
    const std::size_t index = row++;
    // A trailing empty line is not a record.
    if (record->fields.size() == 1 && record->fields[0].empty()) continue;
    const auto& fields = record->fields;
    const std::string where = "line " + std::to_string(record->line);
    try {
      const int needed = std::max({spans_col, text_col, id_col}) + 1;
      if (static_cast<int>(fields.size()) < needed) {
        throw Error(ErrorCode::kParse,
                    where + ": expected " + std::to_string(needed) +
                        " fields, found " + std::to_string(fields.size()));
      }
      Post post;
      post.id = id_col >= 0 ? fields[id_col] : std::to_string(index);
      post.text = fields[text_col];
      try {
        post.gold_spans = SpanSet::Parse(fields[spans_col]);
      } catch (const Error& e) {
        throw Error(ErrorCode::kParse, where + ": " + e.what());
      }
      CheckBounds(post);
      dataset.posts.push_back(std::move(post));
    } catch (const Error& e) {
      RowFailure(options, e);
    }
  }
  return dataset;
}

Dataset ParseSpanCsv(const std::filesystem::path& path,
                     const LoadOptions& options) {
  auto in = OpenForRead(path);
  Dataset dataset = ParseSpanCsv(in, options);
  dataset.name = DefaultName(options, path);
  return dataset;
}

Dataset ParsePostTsv(std::istream& in, const PostSchema& schema,
                     const LoadOptions& options) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, "missing header row");
  }
  auto split = [](const std::string& text) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = text.find('\t', start);
      fields.push_back(text.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (!fields.empty() && !fields.back().empty() &&
        fields.back().back() == '\r') {
      fields.back().pop_back();
    }
    return fields;
  };
  auto header = split(line);
  if (!header.empty()) StripBom(&header.front());
  const int id_col = ColumnIndex(header, schema.id_column);
  const int text_col = ColumnIndex(header, schema.text_column);
  const int label_col = ColumnIndex(header, schema.label_column);
  if (id_col < 0 || text_col < 0 || label_col < 0) {
    throw Error(ErrorCode::kParse, "line 1: header lacks schema columns '" +
                                       schema.id_column + "', '" +
                                       schema.text_column + "', '" +
                                       schema.label_column + "'");
  }

  Dataset dataset;
  dataset.name = options.name;
  dataset.language = options.language;
  dataset.granularity = Granularity::kPost;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    const std::string where = "line " + std::to_string(line_number);
    try {
      const int needed = std::max({id_col, text_col, label_col}) + 1;
      if (static_cast<int>(fields.size()) < needed) {
        throw Error(ErrorCode::kParse, where + ": expected " +
                                           std::to_string(needed) +
                                           " fields");
      }
      const auto it = schema.labels.find(fields[label_col]);
      if (it == schema.labels.end()) {
        throw Error(ErrorCode::kParse, where + ": unmapped label '" +
                                           fields[label_col] + "'");
      }
      Post post;
      post.id = fields[id_col];
      post.text = fields[text_col];
      post.label = it->second;
      dataset.posts.push_back(std::move(post));
    } catch (const Error& e) {
      RowFailure(options, e);
    }
  }
  return dataset;
}

Dataset ParsePostTsv(const std::filesystem::path& path,
                     const PostSchema& schema, const LoadOptions& options) {
  auto in = OpenForRead(path);
  Dataset dataset = ParsePostTsv(in, schema, options);
  dataset.name = DefaultName(options, path);
  return dataset;
}

Dataset ReadJsonl(std::istream& in, const LoadOptions& options) {
  Dataset dataset;
  dataset.name = options.name;
  dataset.language = options.language;
  bool any_spans = false;
  bool all_spans = true;
  bool all_labels = true;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_number);
    try {
      json row;
      try {
        row = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, where + ": " + e.what());
      }
      if (!row.is_object() || !row.contains("text") ||
          !row["text"].is_string()) {
        throw Error(ErrorCode::kParse, where + ": object with 'text' expected");
      }
      Post post;
      post.id = row.contains("id")
                    ? (row["id"].is_string() ? row["id"].get<std::string>()
                                             : row["id"].dump())
                    : std::to_string(dataset.posts.size());
      post.text = row["text"].get<std::string>();
      if (row.contains("spans") && !row["spans"].is_null()) {
        if (!row["spans"].is_array()) {
          throw Error(ErrorCode::kParse, where + ": 'spans' must be an array");
        }
        std::vector<Offset> offsets;
        for (const auto& v : row["spans"]) {
          if (!v.is_number_integer()) {
            throw Error(ErrorCode::kParse, where + ": non-integer offset");
          }
          offsets.push_back(v.get<Offset>());
        }
        post.gold_spans = SpanSet::FromOffsets(std::move(offsets));
        CheckBounds(post);
      }
      if (row.contains("label") && !row["label"].is_null()) {
        const auto name = row["label"].get<std::string>();
        post.label = ParsePostLabel(name);
        if (!post.label) {
          throw Error(ErrorCode::kParse,
                      where + ": unmapped label '" + name + "'");
        }
      }
      any_spans |= post.gold_spans.has_value();
      all_spans &= post.gold_spans.has_value();
      all_labels &= post.label.has_value();
      dataset.posts.push_back(std::move(post));
    } catch (const Error& e) {
      RowFailure(options, e);
    }
  }
  dataset.granularity = (any_spans && all_spans) || !all_labels
                            ? Granularity::kSpan
                            : Granularity::kPost;
  return dataset;
}

Dataset ReadJsonl(const std::filesystem::path& path,
                  const LoadOptions& options) {
  auto in = OpenForRead(path);
  Dataset dataset = ReadJsonl(in, options);
  dataset.name = DefaultName(options, path);
  return dataset;
}

void WriteJsonl(const Dataset& dataset, std::ostream& out) {
  for (const Post& post : dataset.posts) {
    json row = {{"id", post.id}, {"text", post.text}};
    if (post.gold_spans) row["spans"] = post.gold_spans->offsets();
    if (post.label) row["label"] = PostLabelName(*post.label);
    out << row.dump() << '\n';
  }
}

void WriteSpanCsv(const Dataset& dataset, std::ostream& out) {
  out << "spans,text\n";
  for (const Post& post : dataset.posts) {
    const SpanSet spans = post.gold_spans.value_or(SpanSet{});
    out << CsvQuote(spans.ToString()) << ',' << CsvQuote(post.text) << '\n';
  }
}

Dataset LoadDataset(const std::filesystem::path& path,
                    const LoadOptions& options, const PostSchema& schema) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  Dataset dataset;
  if (ext == ".csv") {
    dataset = ParseSpanCsv(path, options);
  } else if (ext == ".tsv") {
    dataset = ParsePostTsv(path, schema, options);
  } else if (ext == ".jsonl" || ext == ".json") {
    dataset = ReadJsonl(path, options);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unrecognized dataset extension '" + ext + "' for " +
                    path.string());
  }
  ValidateDataset(dataset);
  return dataset;
}

void ValidateDataset(const Dataset& dataset) {
  for (const Post& post : dataset.posts) {
    if (dataset.granularity == Granularity::kSpan && !post.gold_spans) {
      throw Error(ErrorCode::kValidation,
                  "post '" + post.id + "' lacks gold spans in a span dataset");
    }
    if (dataset.granularity == Granularity::kPost && !post.label) {
      throw Error(ErrorCode::kValidation,
                  "post '" + post.id + "' lacks a label in a post dataset");
    }
    CheckBounds(post);
  }
}

std::pair<Dataset, Dataset> SplitTrainValidation(const Dataset& dataset,
                                                 double ratio,
                                                 std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "split ratio must lie strictly between 0 and 1");
  }
  const std::size_t n = dataset.posts.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot split a dataset with fewer than 2 posts");
  }
  // The epsilon keeps products like 10 * 0.8 from rounding up to 9.
  auto first = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * ratio - 1e-9));
  first = std::clamp<std::size_t>(first, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  Shuffle(order, rng);

  Dataset train{dataset.name + ":train", dataset.language,
                dataset.granularity, {}};
  Dataset validation{dataset.name + ":validation", dataset.language,
                     dataset.granularity, {}};
  for (std::size_t i = 0; i < n; ++i) {
    (i < first ? train : validation).posts.push_back(dataset.posts[order[i]]);
  }
  return {std::move(train), std::move(validation)};
}

}  // namespace offspan
