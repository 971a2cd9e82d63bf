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

#ifndef OFFSPAN_CORPUS_H_
#define OFFSPAN_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace offspan {

// Index of a code point within a text.
using Offset = std::int32_t;

// Half-open [start, end) range of code points.
struct CharRange {
  Offset start = 0;
  Offset end = 0;

  Offset length() const { return end - start; }
  bool operator==(const CharRange&) const = default;
};

// Sorted set of distinct character offsets marking offensive characters.
// Stored per character (every offensive index listed), matching the TSD
// annotation convention.
class SpanSet {
 public:
  SpanSet() = default;

  // Sorts and deduplicates. Throws Error(kValidation) on negative offsets.
  static SpanSet FromOffsets(std::vector<Offset> offsets);
  static SpanSet FromRanges(std::span<const CharRange> ranges);

  // Parses a bracketed integer list such as "[3, 4, 5]". Unsorted or
  // repeated entries are normalized. Throws Error(kParse).
  static SpanSet Parse(std::string_view literal);

  const std::vector<Offset>& offsets() const { return offsets_; }
  std::size_t size() const { return offsets_.size(); }
  bool empty() const { return offsets_.empty(); }
  bool Contains(Offset offset) const;

  // True when every offset is < text_length.
  bool FitsWithin(std::size_t text_length) const;

  // Maximal runs of consecutive offsets, as end-exclusive ranges.
  std::vector<CharRange> Ranges() const;

  std::size_t IntersectionSize(const SpanSet& other) const;
  SpanSet Union(const SpanSet& other) const;

  // "[i1, i2, ...]"
  std::string ToString() const;

  bool operator==(const SpanSet&) const = default;

 private:
  explicit SpanSet(std::vector<Offset> sorted) : offsets_(std::move(sorted)) {}

  std::vector<Offset> offsets_;
};

enum class PostLabel { kOffensive, kNotOffensive };

// "OFF" / "NOT"
const char* PostLabelName(PostLabel label);
std::optional<PostLabel> ParsePostLabel(std::string_view name);

struct Post {
  std::string id;
  std::string text;  // UTF-8
  std::optional<SpanSet> gold_spans;
  std::optional<PostLabel> label;
};

enum class Granularity { kSpan, kPost };

struct Dataset {
  std::string name;
  std::string language = "en";  // BCP-47
  Granularity granularity = Granularity::kSpan;
  std::vector<Post> posts;

  std::size_t size() const { return posts.size(); }
  const Post* Find(std::string_view id) const;
};

struct LoadOptions {
  std::string name;
  std::string language = "en";
  // Skip and log unparseable rows instead of aborting the load.
  bool lenient = false;
};

// Column mapping for tab-separated post-level files (OLID style).
struct PostSchema {
  std::string id_column = "id";
  std::string text_column = "text";
  std::string label_column = "label";
  // Case-sensitive label strings.
  std::map<std::string, PostLabel, std::less<>> labels = {
      {"OFF", PostLabel::kOffensive}, {"NOT", PostLabel::kNotOffensive}};
};

// TSD CSV with header containing `spans` and `text` (and optionally `id`).
// Post ids default to the zero-based row index.
Dataset ParseSpanCsv(const std::filesystem::path& path,
                     const LoadOptions& options = {});
Dataset ParseSpanCsv(std::istream& in, const LoadOptions& options = {});

Dataset ParsePostTsv(const std::filesystem::path& path,
                     const PostSchema& schema,
                     const LoadOptions& options = {});
Dataset ParsePostTsv(std::istream& in, const PostSchema& schema,
                     const LoadOptions& options = {});

// Canonical JSON-lines persistence: {"id","text","spans"?,"label"?}.
Dataset ReadJsonl(const std::filesystem::path& path,
                  const LoadOptions& options = {});
Dataset ReadJsonl(std::istream& in, const LoadOptions& options = {});
void WriteJsonl(const Dataset& dataset, std::ostream& out);
void WriteSpanCsv(const Dataset& dataset, std::ostream& out);

// Dispatches on extension: .csv -> span CSV, .tsv -> post TSV, .jsonl/.json
// -> canonical JSON-lines.
Dataset LoadDataset(const std::filesystem::path& path,
                    const LoadOptions& options = {},
                    const PostSchema& schema = {});

// Checks the granularity and bound invariants. Throws Error(kValidation)
// naming the first offending post.
void ValidateDataset(const Dataset& dataset);

// Deterministic shuffle-and-cut. The first part holds ceil(n * ratio) posts
// (clamped so that neither part is empty), the second the remainder.
std::pair<Dataset, Dataset> SplitTrainValidation(const Dataset& dataset,
                                                 double ratio,
                                                 std::uint64_t seed);

}  // namespace offspan

#endif  // OFFSPAN_CORPUS_H_
