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

#include "offspan/csv.h"

#include "offspan/error.h"

namespace offspan {

std::optional<CsvReader::Record> CsvReader::Next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

  Record record;
  record.line = line_;
  std::string field;
  enum { kFieldStart, kUnquoted, kQuoted, kQuoteInQuoted } state = kFieldStart;

  auto finish_field = [&] {
    record.fields.push_back(std::move(field));
    field.clear();
  };

  for (;;) {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) {
      if (state == kQuoted) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(record.line) +
                        ": unterminated quoted field");
      }
      finish_field();
      return record;
    }
    const char ch = static_cast<char>(c);
    switch (state) {
      case kFieldStart:
        if (ch == '"') {
          state = kQuoted;
          break;
        }
        state = kUnquoted;
        [[fallthrough]];
      case kUnquoted:
        if (ch == separator_) {
          finish_field();
          state = kFieldStart;
        } else if (ch == '\r') {
          if (in_.peek() == '\n') in_.get();
          ++line_;
          finish_field();
          return record;
        } else if (ch == '\n') {
          ++line_;
          finish_field();
          return record;
        } else {
          field.push_back(ch);
        }
        break;
      case kQuoted:
        if (ch == '"') {
          state = kQuoteInQuoted;
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        break;
      case kQuoteInQuoted:
        if (ch == '"') {
          field.push_back('"');
          state = kQuoted;
        } else if (ch == separator_) {
          finish_field();
          state = kFieldStart;
        } else if (ch == '\n' || ch == '\r') {
          if (ch == '\r' && in_.peek() == '\n') in_.get();
          ++line_;
          finish_field();
          return record;
        } else {
          throw Error(ErrorCode::kParse,
                      "line " + std::to_string(line_) +
                          ": unexpected character after closing quote");
        }
        break;
    }
  }
}

std::string CsvQuote(std::string_view field, char separator) {
  const bool needs_quotes =
      field.find_first_of(std::string{'"', '\n', '\r', separator}) !=
      std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace offspan
