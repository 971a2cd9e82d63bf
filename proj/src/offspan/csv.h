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

#ifndef OFFSPAN_CSV_H_
#define OFFSPAN_CSV_H_

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace offspan {

// RFC 4180 record reader. Quoted fields may contain separators, doubled
// quotes and line breaks; a record therefore spans one or more lines.
class CsvReader {
 public:
  struct Record {
    std::vector<std::string> fields;
    int line = 0;  // 1-based line on which the record starts
  };

  explicit CsvReader(std::istream& in, char separator = ',')
      : in_(in), separator_(separator) {}

  // Returns nullopt at end of input. Throws Error(kParse) on an unterminated
  // quoted field or stray characters after a closing quote.
  std::optional<Record> Next();

 private:
  std::istream& in_;
  char separator_;
  int line_ = 1;
};

std::string CsvQuote(std::string_view field, char separator = ',');

}  // namespace offspan

#endif  // OFFSPAN_CSV_H_
