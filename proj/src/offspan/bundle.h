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

#ifndef OFFSPAN_BUNDLE_H_
#define OFFSPAN_BUNDLE_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace offspan {

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::filesystem::path& path);

// Single-file archive of a model directory tree (regular files only, paths
// stored relative and sorted so that equal trees give equal bytes).
void PackDirectory(const std::filesystem::path& dir,
                   const std::filesystem::path& bundle);

// Extracts into `dir` (created if missing). Throws Error(kParse) on a
// malformed bundle or an entry escaping `dir`.
void UnpackBundle(const std::filesystem::path& bundle,
                  const std::filesystem::path& dir);

}  // namespace offspan

#endif  // OFFSPAN_BUNDLE_H_
