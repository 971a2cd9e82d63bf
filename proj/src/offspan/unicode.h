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

#ifndef OFFSPAN_UNICODE_H_
#define OFFSPAN_UNICODE_H_

#include <string>
#include <string_view>

// All character offsets in offspan are code-point indices. These helpers are
// the only place that converts between UTF-8 bytes and code points.

namespace offspan {

// Invalid byte sequences decode to U+FFFD, one per offending byte, so the
// code-point length of a text is always well defined.
std::u32string DecodeUtf8(std::string_view text);
std::string EncodeUtf8(std::u32string_view text);
void AppendUtf8(char32_t c, std::string* out);

std::size_t CodePointLength(std::string_view text);

bool IsSpace(char32_t c);
bool IsAlnum(char32_t c);
bool IsPunct(char32_t c);
bool IsApostrophe(char32_t c);
char32_t ToLower(char32_t c);

// Per-code-point lowercase; length and offsets are preserved.
std::u32string FoldCase(std::u32string_view text);
std::string FoldCaseUtf8(std::string_view text);

}  // namespace offspan

#endif  // OFFSPAN_UNICODE_H_
