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

#include "offspan/unicode.h"

#include <locale>

namespace offspan {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

const std::ctype<wchar_t>& Facet() {
  static const std::locale* locale = [] {
    try {
      return new std::locale("C.UTF-8");
    } catch (const std::runtime_error&) {
      return new std::locale("C");
    }
  }();
  return std::use_facet<std::ctype<wchar_t>>(*locale);
}

}  // namespace

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3, cp = b0 & 0x07, min = 0x10000;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + extra >= text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

void AppendUtf8(char32_t c, std::string* out) {
  if (c < 0x80) {
    out->push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (c >> 6)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (c >> 12)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (c >> 18)));
    out->push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string EncodeUtf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) AppendUtf8(c, &out);
  return out;
}

std::size_t CodePointLength(std::string_view text) {
  return DecodeUtf8(text).size();
}

bool IsSpace(char32_t c) {
  // NBSP and friends are not "space" in glibc's ctype but are separators
  // in practice.
  if (c == 0xA0 || c == 0x2007 || c == 0x202F || c == 0xFEFF) return true;
  return Facet().is(std::ctype_base::space, static_cast<wchar_t>(c));
}

namespace {

// Combining marks that glibc leaves outside "alnum" (viramas, vowel signs,
// diacritics). They belong to the preceding letter.
bool IsCombiningMark(char32_t c) {
  if ((c >= 0x0300 && c <= 0x036F) || (c >= 0x0483 && c <= 0x0489) ||
      (c >= 0x064B && c <= 0x065F) || c == 0x0670 ||
      (c >= 0x1AB0 && c <= 0x1AFF) || (c >= 0x1DC0 && c <= 0x1DFF) ||
      (c >= 0x20D0 && c <= 0x20FF) || (c >= 0xFE20 && c <= 0xFE2F)) {
    return true;
  }
  if (c >= 0x0591 && c <= 0x05C7) {
    return c != 0x05BE && c != 0x05C0 && c != 0x05C3 && c != 0x05C6;
  }
  // Brahmic and South-East Asian blocks: everything except their
  // punctuation signs and digits-as-symbols.
  if (c >= 0x0900 && c <= 0x109F) {
    return c != 0x0964 && c != 0x0965 && c != 0x0970 && c != 0x0DF4 &&
           c != 0x0E4F && c != 0x0E5A && c != 0x0E5B &&
           !(c >= 0x0F04 && c <= 0x0F12) && !(c >= 0x104A && c <= 0x104F);
  }
  return false;
}

}  // namespace

bool IsAlnum(char32_t c) {
  return Facet().is(std::ctype_base::alnum, static_cast<wchar_t>(c)) ||
         IsCombiningMark(c);
}

bool IsPunct(char32_t c) {
  return !IsSpace(c) && !IsAlnum(c);
}

bool IsApostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

char32_t ToLower(char32_t c) {
  return static_cast<char32_t>(Facet().tolower(static_cast<wchar_t>(c)));
}

std::u32string FoldCase(std::u32string_view text) {
  std::u32string out(text);
  for (char32_t& c : out) c = ToLower(c);
  return out;
}

std::string FoldCaseUtf8(std::string_view text) {
  return EncodeUtf8(FoldCase(DecodeUtf8(text)));
}

}  // namespace offspan
