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

#include "offspan/bundle.h"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <vector>

#include "offspan/error.h"

namespace offspan {
namespace {

namespace fs = std::filesystem;

constexpr char kBundleMagic[4] = {'O', 'S', 'P', 'B'};
constexpr std::uint32_t kBundleVersion = 1;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorCode::kRuntime, "SHA-256 initialisation failed");
    }
  }
  void Update(const void* data, std::size_t n) {
    EVP_DigestUpdate(ctx_.get(), data, n);
  }
  std::string HexDigest() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
      hex += kHex[digest[i] >> 4];
      hex += kHex[digest[i] & 0xF];
    }
    return hex;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

template <typename T>
void WriteInt(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T ReadInt(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

std::string Sha256Hex(std::string_view bytes) {
  Sha256 h;
  h.Update(bytes.data(), bytes.size());
  return h.HexDigest();
}

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Sha256 h;
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    h.Update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.HexDigest();
}

void PackDirectory(const fs::path& dir, const fs::path& bundle) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::ofstream out(bundle, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + bundle.string());
  out.write(kBundleMagic, sizeof(kBundleMagic));
  WriteInt<std::uint32_t>(out, kBundleVersion);
  WriteInt<std::uint32_t>(out, static_cast<std::uint32_t>(files.size()));
  for (const fs::path& file : files) {
    const std::string rel = fs::relative(file, dir).generic_string();
    WriteInt<std::uint32_t>(out, static_cast<std::uint32_t>(rel.size()));
    out.write(rel.data(), static_cast<std::streamsize>(rel.size()));
    WriteInt<std::uint64_t>(out, fs::file_size(file));
    std::ifstream in(file, std::ios::binary);
    out << in.rdbuf();
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + bundle.string());
}

void UnpackBundle(const fs::path& bundle, const fs::path& dir) {
  std::ifstream in(bundle, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + bundle.string());
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kParse, bundle.string() + ": " + why);
  };
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 4, kBundleMagic)) {
    throw corrupt("not a model bundle");
  }
  if (ReadInt<std::uint32_t>(in) != kBundleVersion) {
    throw corrupt("unsupported bundle version");
  }
  const auto count = ReadInt<std::uint32_t>(in);
  fs::create_directories(dir);
  std::vector<char> buffer(1 << 16);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = ReadInt<std::uint32_t>(in);
    if (!in || name_len == 0 || name_len > 4096) throw corrupt("bad entry");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const fs::path rel = fs::path(name).lexically_normal();
    if (rel.is_absolute() || rel.empty() || *rel.begin() == "..") {
      throw corrupt("entry '" + name + "' escapes the target directory");
    }
    auto remaining = ReadInt<std::uint64_t>(in);
    if (!in) throw corrupt("truncated entry header");
    const fs::path target = dir / rel;
    fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + target.string());
    while (remaining > 0) {
      const auto chunk =
          static_cast<std::streamsize>(std::min<std::uint64_t>(remaining,
                                                               buffer.size()));
      in.read(buffer.data(), chunk);
      if (in.gcount() != chunk) throw corrupt("truncated entry '" + name + "'");
      out.write(buffer.data(), chunk);
      remaining -= static_cast<std::uint64_t>(chunk);
    }
  }
}

}  // namespace offspan
