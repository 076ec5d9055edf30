#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mvc/bytes.hpp"
#include "mvc/file_io.hpp"
#include "mvc/key_material.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "mvc-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline mvc::Bytes random_bytes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  mvc::Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

inline mvc::KeyMaterial random_key(std::uint64_t seed) {
  const mvc::Bytes raw = random_bytes(mvc::KeyMaterial::kSize, seed);
  return mvc::KeyMaterial(std::span<const std::uint8_t, 32>(raw.data(), 32));
}

inline mvc::Bytes bytes_of(const mvc::KeyMaterial& key) {
  return mvc::Bytes(key.bytes().begin(), key.bytes().end());
}

/// True if `needle` occurs anywhere in any regular file below `dir`.
inline bool any_file_contains(const std::filesystem::path& dir, mvc::ByteView needle) {
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const mvc::Bytes content = mvc::read_file(entry.path());
    if (std::search(content.begin(), content.end(), needle.begin(), needle.end()) != content.end()) {
      return true;
    }
  }
  return false;
}

}  // namespace testutil
