#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "mvc/bytes.hpp"
#include "mvc/errors.hpp"
#include "mvc/secure_memory.hpp"
#include "mvc/sha256.hpp"

namespace mvc {

using Fingerprint = std::array<std::uint8_t, 4>;

/// A 256-bit symmetric key. The raw bytes are only reachable through
/// bytes(); streaming and fingerprint_hex() expose the fingerprint alone.
class KeyMaterial {
 public:
  static constexpr std::size_t kSize = 32;

  explicit KeyMaterial(std::span<const std::uint8_t, kSize> bytes) noexcept {
    std::copy(bytes.begin(), bytes.end(), bytes_.begin());
    const Digest d = sha256(bytes_);
    std::copy_n(d.begin(), fingerprint_.size(), fingerprint_.begin());
  }

  KeyMaterial(const KeyMaterial&) = default;
  KeyMaterial& operator=(const KeyMaterial&) = default;
  ~KeyMaterial() { secure_zero(bytes_.data(), bytes_.size()); }

  std::span<const std::uint8_t, kSize> bytes() const noexcept { return bytes_; }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }
  std::string fingerprint_hex() const { return to_hex(fingerprint_); }

  friend bool operator==(const KeyMaterial& a, const KeyMaterial& b) noexcept {
    return constant_time_equal(a.bytes_, b.bytes_);
  }

  friend std::ostream& operator<<(std::ostream& os, const KeyMaterial& key) {
    return os << "KeyMaterial{fingerprint=" << key.fingerprint_hex() << "}";
  }

 private:
  std::array<std::uint8_t, kSize> bytes_{};
  Fingerprint fingerprint_{};
};

namespace detail {

/// Decodes UTF-8 into code points. Rejects malformed sequences, overlong
/// forms and surrogate code points.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xe0) == 0xc0) {
      len = 2;
      cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
      len = 3;
      cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw EncodingError("passphrase: invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size()) throw EncodingError("passphrase: truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xc0) != 0x80) throw EncodingError("passphrase: invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3f);
    }
    static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[len]) throw EncodingError("passphrase: overlong UTF-8 sequence");
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
      throw EncodingError("passphrase: invalid code point");
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kPassphraseLength = 16;

/// Turns a 16-character passphrase into key bytes by encoding it as
/// UTF-16 big-endian: 16 characters x 2 bytes = 32 bytes. Every character
/// must lie in the Basic Multilingual Plane so it encodes to one unit.
inline KeyMaterial derive_key(std::string_view passphrase) {
  std::u32string cps = detail::decode_utf8(passphrase);
  for (char32_t cp : cps) {
    if (cp > 0xffff) {
      secure_zero(cps.data(), cps.size() * sizeof(char32_t));
      throw EncodingError("passphrase: character outside the Basic Multilingual Plane");
    }
  }
  if (cps.size() != kPassphraseLength) {
    const std::size_t n = cps.size();
    secure_zero(cps.data(), cps.size() * sizeof(char32_t));
    throw LengthError("passphrase: expected 16 characters, got " + std::to_string(n));
  }
  std::array<std::uint8_t, KeyMaterial::kSize> raw{};
  for (std::size_t i = 0; i < cps.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(cps[i] >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(cps[i]);
  }
  KeyMaterial key(raw);
  secure_zero(raw.data(), raw.size());
  secure_zero(cps.data(), cps.size() * sizeof(char32_t));
  return key;
}

/// Raw-key escape hatch: 64 hex digits.
inline KeyMaterial load_key_hex(std::string_view hex) {
  if (hex.size() != 2 * KeyMaterial::kSize) {
    throw LengthError("key hex: expected 64 hex digits, got " + std::to_string(hex.size()));
  }
  Bytes raw = from_hex(hex);
  KeyMaterial key(std::span<const std::uint8_t, KeyMaterial::kSize>(raw.data(), KeyMaterial::kSize));
  secure_zero(raw.data(), raw.size());
  return key;
}

}  // namespace mvc
