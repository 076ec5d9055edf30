#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "mvc/aes.hpp"
#include "mvc/bytes.hpp"
#include "mvc/errors.hpp"
#include "mvc/key_material.hpp"
#include "mvc/secure_memory.hpp"
#include "mvc/sha256.hpp"

namespace mvc {

/// How a model was sealed. The numeric values are the on-disk mode byte.
enum class CipherMode : std::uint8_t {
  RawEcbPkcs7 = 0,
  ChunkedCtr = 1,
};

constexpr std::string_view to_string(CipherMode mode) noexcept {
  return mode == CipherMode::RawEcbPkcs7 ? "raw" : "ctr";
}

inline CipherMode parse_cipher_mode(std::string_view name) {
  if (name == "raw") return CipherMode::RawEcbPkcs7;
  if (name == "ctr") return CipherMode::ChunkedCtr;
  throw ModeError("mode: expected 'raw' or 'ctr'");
}

using FileNonce = std::array<std::uint8_t, 8>;

inline constexpr std::size_t kAesBlock = Aes256::kBlockSize;

/// Length of ECB+PKCS#7 output for a plaintext of `n` bytes.
constexpr std::size_t ecb_ciphertext_length(std::size_t n) noexcept {
  return (n / kAesBlock + 1) * kAesBlock;
}

/// AES-256-ECB with PKCS#7 padding. Always appends 1..16 padding bytes.
inline Bytes ecb_encrypt(ByteView plaintext, const KeyMaterial& key) {
  const Aes256 aes(key.bytes());
  const std::size_t full = plaintext.size() / kAesBlock * kAesBlock;
  Bytes out(ecb_ciphertext_length(plaintext.size()));
  for (std::size_t off = 0; off < full; off += kAesBlock) {
    aes.encrypt_block(plaintext.data() + off, out.data() + off);
  }
  std::array<std::uint8_t, kAesBlock> last{};
  const std::size_t tail = plaintext.size() - full;
  const auto pad = static_cast<std::uint8_t>(kAesBlock - tail);
  std::copy_n(plaintext.data() + full, tail, last.begin());
  std::fill(last.begin() + static_cast<std::ptrdiff_t>(tail), last.end(), pad);
  aes.encrypt_block(last.data(), out.data() + full);
  secure_zero(last.data(), last.size());
  return out;
}

/// Inverse of ecb_encrypt. Any padding defect raises the same PaddingError,
/// with no detail about where the defect was found.
inline SecureBytes ecb_decrypt(ByteView ciphertext, const KeyMaterial& key) {
  if (ciphertext.empty() || ciphertext.size() % kAesBlock != 0) {
    throw LengthError("ecb: ciphertext length must be a positive multiple of 16, got " +
                      std::to_string(ciphertext.size()));
  }
  const Aes256 aes(key.bytes());
  SecureBytes out(ciphertext.size());
  for (std::size_t off = 0; off < ciphertext.size(); off += kAesBlock) {
    aes.decrypt_block(ciphertext.data() + off, out.data() + off);
  }

  const std::uint8_t pad = out.back();
  std::uint8_t bad = static_cast<std::uint8_t>((pad == 0) | (pad > kAesBlock));
  for (std::size_t i = 1; i <= kAesBlock; ++i) {
    // Inspect all 16 trailing bytes regardless of pad to keep the check uniform.
    const std::uint8_t in_pad = static_cast<std::uint8_t>(i <= pad);
    bad |= static_cast<std::uint8_t>(in_pad & (out[out.size() - i] != pad));
  }
  if (bad != 0) throw PaddingError("ecb: invalid padding");
  out.resize(out.size() - pad);
  return out;
}

inline constexpr std::uint64_t kMaxChunkIndex = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kMaxCtrLength = std::uint64_t{1} << 36;

/// Builds the CTR counter block: nonce(8) || chunk index BE32 || block BE32.
inline std::array<std::uint8_t, kAesBlock> ctr_counter_block(const FileNonce& nonce,
                                                            std::uint32_t chunk_index,
                                                            std::uint32_t block_counter) noexcept {
  std::array<std::uint8_t, kAesBlock> block{};
  std::copy(nonce.begin(), nonce.end(), block.begin());
  store_be32(block.data() + 8, chunk_index);
  store_be32(block.data() + 12, block_counter);
  return block;
}

/// XORs `in` with the keystream for one chunk and writes to `out`. `in` and
/// `out` may alias exactly.
inline void ctr_apply(ByteView in, MutableByteView out, const Aes256& aes, const FileNonce& nonce,
                      std::uint64_t chunk_index) {
  if (chunk_index >= kMaxChunkIndex) throw RangeError("ctr: chunk index exceeds 32 bits");
  if (in.size() >= kMaxCtrLength) throw RangeError("ctr: chunk length exceeds 2^36 bytes");
  if (out.size() != in.size()) throw RangeError("ctr: output length differs from input length");

  auto counter = ctr_counter_block(nonce, static_cast<std::uint32_t>(chunk_index), 0);
  std::array<std::uint8_t, kAesBlock> stream{};
  std::uint32_t block = 0;
  for (std::size_t off = 0; off < in.size(); off += kAesBlock, ++block) {
    store_be32(counter.data() + 12, block);
    aes.encrypt_block(counter.data(), stream.data());
    const std::size_t n = std::min(kAesBlock, in.size() - off);
    for (std::size_t i = 0; i < n; ++i) out[off + i] = in[off + i] ^ stream[i];
  }
  secure_zero(stream.data(), stream.size());
}

/// AES-256-CTR over one chunk. Self-inverse for a fixed (key, nonce, index).
inline Bytes ctr_crypt(ByteView data, const KeyMaterial& key, const FileNonce& nonce,
                       std::uint64_t chunk_index) {
  const Aes256 aes(key.bytes());
  Bytes out(data.size());
  ctr_apply(data, out, aes, nonce, chunk_index);
  return out;
}

}  // namespace mvc
