#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mvc/bytes.hpp"
#include "mvc/container.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/file_io.hpp"
#include "mvc/key_material.hpp"
#include "mvc/random.hpp"
#include "mvc/secure_memory.hpp"
#include "mvc/sha256.hpp"

namespace mvc {

inline constexpr std::uint32_t kMinChunkSize = 4096;

/// Timings split the way the measurement tables do: encryption into memory,
/// then storage (write through fsync and rename).
struct SealReport {
  std::uint64_t input_len = 0;
  std::uint64_t output_len = 0;
  CipherMode mode = CipherMode::ChunkedCtr;
  double encrypt_ms = 0.0;
  double storage_ms = 0.0;
  Digest plaintext_digest{};
};

struct SealResult {
  Bytes sealed;
  SealReport report;
};

using Millis = std::chrono::duration<double, std::milli>;

/// Builds a CTR container with a caller-chosen nonce. seal() draws the nonce
/// from the CSPRNG; this entry point exists for reproducible fixtures.
inline SealedContainer seal_container(ByteView model, const KeyMaterial& key,
                                      std::uint32_t chunk_size, const FileNonce& nonce) {
  if (chunk_size < kMinChunkSize) {
    throw RangeError("chunk_size: must be at least 4096 bytes, got " + std::to_string(chunk_size));
  }
  SealedContainer c;
  ContainerHeader& h = c.header;
  h.mode = CipherMode::ChunkedCtr;
  h.key_fingerprint = key.fingerprint();
  h.file_nonce = nonce;
  h.plaintext_len = model.size();
  h.chunk_size = chunk_size;
  c.chunk_table = plan_chunks(model.size(), chunk_size);
  h.chunk_count = static_cast<std::uint32_t>(c.chunk_table.size());
  h.plaintext_digest = sha256(model);

  c.payload.resize(model.size());
  const Aes256 aes(key.bytes());
  for (std::size_t i = 0; i < c.chunk_table.size(); ++i) {
    const ChunkEntry& e = c.chunk_table[i];
    const auto off = static_cast<std::size_t>(e.ciphertext_offset);
    ctr_apply(model.subspan(off, e.plaintext_len),
              MutableByteView(c.payload).subspan(off, e.plaintext_len), aes, nonce, i);
  }
  return c;
}

/// Encrypts a model in memory. Raw mode yields bare ECB+PKCS#7 ciphertext;
/// CTR mode yields an encoded container with a fresh random nonce.
/// storage_ms is left at zero since nothing is written.
inline SealResult seal(ByteView model, const KeyMaterial& key, CipherMode mode,
                       std::uint32_t chunk_size = kDefaultChunkSize) {
  SealResult result;
  SealReport& r = result.report;
  r.input_len = model.size();
  r.mode = mode;

  const auto start = std::chrono::steady_clock::now();
  if (mode == CipherMode::RawEcbPkcs7) {
    result.sealed = ecb_encrypt(model, key);
    r.plaintext_digest = sha256(model);
  } else {
    FileNonce nonce{};
    fill_random(nonce);
    const SealedContainer c = seal_container(model, key, chunk_size, nonce);
    result.sealed = encode(c);
    r.plaintext_digest = c.header.plaintext_digest;
  }
  r.encrypt_ms = Millis(std::chrono::steady_clock::now() - start).count();
  r.output_len = result.sealed.size();
  return result;
}

inline nlohmann::json to_json(const SealReport& r) {
  return {
      {"input_len", r.input_len},
      {"output_len", r.output_len},
      {"mode", std::string(to_string(r.mode))},
      {"encrypt_ms", r.encrypt_ms},
      {"storage_ms", r.storage_ms},
      {"sha256_hex", to_hex(r.plaintext_digest)},
  };
}

/// The manifest sits next to the sealed file: "<output>.json".
inline std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".json";
  return p;
}

/// Reads a model, seals it and stores it atomically, then writes the JSON
/// manifest. No partially written sealed file is ever left at output_path.
inline SealReport seal_file(const std::filesystem::path& input_path,
                            const std::filesystem::path& output_path, const KeyMaterial& key,
                            CipherMode mode, std::uint32_t chunk_size = kDefaultChunkSize) {
  SealResult result;
  {
    const SecureBytes model = read_file<SecureBytes>(input_path);
    result = seal(model, key, mode, chunk_size);
  }

  const auto start = std::chrono::steady_clock::now();
  write_file_atomic(output_path, result.sealed);
  result.report.storage_ms = Millis(std::chrono::steady_clock::now() - start).count();

  const std::string manifest = to_json(result.report).dump(2) + "\n";
  write_file_atomic(manifest_path_for(output_path), as_bytes(manifest));
  return result.report;
}

}  // namespace mvc
