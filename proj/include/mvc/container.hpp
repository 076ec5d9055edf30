#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mvc/bytes.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/key_material.hpp"
#include "mvc/sha256.hpp"

// Sealed container layout (all integers little-endian):
//
//   offset  size  field
//        0     4  magic "MVC1"
//        4     2  version (1)
//        6     1  cipher mode (1 = chunked CTR)
//        7     1  flags (reserved, 0)
//        8     4  key fingerprint
//       12     8  file nonce
//       20     8  plaintext length
//       28     4  chunk size
//       32     4  chunk count
//       36    32  SHA-256 of the plaintext
//       68     4  CRC-32 of bytes [0, 68)
//       72        chunk table: chunk_count x { u64 payload offset, u32 length }
//                 payload: CTR ciphertext, same length as the plaintext

namespace mvc {

inline constexpr std::array<std::uint8_t, 4> kContainerMagic = {'M', 'V', 'C', '1'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kHeaderSize = 72;
inline constexpr std::size_t kHeaderCrcOffset = 68;
inline constexpr std::size_t kChunkEntrySize = 12;
inline constexpr std::uint32_t kDefaultChunkSize = 1u << 20;

struct ContainerHeader {
  std::uint16_t version = kContainerVersion;
  CipherMode mode = CipherMode::ChunkedCtr;
  std::uint8_t flags = 0;
  Fingerprint key_fingerprint{};
  FileNonce file_nonce{};
  std::uint64_t plaintext_len = 0;
  std::uint32_t chunk_size = kDefaultChunkSize;
  std::uint32_t chunk_count = 1;
  Digest plaintext_digest{};

  bool operator==(const ContainerHeader&) const = default;
};

struct ChunkEntry {
  std::uint64_t ciphertext_offset = 0;
  std::uint32_t plaintext_len = 0;

  bool operator==(const ChunkEntry&) const = default;
};

struct SealedContainer {
  ContainerHeader header;
  std::vector<ChunkEntry> chunk_table;
  Bytes payload;

  bool operator==(const SealedContainer&) const = default;
};

/// Non-owning parse result; `payload` points into the decoded buffer.
struct ContainerView {
  ContainerHeader header;
  std::vector<ChunkEntry> chunk_table;
  ByteView payload;
};

enum class SealedFormat { RawDat, Container };

inline std::uint32_t crc32_of(ByteView data) noexcept {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

/// Number of chunks for a plaintext: ceil(len / chunk_size), at least one.
inline std::uint64_t chunk_count_for(std::uint64_t plaintext_len, std::uint32_t chunk_size) {
  if (chunk_size == 0) throw InvariantError("chunk_size: must be positive");
  return std::max<std::uint64_t>(1, (plaintext_len + chunk_size - 1) / chunk_size);
}

/// The canonical chunk table: full chunks followed by one possibly shorter
/// (or empty) tail, contiguous from payload offset 0.
inline std::vector<ChunkEntry> plan_chunks(std::uint64_t plaintext_len, std::uint32_t chunk_size) {
  const std::uint64_t count = chunk_count_for(plaintext_len, chunk_size);
  if (count > UINT32_MAX) throw InvariantError("chunk_count: exceeds 32 bits");
  std::vector<ChunkEntry> table;
  table.reserve(static_cast<std::size_t>(count));
  std::uint64_t offset = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(chunk_size, plaintext_len - offset));
    table.push_back({offset, len});
    offset += len;
  }
  return table;
}

namespace detail {

inline void check_header_fields(const ContainerHeader& h) {
  if (h.version != kContainerVersion) throw VersionError("version: unsupported " + std::to_string(h.version));
  if (h.mode != CipherMode::ChunkedCtr) throw InvariantError("mode: container payloads must be chunked CTR");
  if (h.flags != 0) throw InvariantError("flags: reserved bits set");
  if (h.chunk_size == 0) throw InvariantError("chunk_size: must be positive");
  if (h.chunk_count != chunk_count_for(h.plaintext_len, h.chunk_size)) {
    throw InvariantError("chunk_count: inconsistent with plaintext_len and chunk_size");
  }
}

inline void check_chunk_table(const ContainerHeader& h, const std::vector<ChunkEntry>& table) {
  if (table != plan_chunks(h.plaintext_len, h.chunk_size)) {
    throw InvariantError("chunk_table: entries do not tile the plaintext");
  }
}

inline void write_header(const ContainerHeader& h, std::uint8_t* p) {
  std::copy(kContainerMagic.begin(), kContainerMagic.end(), p);
  store_le16(p + 4, h.version);
  p[6] = static_cast<std::uint8_t>(h.mode);
  p[7] = h.flags;
  std::copy(h.key_fingerprint.begin(), h.key_fingerprint.end(), p + 8);
  std::copy(h.file_nonce.begin(), h.file_nonce.end(), p + 12);
  store_le64(p + 20, h.plaintext_len);
  store_le32(p + 28, h.chunk_size);
  store_le32(p + 32, h.chunk_count);
  std::copy(h.plaintext_digest.begin(), h.plaintext_digest.end(), p + 36);
  store_le32(p + kHeaderCrcOffset, crc32_of(ByteView(p, kHeaderCrcOffset)));
}

inline bool has_magic(ByteView bytes) noexcept {
  return bytes.size() >= kContainerMagic.size() &&
         std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin());
}

inline bool header_crc_ok(ByteView bytes) noexcept {
  return bytes.size() >= kHeaderSize &&
         load_le32(bytes.data() + kHeaderCrcOffset) == crc32_of(bytes.first(kHeaderCrcOffset));
}

}  // namespace detail

/// Checks every container invariant; throws InvariantError (or VersionError)
/// naming the first failing field.
inline void validate(const SealedContainer& c) {
  detail::check_header_fields(c.header);
  detail::check_chunk_table(c.header, c.chunk_table);
  if (c.payload.size() != c.header.plaintext_len) {
    throw InvariantError("payload: length differs from plaintext_len");
  }
}

inline Bytes encode(const SealedContainer& c) {
  validate(c);
  Bytes out(kHeaderSize + kChunkEntrySize * c.chunk_table.size() + c.payload.size());
  detail::write_header(c.header, out.data());
  std::uint8_t* p = out.data() + kHeaderSize;
  for (const ChunkEntry& e : c.chunk_table) {
    store_le64(p, e.ciphertext_offset);
    store_le32(p + 8, e.plaintext_len);
    p += kChunkEntrySize;
  }
  std::copy(c.payload.begin(), c.payload.end(), p);
  return out;
}

/// Parses and fully validates a container without copying the payload.
inline ContainerView decode_view(ByteView bytes) {
  if (bytes.size() < kContainerMagic.size()) throw TruncationError("header: input shorter than magic");
  if (!detail::has_magic(bytes)) throw MagicError("magic: expected \"MVC1\"");
  if (bytes.size() < kHeaderSize) throw TruncationError("header: input shorter than 72 bytes");
  if (!detail::header_crc_ok(bytes)) throw CrcError("header_crc: checksum mismatch");

  const std::uint8_t* p = bytes.data();
  ContainerView view;
  ContainerHeader& h = view.header;
  h.version = load_le16(p + 4);
  if (h.version != kContainerVersion) throw VersionError("version: unsupported " + std::to_string(h.version));
  if (p[6] != static_cast<std::uint8_t>(CipherMode::ChunkedCtr)) {
    throw InvariantError("mode: container payloads must be chunked CTR");
  }
  h.mode = CipherMode::ChunkedCtr;
  h.flags = p[7];
  std::copy_n(p + 8, h.key_fingerprint.size(), h.key_fingerprint.begin());
  std::copy_n(p + 12, h.file_nonce.size(), h.file_nonce.begin());
  h.plaintext_len = load_le64(p + 20);
  h.chunk_size = load_le32(p + 28);
  h.chunk_count = load_le32(p + 32);
  std::copy_n(p + 36, h.plaintext_digest.size(), h.plaintext_digest.begin());
  detail::check_header_fields(h);

  const std::uint64_t table_bytes = std::uint64_t{h.chunk_count} * kChunkEntrySize;
  if (bytes.size() - kHeaderSize < table_bytes) throw TruncationError("chunk_table: input too short");
  view.chunk_table.reserve(h.chunk_count);
  const std::uint8_t* t = p + kHeaderSize;
  for (std::uint32_t i = 0; i < h.chunk_count; ++i, t += kChunkEntrySize) {
    view.chunk_table.push_back({load_le64(t), load_le32(t + 8)});
  }
  detail::check_chunk_table(h, view.chunk_table);

  const std::uint64_t payload_at = kHeaderSize + table_bytes;
  const std::uint64_t available = bytes.size() - payload_at;
  if (available < h.plaintext_len) throw TruncationError("payload: input too short");
  if (available > h.plaintext_len) throw InvariantError("payload: trailing bytes after payload");
  view.payload = bytes.subspan(static_cast<std::size_t>(payload_at));
  return view;
}

inline SealedContainer decode(ByteView bytes) {
  ContainerView view = decode_view(bytes);
  return {view.header, std::move(view.chunk_table), Bytes(view.payload.begin(), view.payload.end())};
}

/// Heuristic sniffing: a container iff the magic matches and the header CRC
/// validates. Callers that know the format should say so explicitly.
inline SealedFormat detect_format(ByteView bytes) noexcept {
  return detail::has_magic(bytes) && detail::header_crc_ok(bytes) ? SealedFormat::Container
                                                                  : SealedFormat::RawDat;
}

}  // namespace mvc
