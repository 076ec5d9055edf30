#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mvc/container.hpp"
#include "test_util.hpp"

using namespace mvc;
using testutil::random_bytes;

namespace {

SealedContainer make_container(std::uint64_t plaintext_len, std::uint32_t chunk_size,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SealedContainer c;
  c.header.plaintext_len = plaintext_len;
  c.header.chunk_size = chunk_size;
  c.chunk_table = plan_chunks(plaintext_len, chunk_size);
  c.header.chunk_count = static_cast<std::uint32_t>(c.chunk_table.size());
  for (auto& b : c.header.key_fingerprint) b = static_cast<std::uint8_t>(rng());
  for (auto& b : c.header.file_nonce) b = static_cast<std::uint8_t>(rng());
  for (auto& b : c.header.plaintext_digest) b = static_cast<std::uint8_t>(rng());
  c.payload = random_bytes(plaintext_len, seed);
  return c;
}

}  // namespace

TEST(Container, HeaderIsSeventyTwoBytes) {
  // 4 + 2 + 1 + 1 + 4 + 8 + 8 + 4 + 4 + 32 + 4
  EXPECT_EQ(kHeaderSize, 72u);
  const Bytes out = encode(make_container(0, 4096, 1));
  EXPECT_EQ(out.size(), kHeaderSize + kChunkEntrySize);
}

TEST(Container, OneBytePlaintextLayout) {
  const Bytes out = encode(make_container(1, 1u << 20, 2));
  EXPECT_EQ(out.size(), 72u + 12u + 1u);
  EXPECT_EQ(load_le32(out.data() + 32), 1u);  // chunk_count
}

TEST(Container, ReferenceSizedPlaintextHasThreeChunks) {
  const SealedContainer c = make_container(2'621'440, 1'048'576, 3);
  EXPECT_EQ(c.header.chunk_count, 3u);
  const Bytes out = encode(c);
  EXPECT_EQ(out.size(), 72u + 3 * 12u + 2'621'440u);
  const ContainerView v = decode_view(out);
  EXPECT_EQ(v.payload.size(), 2'621'440u);
  EXPECT_EQ(v.chunk_table[2].ciphertext_offset, 2'097'152u);
  EXPECT_EQ(v.chunk_table[2].plaintext_len, 524'288u);
}

TEST(Container, FieldOffsetsAreLittleEndian) {
  SealedContainer c = make_container(5000, 4096, 4);
  const Bytes out = encode(c);
  EXPECT_EQ(std::string(out.begin(), out.begin() + 4), "MVC1");
  EXPECT_EQ(load_le16(out.data() + 4), 1u);
  EXPECT_EQ(out[6], 1u);
  EXPECT_EQ(out[7], 0u);
  EXPECT_TRUE(std::equal(c.header.key_fingerprint.begin(), c.header.key_fingerprint.end(), out.begin() + 8));
  EXPECT_TRUE(std::equal(c.header.file_nonce.begin(), c.header.file_nonce.end(), out.begin() + 12));
  EXPECT_EQ(load_le64(out.data() + 20), 5000u);
  EXPECT_EQ(load_le32(out.data() + 28), 4096u);
  EXPECT_EQ(load_le32(out.data() + 32), 2u);
  EXPECT_TRUE(std::equal(c.header.plaintext_digest.begin(), c.header.plaintext_digest.end(), out.begin() + 36));
  EXPECT_EQ(load_le32(out.data() + 68), crc32_of(ByteView(out).first(68)));
  EXPECT_EQ(load_le64(out.data() + 72 + 12), 4096u);
  EXPECT_EQ(load_le32(out.data() + 72 + 12 + 8), 904u);
}

TEST(Container, Crc32MatchesStandardCheckValue) {
  EXPECT_EQ(crc32_of(as_bytes("123456789")), 0xCBF43926u);
}

TEST(Container, RoundTripProperty) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t len = rng() % 20'000;
    const auto chunk = static_cast<std::uint32_t>(1 + rng() % 5000);
    const SealedContainer c = make_container(len, chunk, rng());
    ASSERT_EQ(decode(encode(c)), c) << len << "/" << chunk;
  }
}

TEST(Container, EmptyPlaintextHasOneEmptyChunk) {
  const SealedContainer c = make_container(0, 4096, 5);
  ASSERT_EQ(c.chunk_table.size(), 1u);
  EXPECT_EQ(c.chunk_table[0], (ChunkEntry{0, 0}));
  EXPECT_EQ(decode(encode(c)), c);
}

TEST(Container, ChunkPlanTilesPlaintext) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t len = rng() % 1'000'000;
    const auto chunk = static_cast<std::uint32_t>(1 + rng() % 70'000);
    const auto table = plan_chunks(len, chunk);
    ASSERT_EQ(table.size(), std::max<std::uint64_t>(1, (len + chunk - 1) / chunk));
    std::uint64_t expect_offset = 0;
    for (const auto& e : table) {
      ASSERT_EQ(e.ciphertext_offset, expect_offset);
      ASSERT_LE(e.plaintext_len, chunk);
      expect_offset += e.plaintext_len;
    }
    ASSERT_EQ(expect_offset, len);
  }
  EXPECT_THROW(plan_chunks(10, 0), InvariantError);
}

TEST(Container, EncodeRejectsBrokenInvariants) {
  SealedContainer c = make_container(100, 4096, 6);
  c.payload.pop_back();
  EXPECT_THROW(encode(c), InvariantError);

  c = make_container(10'000, 4096, 6);
  c.chunk_table[1].plaintext_len -= 1;
  EXPECT_THROW(encode(c), InvariantError);

  c = make_container(10'000, 4096, 6);
  c.header.chunk_count = 2;
  EXPECT_THROW(encode(c), InvariantError);

  c = make_container(10, 4096, 6);
  c.header.mode = CipherMode::RawEcbPkcs7;
  EXPECT_THROW(encode(c), InvariantError);
}

TEST(Container, DecodeRejectsBadMagic) {
  Bytes out = encode(make_container(10, 4096, 7));
  std::copy_n("XXXX", 4, out.begin());
  EXPECT_THROW(decode(out), MagicError);
}

TEST(Container, DecodeRejectsTruncation) {
  const Bytes out = encode(make_container(10'000, 4096, 8));
  EXPECT_THROW(decode(ByteView(out).first(3)), TruncationError);
  EXPECT_THROW(decode(ByteView(out).first(50)), TruncationError);
  EXPECT_THROW(decode(ByteView(out).first(72 + 20)), TruncationError);  // inside chunk table
  EXPECT_THROW(decode(ByteView(out).first(out.size() - 1)), TruncationError);
}

TEST(Container, DecodeRejectsTrailingBytes) {
  Bytes out = encode(make_container(100, 4096, 9));
  out.push_back(0);
  EXPECT_THROW(decode(out), InvariantError);
}

TEST(Container, DecodeRejectsUnknownVersionWithValidCrc) {
  Bytes out = encode(make_container(100, 4096, 10));
  store_le16(out.data() + 4, 2);
  store_le32(out.data() + 68, crc32_of(ByteView(out).first(68)));
  EXPECT_THROW(decode(out), VersionError);
}

TEST(Container, DecodeRejectsTamperedChunkTable) {
  Bytes out = encode(make_container(10'000, 4096, 11));
  store_le64(out.data() + 72 + 12, 4000);  // second entry offset
  EXPECT_THROW(decode(out), InvariantError);
}

TEST(Container, AnySingleHeaderBitFlipIsRejected) {
  const Bytes good = encode(make_container(9'000, 4096, 12));
  std::mt19937 rng(12);
  std::set<unsigned> tried;
  while (tried.size() < 100) {
    const unsigned bit = rng() % (kHeaderSize * 8);
    if (!tried.insert(bit).second) continue;
    Bytes bad = good;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      decode(bad);
      FAIL() << "bit " << bit << " accepted";
    } catch (const Error& e) {
      if (bit >= 32) {
        EXPECT_EQ(e.kind(), ErrorKind::Crc) << "bit " << bit;
      } else {
        EXPECT_EQ(e.kind(), ErrorKind::Magic) << "bit " << bit;
      }
    }
  }
}

TEST(Container, DetectFormat) {
  const Bytes out = encode(make_container(500, 4096, 13));
  EXPECT_EQ(detect_format(out), SealedFormat::Container);
  EXPECT_EQ(detect_format({}), SealedFormat::RawDat);
  Bytes magic_only = out;
  magic_only[40] ^= 1;  // magic intact, CRC broken
  EXPECT_EQ(detect_format(magic_only), SealedFormat::RawDat);
  // Random ciphertext-like blobs on fixed seeds do not begin with the magic.
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const Bytes blob = random_bytes(4096, seed);
    ASSERT_FALSE(std::equal(kContainerMagic.begin(), kContainerMagic.end(), blob.begin()));
    EXPECT_EQ(detect_format(blob), SealedFormat::RawDat);
  }
}
