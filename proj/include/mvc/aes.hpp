#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "mvc/bytes.hpp"
#include "mvc/secure_memory.hpp"

namespace mvc {

namespace aes_detail {

constexpr std::uint8_t xtime(std::uint8_t x) noexcept {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

constexpr std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) noexcept {
  std::uint8_t r = 0;
  while (b != 0) {
    if (b & 1) r ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return r;
}

constexpr std::uint8_t gf_inverse(std::uint8_t x) noexcept {
  // x^254 == x^-1 in GF(2^8); maps 0 to 0.
  std::uint8_t result = 1;
  std::uint8_t base = x;
  for (int e = 254; e != 0; e >>= 1) {
    if (e & 1) result = gf_mul(result, base);
    base = gf_mul(base, base);
  }
  return x == 0 ? 0 : result;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int n) noexcept {
  return static_cast<std::uint8_t>((x << n) | (x >> (8 - n)));
}

constexpr std::array<std::uint8_t, 256> make_sbox() noexcept {
  std::array<std::uint8_t, 256> s{};
  for (int i = 0; i < 256; ++i) {
    const std::uint8_t b = gf_inverse(static_cast<std::uint8_t>(i));
    s[i] = static_cast<std::uint8_t>(b ^ rotl8(b, 1) ^ rotl8(b, 2) ^ rotl8(b, 3) ^
                                     rotl8(b, 4) ^ 0x63);
  }
  return s;
}

constexpr std::array<std::uint8_t, 256> make_inv_sbox(
    const std::array<std::uint8_t, 256>& s) noexcept {
  std::array<std::uint8_t, 256> inv{};
  for (int i = 0; i < 256; ++i) inv[s[i]] = static_cast<std::uint8_t>(i);
  return inv;
}

constexpr std::uint32_t rotr32(std::uint32_t x, int n) noexcept {
  return (x >> n) | (x << (32 - n));
}

inline constexpr std::array<std::uint8_t, 256> kSbox = make_sbox();
inline constexpr std::array<std::uint8_t, 256> kInvSbox = make_inv_sbox(kSbox);

struct Tables {
  std::array<std::uint32_t, 256> te[4];
  std::array<std::uint32_t, 256> td[4];
};

constexpr Tables make_tables() noexcept {
  Tables t{};
  for (int i = 0; i < 256; ++i) {
    const std::uint8_t s = kSbox[i];
    const std::uint32_t e = (std::uint32_t{gf_mul(s, 2)} << 24) | (std::uint32_t{s} << 16) |
                            (std::uint32_t{s} << 8) | gf_mul(s, 3);
    const std::uint8_t si = kInvSbox[i];
    const std::uint32_t d = (std::uint32_t{gf_mul(si, 14)} << 24) |
                            (std::uint32_t{gf_mul(si, 9)} << 16) |
                            (std::uint32_t{gf_mul(si, 13)} << 8) | gf_mul(si, 11);
    for (int r = 0; r < 4; ++r) {
      t.te[r][i] = r == 0 ? e : rotr32(e, 8 * r);
      t.td[r][i] = r == 0 ? d : rotr32(d, 8 * r);
    }
  }
  return t;
}

inline constexpr Tables kTables = make_tables();

}  // namespace aes_detail

/// AES with a 256-bit key (FIPS-197), table-driven. Holds both the
/// encryption and the equivalent-inverse decryption key schedules; both are
/// wiped on destruction.
class Aes256 {
 public:
  static constexpr std::size_t kBlockSize = 16;
  static constexpr std::size_t kKeySize = 32;
  static constexpr int kRounds = 14;

  explicit Aes256(std::span<const std::uint8_t, kKeySize> key) noexcept {
    using namespace aes_detail;
    constexpr int nk = 8;
    constexpr int words = 4 * (kRounds + 1);
    for (int i = 0; i < nk; ++i) enc_[i] = load_be32(key.data() + 4 * i);
    std::uint32_t rcon = 0x01;
    for (int i = nk; i < words; ++i) {
      std::uint32_t t = enc_[i - 1];
      if (i % nk == 0) {
        t = (t << 8) | (t >> 24);
        t = sub_word(t) ^ (rcon << 24);
        rcon = xtime(static_cast<std::uint8_t>(rcon));
      } else if (i % nk == 4) {
        t = sub_word(t);
      }
      enc_[i] = enc_[i - nk] ^ t;
    }

    // Equivalent inverse cipher: reversed round order, InvMixColumns on the
    // inner round keys.
    for (int r = 0; r <= kRounds; ++r) {
      for (int c = 0; c < 4; ++c) dec_[4 * r + c] = enc_[4 * (kRounds - r) + c];
    }
    const auto& td = kTables.td;
    for (int i = 4; i < 4 * kRounds; ++i) {
      const std::uint32_t w = dec_[i];
      dec_[i] = td[0][kSbox[w >> 24]] ^ td[1][kSbox[(w >> 16) & 0xff]] ^
                td[2][kSbox[(w >> 8) & 0xff]] ^ td[3][kSbox[w & 0xff]];
    }
  }

  Aes256(const Aes256&) = default;
  Aes256& operator=(const Aes256&) = default;

  ~Aes256() {
    secure_zero(enc_.data(), sizeof(enc_));
    secure_zero(dec_.data(), sizeof(dec_));
  }

  void encrypt_block(const std::uint8_t* in, std::uint8_t* out) const noexcept {
    using aes_detail::kSbox;
    const auto& te = aes_detail::kTables.te;
    const std::uint32_t* rk = enc_.data();
    std::uint32_t s0 = load_be32(in) ^ rk[0];
    std::uint32_t s1 = load_be32(in + 4) ^ rk[1];
    std::uint32_t s2 = load_be32(in + 8) ^ rk[2];
    std::uint32_t s3 = load_be32(in + 12) ^ rk[3];
    for (int r = 1; r < kRounds; ++r) {
      rk += 4;
      const std::uint32_t t0 = te[0][s0 >> 24] ^ te[1][(s1 >> 16) & 0xff] ^
                               te[2][(s2 >> 8) & 0xff] ^ te[3][s3 & 0xff] ^ rk[0];
      const std::uint32_t t1 = te[0][s1 >> 24] ^ te[1][(s2 >> 16) & 0xff] ^
                               te[2][(s3 >> 8) & 0xff] ^ te[3][s0 & 0xff] ^ rk[1];
      const std::uint32_t t2 = te[0][s2 >> 24] ^ te[1][(s3 >> 16) & 0xff] ^
                               te[2][(s0 >> 8) & 0xff] ^ te[3][s1 & 0xff] ^ rk[2];
      const std::uint32_t t3 = te[0][s3 >> 24] ^ te[1][(s0 >> 16) & 0xff] ^
                               te[2][(s1 >> 8) & 0xff] ^ te[3][s2 & 0xff] ^ rk[3];
      s0 = t0; s1 = t1; s2 = t2; s3 = t3;
    }
    rk += 4;
    store_be32(out, final_word(kSbox, s0, s1, s2, s3) ^ rk[0]);
    store_be32(out + 4, final_word(kSbox, s1, s2, s3, s0) ^ rk[1]);
    store_be32(out + 8, final_word(kSbox, s2, s3, s0, s1) ^ rk[2]);
    store_be32(out + 12, final_word(kSbox, s3, s0, s1, s2) ^ rk[3]);
  }

  void decrypt_block(const std::uint8_t* in, std::uint8_t* out) const noexcept {
    using aes_detail::kInvSbox;
    const auto& td = aes_detail::kTables.td;
    const std::uint32_t* rk = dec_.data();
    std::uint32_t s0 = load_be32(in) ^ rk[0];
    std::uint32_t s1 = load_be32(in + 4) ^ rk[1];
    std::uint32_t s2 = load_be32(in + 8) ^ rk[2];
    std::uint32_t s3 = load_be32(in + 12) ^ rk[3];
    for (int r = 1; r < kRounds; ++r) {
      rk += 4;
      const std::uint32_t t0 = td[0][s0 >> 24] ^ td[1][(s3 >> 16) & 0xff] ^
                               td[2][(s2 >> 8) & 0xff] ^ td[3][s1 & 0xff] ^ rk[0];
      const std::uint32_t t1 = td[0][s1 >> 24] ^ td[1][(s0 >> 16) & 0xff] ^
                               td[2][(s3 >> 8) & 0xff] ^ td[3][s2 & 0xff] ^ rk[1];
      const std::uint32_t t2 = td[0][s2 >> 24] ^ td[1][(s1 >> 16) & 0xff] ^
                               td[2][(s0 >> 8) & 0xff] ^ td[3][s3 & 0xff] ^ rk[2];
      const std::uint32_t t3 = td[0][s3 >> 24] ^ td[1][(s2 >> 16) & 0xff] ^
                               td[2][(s1 >> 8) & 0xff] ^ td[3][s0 & 0xff] ^ rk[3];
      s0 = t0; s1 = t1; s2 = t2; s3 = t3;
    }
    rk += 4;
    store_be32(out, final_word(kInvSbox, s0, s3, s2, s1) ^ rk[0]);
    store_be32(out + 4, final_word(kInvSbox, s1, s0, s3, s2) ^ rk[1]);
    store_be32(out + 8, final_word(kInvSbox, s2, s1, s0, s3) ^ rk[2]);
    store_be32(out + 12, final_word(kInvSbox, s3, s2, s1, s0) ^ rk[3]);
  }

 private:
  static std::uint32_t sub_word(std::uint32_t w) noexcept {
    using aes_detail::kSbox;
    return (std::uint32_t{kSbox[w >> 24]} << 24) | (std::uint32_t{kSbox[(w >> 16) & 0xff]} << 16) |
           (std::uint32_t{kSbox[(w >> 8) & 0xff]} << 8) | kSbox[w & 0xff];
  }

  static std::uint32_t final_word(const std::array<std::uint8_t, 256>& box, std::uint32_t a,
                                  std::uint32_t b, std::uint32_t c, std::uint32_t d) noexcept {
    return (std::uint32_t{box[a >> 24]} << 24) | (std::uint32_t{box[(b >> 16) & 0xff]} << 16) |
           (std::uint32_t{box[(c >> 8) & 0xff]} << 8) | box[d & 0xff];
  }

  std::array<std::uint32_t, 4 * (kRounds + 1)> enc_{};
  std::array<std::uint32_t, 4 * (kRounds + 1)> dec_{};
};

}  // namespace mvc
