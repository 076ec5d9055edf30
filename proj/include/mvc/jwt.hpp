#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mvc/bytes.hpp"
#include "mvc/errors.hpp"
#include "mvc/sha256.hpp"

// Minimal HS256 JSON Web Tokens: enough to issue and verify tokens that
// carry an "exp" claim.

namespace mvc::jwt {

inline std::string base64url_encode(ByteView data) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = data.size() - i;
  if (rest != 0) {
    std::uint32_t v = data[i] << 16;
    if (rest == 2) v |= data[i + 1] << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    if (rest == 2) out.push_back(kAlphabet[(v >> 6) & 63]);
  }
  return out;
}

/// Unpadded base64url only; returns nullopt on any malformed input.
inline std::optional<Bytes> base64url_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '-') return 62;
    if (c == '_') return 63;
    return -1;
  };
  if (text.size() % 4 == 1) return std::nullopt;
  Bytes out;
  out.reserve(text.size() * 3 / 4);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    const int v = value(c);
    if (v < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>(acc >> bits));
    }
  }
  // Leftover bits must be zero for a canonical encoding.
  if (bits > 0 && (acc & ((1u << bits) - 1)) != 0) return std::nullopt;
  return out;
}

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline std::string sign_hs256(ByteView secret, std::string_view signing_input) {
  const Digest mac = hmac_sha256(secret, as_bytes(signing_input));
  return base64url_encode(mac);
}

/// Issues an HS256 token whose only claim is {"exp": now + ttl}.
inline std::string issue_token(ByteView secret, std::int64_t ttl_seconds,
                               std::int64_t now = unix_now()) {
  if (ttl_seconds <= 0) throw RangeError("ttl: must be positive");
  const std::string header = R"({"alg":"HS256","typ":"JWT"})";
  const std::string payload = nlohmann::json{{"exp", now + ttl_seconds}}.dump();
  std::string input = base64url_encode(as_bytes(header)) + "." + base64url_encode(as_bytes(payload));
  const std::string sig = sign_hs256(secret, input);
  return input + "." + sig;
}

/// True iff the token is a well-formed HS256 JWT signed with `secret` whose
/// exp claim satisfies now < exp + skew. Reports no reason on failure.
inline bool verify_token(std::string_view token, ByteView secret, std::int64_t skew_seconds,
                         std::int64_t now = unix_now()) {
  const std::size_t d1 = token.find('.');
  if (d1 == std::string_view::npos) return false;
  const std::size_t d2 = token.find('.', d1 + 1);
  if (d2 == std::string_view::npos || token.find('.', d2 + 1) != std::string_view::npos) {
    return false;
  }
  const std::string_view signing_input = token.substr(0, d2);
  const auto header_raw = base64url_decode(token.substr(0, d1));
  const auto payload_raw = base64url_decode(token.substr(d1 + 1, d2 - d1 - 1));
  const auto sig = base64url_decode(token.substr(d2 + 1));
  if (!header_raw || !payload_raw || !sig) return false;

  const Digest expected = hmac_sha256(secret, as_bytes(signing_input));
  if (!constant_time_equal(expected, *sig)) return false;

  try {
    const auto header = nlohmann::json::parse(header_raw->begin(), header_raw->end());
    if (!header.is_object() || !header.contains("alg") || header["alg"] != "HS256") return false;
    const auto payload = nlohmann::json::parse(payload_raw->begin(), payload_raw->end());
    if (!payload.is_object() || !payload.contains("exp") || !payload["exp"].is_number()) {
      return false;
    }
    const double exp = payload["exp"].get<double>();
    return static_cast<double>(now) < exp + static_cast<double>(skew_seconds);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

}  // namespace mvc::jwt
