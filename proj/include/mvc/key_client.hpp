#pragma once

#include <exception>
#include <string>
#include <string_view>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mvc/errors.hpp"
#include "mvc/key_material.hpp"
#include "mvc/secure_memory.hpp"

namespace mvc {

inline constexpr int kDefaultFetchTimeoutMs = 5000;

struct HttpUrl {
  std::string origin;  // "http://host[:port]"
  std::string path;    // starts with '/'
};

/// Accepts absolute http:// URLs only. TLS is expected to be terminated by
/// a fronting proxy in deployments.
inline HttpUrl parse_http_url(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw FormatError("url: expected an absolute http:// URL");
  }
  const std::size_t slash = url.find('/', kScheme.size());
  HttpUrl out;
  out.origin = std::string(url.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  if (out.origin.size() == kScheme.size()) throw FormatError("url: missing host");
  return out;
}

/// One GET with a bearer token; returns the "key" field of the JSON body.
/// No retries. Neither the token nor the key appears in error messages.
inline SecretString fetch_passphrase(std::string_view endpoint_url, std::string_view bearer_token,
                                     int timeout_ms = kDefaultFetchTimeoutMs) {
  const HttpUrl url = parse_http_url(endpoint_url);
  httplib::Client client(url.origin);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  SecretString auth("Bearer " + std::string(bearer_token));
  auto res = client.Get(url.path, {{"Authorization", auth.reveal()}});
  auth.wipe();
  if (!res) throw TransportError("transport: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403) {
    throw AuthError("auth: server returned " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw TransportError("transport: unexpected status " + std::to_string(res->status));
  }

  SecretString body(std::move(res->body));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body.reveal());
  } catch (const nlohmann::json::exception&) {
    throw FormatError("response: body is not JSON");
  }
  if (!doc.is_object()) throw FormatError("response: body is not a JSON object");
  const auto it = doc.find("key");
  if (it == doc.end() || !it->is_string()) throw FormatError("response: missing or non-string \"key\"");
  return SecretString(it->get<std::string>());
}

/// fetch_passphrase followed by derive_key. Derivation failures surface as
/// FormatError with the original error nested.
inline KeyMaterial fetch_key(std::string_view endpoint_url, std::string_view bearer_token,
                             int timeout_ms = kDefaultFetchTimeoutMs) {
  const SecretString passphrase = fetch_passphrase(endpoint_url, bearer_token, timeout_ms);
  try {
    return derive_key(passphrase.reveal());
  } catch (const Error& e) {
    std::throw_with_nested(FormatError(std::string("response: unusable \"key\": ") + e.what()));
  }
}

}  // namespace mvc
