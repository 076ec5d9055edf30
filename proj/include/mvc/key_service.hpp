#pragma once

#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mvc/errors.hpp"
#include "mvc/jwt.hpp"
#include "mvc/key_material.hpp"
#include "mvc/secure_memory.hpp"

namespace mvc {

inline constexpr std::string_view kModelKeyPath = "/v1/model-key";

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int listen_port = 8080;  // 0 picks an ephemeral port
  SecretString jwt_secret;
  SecretString passphrase;
  std::int64_t token_clock_skew = 0;
};

/// Rejects configurations the service could never answer correctly.
inline void validate(const ServiceConfig& config) {
  if (config.jwt_secret.empty()) throw InvariantError("jwt_secret: must not be empty");
  (void)derive_key(config.passphrase.reveal());
  if (config.listen_port < 0 || config.listen_port > 65535) throw RangeError("listen_port: out of range");
  if (config.token_clock_skew < 0) throw RangeError("token_clock_skew: must not be negative");
}

struct KeyRequest {
  std::string method;
  std::string path;
  std::string authorization;  // raw Authorization header value, may be empty
};

struct KeyHttpResponse {
  int status = 500;
  std::string body;
  std::string content_type = "application/json";
};

namespace detail {

inline std::string_view bearer_token(std::string_view header) {
  constexpr std::string_view kScheme = "bearer ";
  if (header.size() <= kScheme.size()) return {};
  for (std::size_t i = 0; i < kScheme.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(header[i])) != kScheme[i]) return {};
  }
  std::string_view token = header.substr(kScheme.size());
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  return token;
}

}  // namespace detail

/// Routes one request. Every authentication failure yields the same 401
/// body, whichever check rejected it.
inline KeyHttpResponse handle_key_request(const ServiceConfig& config, const KeyRequest& request,
                                          std::int64_t now = jwt::unix_now()) {
  if (request.path != kModelKeyPath) return {404, R"({"error":"not found"})"};
  if (request.method != "GET") return {405, R"({"error":"method not allowed"})"};

  const std::string_view token = detail::bearer_token(request.authorization);
  if (token.empty() || !jwt::verify_token(token, as_bytes(config.jwt_secret.reveal()),
                                          config.token_clock_skew, now)) {
    return {401, R"({"error":"unauthorized"})"};
  }
  return {200, nlohmann::json{{"key", config.passphrase.reveal()}}.dump()};
}

/// HTTP front end for handle_key_request. Serves on a background thread
/// between start() and stop().
class KeyServer {
 public:
  explicit KeyServer(ServiceConfig config) : config_(std::move(config)) { validate(config_); }

  KeyServer(const KeyServer&) = delete;
  KeyServer& operator=(const KeyServer&) = delete;
  ~KeyServer() { stop(); }

  /// Binds and starts serving; returns the bound port.
  int start() {
    server_ = std::make_unique<httplib::Server>();
    server_->set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      const KeyHttpResponse r =
          handle_key_request(config_, {req.method, req.path, req.get_header_value("Authorization")});
      res.status = r.status;
      res.set_content(r.body, r.content_type);
      return httplib::Server::HandlerResponse::Handled;
    });
    if (config_.listen_port == 0) {
      port_ = server_->bind_to_any_port(config_.bind_address);
    } else {
      port_ = server_->bind_to_port(config_.bind_address, config_.listen_port) ? config_.listen_port : -1;
    }
    if (port_ < 0) {
      throw IoError("cannot bind " + config_.bind_address + ":" + std::to_string(config_.listen_port));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
  }

  void stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    server_.reset();
  }

  int port() const noexcept { return port_; }

 private:
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace mvc
