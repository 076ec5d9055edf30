#pragma once

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvc/bench.hpp"
#include "mvc/container.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/file_io.hpp"
#include "mvc/jwt.hpp"
#include "mvc/key_client.hpp"
#include "mvc/key_material.hpp"
#include "mvc/key_service.hpp"
#include "mvc/random.hpp"
#include "mvc/sealer.hpp"
#include "mvc/unsealer.hpp"

// The `mvc` command line. Exit codes: 0 success, 1 usage or I/O error,
// 2 cryptographic or authentication failure.

namespace mvc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSecurity = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

/// Where the key comes from. Exactly one flag may be given; without flags
/// exactly one of MVC_KEY / MVC_KEY_HEX must be set.
struct KeySource {
  std::string passphrase;
  std::string key_hex;
  std::string key_url;
  std::string token;
  int timeout_ms = kDefaultFetchTimeoutMs;

  void add_options(CLI::App& app) {
    app.add_option("--passphrase", passphrase, "16-character passphrase");
    app.add_option("--key-hex", key_hex, "raw 256-bit key as 64 hex digits");
    app.add_option("--key-url", key_url, "key service endpoint (needs --token)");
    app.add_option("--token", token, "bearer token for --key-url");
    app.add_option("--timeout-ms", timeout_ms, "key fetch timeout")->capture_default_str();
  }

  KeyMaterial resolve() const {
    const int flags = !passphrase.empty() + !key_hex.empty() + !key_url.empty();
    if (flags > 1) throw UsageError("give exactly one key source (--passphrase, --key-hex, --key-url)");
    if (!token.empty() && key_url.empty()) throw UsageError("--token requires --key-url");
    if (!passphrase.empty()) return derive_key(passphrase);
    if (!key_hex.empty()) return load_key_hex(key_hex);
    if (!key_url.empty()) {
      if (token.empty()) throw UsageError("--key-url requires --token");
      return fetch_key(key_url, token, timeout_ms);
    }
    const auto env_pass = env("MVC_KEY");
    const auto env_hex = env("MVC_KEY_HEX");
    if (env_pass && env_hex) throw UsageError("both MVC_KEY and MVC_KEY_HEX are set; unset one");
    if (env_pass) return derive_key(*env_pass);
    if (env_hex) return load_key_hex(*env_hex);
    throw UsageError("no key source: use --passphrase, --key-hex, --key-url or MVC_KEY / MVC_KEY_HEX");
  }
};

inline nlohmann::json unseal_summary(const ModelBlob& blob, double decrypt_ms, std::size_t workers) {
  return {{"sha256_hex", to_hex(blob.digest())},
          {"plaintext_len", blob.size()},
          {"mode", std::string(to_string(blob.source_mode()))},
          {"decrypt_ms", decrypt_ms},
          {"workers", workers}};
}

inline std::vector<double> parse_sizes(const std::string& list) {
  std::vector<double> sizes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      sizes.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--sizes: not a number: '" + item + "'");
    }
  }
  if (sizes.empty()) throw UsageError("--sizes: empty list");
  return sizes;
}

/// Blocks until SIGINT or SIGTERM. The signals must already be blocked in
/// every thread (see block_termination_signals).
inline void wait_for_termination(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

inline sigset_t block_termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

/// Runs the command line. All structured output goes to `out`,
/// diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Seal and unseal machine-learning model files", "mvc"};
  app.require_subcommand(1);

  // seal
  auto* seal_cmd = app.add_subcommand("seal", "encrypt a model file");
  std::string seal_in, seal_out, seal_mode = "ctr";
  std::uint32_t chunk_size = kDefaultChunkSize;
  KeySource seal_key;
  seal_cmd->add_option("--in", seal_in, "model file")->required();
  seal_cmd->add_option("--out", seal_out, "sealed output file")->required();
  seal_cmd->add_option("--mode", seal_mode, "raw (bare ECB .dat) or ctr (container)")
      ->check(CLI::IsMember({"raw", "ctr"}))
      ->capture_default_str();
  seal_cmd->add_option("--chunk-size", chunk_size, "container chunk size in bytes")->capture_default_str();
  seal_key.add_options(*seal_cmd);

  // unseal
  auto* unseal_cmd = app.add_subcommand("unseal", "decrypt in memory and verify");
  std::string unseal_in, unseal_out, unseal_format = "auto";
  std::size_t unseal_workers = 0;
  bool verify_only = false, allow_plaintext = false;
  KeySource unseal_key;
  unseal_cmd->add_option("--in", unseal_in, "sealed file")->required();
  unseal_cmd->add_option("--workers", unseal_workers, "parallel workers (0 = one per core)");
  unseal_cmd->add_option("--format", unseal_format, "auto, raw or container")
      ->check(CLI::IsMember({"auto", "raw", "container"}))
      ->capture_default_str();
  unseal_cmd->add_flag("--verify-only", verify_only, "decrypt and report the digest only (default)");
  unseal_cmd->add_option("--out", unseal_out, "write plaintext here (needs --allow-plaintext-output)");
  unseal_cmd->add_flag("--allow-plaintext-output", allow_plaintext, "permit writing plaintext to disk");
  unseal_key.add_options(*unseal_cmd);

  // keygen
  auto* keygen_cmd = app.add_subcommand("keygen", "generate a random key");
  std::string keygen_format = "passphrase";
  keygen_cmd->add_option("--format", keygen_format, "passphrase or hex")
      ->check(CLI::IsMember({"passphrase", "hex"}))
      ->capture_default_str();

  // serve-key
  auto* serve_cmd = app.add_subcommand("serve-key", "run the key delivery service");
  int serve_port = 8080;
  std::string serve_bind = "127.0.0.1", serve_secret, serve_passphrase;
  std::int64_t serve_skew = 0;
  serve_cmd->add_option("--port", serve_port, "listen port (0 = ephemeral)")->capture_default_str();
  serve_cmd->add_option("--bind", serve_bind, "listen address")->capture_default_str();
  serve_cmd->add_option("--jwt-secret", serve_secret, "HS256 secret")->envname("MVC_JWT_SECRET");
  serve_cmd->add_option("--key", serve_passphrase, "16-character passphrase to deliver")->envname("MVC_KEY");
  serve_cmd->add_option("--skew", serve_skew, "allowed clock skew in seconds")->capture_default_str();

  // issue-token
  auto* token_cmd = app.add_subcommand("issue-token", "issue an HS256 token for the key service");
  std::string token_secret;
  std::int64_t token_ttl = 3600;
  token_cmd->add_option("--jwt-secret", token_secret, "HS256 secret")->envname("MVC_JWT_SECRET");
  token_cmd->add_option("--ttl", token_ttl, "lifetime in seconds")->capture_default_str();

  // fetch-key
  auto* fetch_cmd = app.add_subcommand("fetch-key", "fetch the key from a key service");
  std::string fetch_url, fetch_token;
  int fetch_timeout = kDefaultFetchTimeoutMs;
  bool print_key = false;
  fetch_cmd->add_option("--url", fetch_url, "endpoint URL")->required();
  fetch_cmd->add_option("--token", fetch_token, "bearer token")->required();
  fetch_cmd->add_option("--timeout-ms", fetch_timeout, "request timeout")->capture_default_str();
  fetch_cmd->add_flag("--print-key", print_key, "also print the passphrase itself");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "time seal and unseal over model sizes");
  std::string bench_sizes, bench_mode = "ctr", bench_dir = ".";
  bench::BenchOptions bench_opts;
  std::size_t bench_workers = 0;
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated sizes in MB (default: reference sizes)");
  bench_cmd->add_option("--reps", bench_opts.repetitions, "repetitions per size (>= 3)")->capture_default_str();
  bench_cmd->add_option("--workers", bench_workers, "unseal workers (0 = one per core)");
  bench_cmd->add_option("--mode", bench_mode, "raw or ctr")
      ->check(CLI::IsMember({"raw", "ctr"}))
      ->capture_default_str();
  bench_cmd->add_option("--chunk-size", bench_opts.chunk_size, "container chunk size")->capture_default_str();
  bench_cmd->add_option("--out-dir", bench_dir, "where bench.md and bench.csv go")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*seal_cmd) {
      if (!std::filesystem::exists(seal_in)) throw IoError("input not found: '" + seal_in + "'");
      const KeyMaterial key = seal_key.resolve();
      const SealReport report =
          seal_file(seal_in, seal_out, key, parse_cipher_mode(seal_mode), chunk_size);
      out << to_json(report).dump(2) << "\n";
      return kExitOk;
    }

    if (*unseal_cmd) {
      if (!unseal_out.empty() && !allow_plaintext) {
        throw UsageError("--out writes plaintext to disk; add --allow-plaintext-output to confirm");
      }
      if (!unseal_out.empty() && verify_only) {
        throw UsageError("--verify-only and --out are mutually exclusive");
      }
      if (allow_plaintext && unseal_out.empty()) {
        throw UsageError("--allow-plaintext-output needs --out");
      }
      const Bytes sealed = read_file(unseal_in);
      const KeyMaterial key = unseal_key.resolve();
      // auto: the magic alone selects the container path, so a damaged
      // header reports CrcError instead of an ECB length or padding error.
      const SealedFormat format = unseal_format == "raw"         ? SealedFormat::RawDat
                                  : unseal_format == "container" ? SealedFormat::Container
                                  : detail::has_magic(sealed)    ? SealedFormat::Container
                                                                 : detect_format(sealed);
      std::size_t workers = unseal_workers;
      const auto start = std::chrono::steady_clock::now();
      ModelBlob blob = [&] {
        if (format == SealedFormat::RawDat) {
          workers = 1;
          return unseal(sealed, key, SealedFormat::RawDat);
        }
        if (workers == 0) workers = default_worker_count(decode_view(sealed).chunk_table.size());
        return unseal_parallel(sealed, key, workers);
      }();
      const double decrypt_ms = Millis(std::chrono::steady_clock::now() - start).count();
      if (!unseal_out.empty()) write_file_atomic(unseal_out, blob.bytes());
      out << unseal_summary(blob, decrypt_ms, workers).dump(2) << "\n";
      blob.release();
      return kExitOk;
    }

    if (*keygen_cmd) {
      if (keygen_format == "hex") {
        std::array<std::uint8_t, KeyMaterial::kSize> raw{};
        fill_random(raw);
        out << to_hex(raw) << "\n";
        secure_zero(raw.data(), raw.size());
      } else {
        static constexpr std::string_view kAlphabet =
            "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
        std::string value(kPassphraseLength, ' ');
        for (char& c : value) c = kAlphabet[random_below(kAlphabet.size())];
        const SecretString pass(std::move(value));
        out << pass.reveal() << "\n";
      }
      return kExitOk;
    }

    if (*serve_cmd) {
      if (serve_secret.empty()) throw UsageError("--jwt-secret or MVC_JWT_SECRET is required");
      if (serve_passphrase.empty()) throw UsageError("--key or MVC_KEY is required");
      ServiceConfig config;
      config.bind_address = serve_bind;
      config.listen_port = serve_port;
      config.jwt_secret = SecretString(serve_secret);
      config.passphrase = SecretString(serve_passphrase);
      config.token_clock_skew = serve_skew;
      const std::string fingerprint = derive_key(serve_passphrase).fingerprint_hex();
      secure_zero(serve_secret.data(), serve_secret.size());
      secure_zero(serve_passphrase.data(), serve_passphrase.size());

      const sigset_t signals = block_termination_signals();
      KeyServer server(std::move(config));
      const int port = server.start();
      out << nlohmann::json{{"listening", serve_bind + ":" + std::to_string(port)},
                            {"path", std::string(kModelKeyPath)},
                            {"fingerprint", fingerprint}}
                 .dump()
          << std::endl;
      wait_for_termination(signals);
      server.stop();
      return kExitOk;
    }

    if (*token_cmd) {
      if (token_secret.empty()) throw UsageError("--jwt-secret or MVC_JWT_SECRET is required");
      out << jwt::issue_token(as_bytes(token_secret), token_ttl) << "\n";
      return kExitOk;
    }

    if (*fetch_cmd) {
      const SecretString passphrase = fetch_passphrase(fetch_url, fetch_token, fetch_timeout);
      KeyMaterial key = [&] {
        try {
          return derive_key(passphrase.reveal());
        } catch (const Error& e) {
          throw FormatError(std::string("response: unusable \"key\": ") + e.what());
        }
      }();
      nlohmann::json doc{{"fingerprint", key.fingerprint_hex()}};
      if (print_key) doc["key"] = passphrase.reveal();
      out << doc.dump() << "\n";
      return kExitOk;
    }

    if (*bench_cmd) {
      if (!bench_sizes.empty()) bench_opts.sizes_mb = parse_sizes(bench_sizes);
      bench_opts.mode = parse_cipher_mode(bench_mode);
      bench_opts.workers = bench_workers == 0 ? default_worker_count(SIZE_MAX) : bench_workers;
      bench_opts.work_dir = bench_dir;
      std::filesystem::create_directories(bench_dir);
      const auto records = bench::run_bench(bench_opts);
      const std::string md = bench::emit_table(records, bench::TableFormat::Markdown);
      const std::string csv = bench::emit_table(records, bench::TableFormat::Csv);
      const std::filesystem::path dir(bench_dir);
      write_file_atomic(dir / "bench.md", as_bytes(md));
      write_file_atomic(dir / "bench.csv", as_bytes(csv));
      out << md;
      if (records.size() >= 3) {
        const auto seal_fit = bench::fit_linear(records, bench::FitSeries::SealTotal);
        const auto dec_fit = bench::fit_linear(records, bench::FitSeries::Decrypt);
        out << "\nseal total: " << bench::format_number(seal_fit.slope) << " ms/MB, r^2 "
            << bench::format_number(seal_fit.r_squared) << "\n"
            << "decrypt:    " << bench::format_number(dec_fit.slope) << " ms/MB, r^2 "
            << bench::format_number(dec_fit.r_squared) << "\n";
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return is_security_failure(e.kind()) ? kExitSecurity : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace mvc::cli
