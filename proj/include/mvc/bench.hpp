#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mvc/bytes.hpp"
#include "mvc/container.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/file_io.hpp"
#include "mvc/key_material.hpp"
#include "mvc/random.hpp"
#include "mvc/sealer.hpp"
#include "mvc/unsealer.hpp"

namespace mvc::bench {

/// Model sizes of the six reference architectures, in MiB.
inline const std::vector<double> kReferenceSizesMb = {2.5, 4.2, 11.3, 16, 17.5, 23.9};

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

inline std::uint64_t mb_to_bytes(double mb) {
  if (!(mb >= 0)) throw RangeError("size: must be non-negative");
  return static_cast<std::uint64_t>(std::llround(mb * kBytesPerMb));
}

/// Shortest decimal rendering with at most three fractional digits.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

/// Medians over the repetitions of one size. total_seal_ms is defined as
/// encrypt_ms + storage_ms, not the median of per-run totals.
struct BenchRecord {
  std::string label;
  std::uint64_t size_bytes = 0;
  double encrypt_ms = 0;
  double storage_ms = 0;
  double total_seal_ms = 0;
  double decrypt_ms = 0;
  std::size_t workers = 1;
  std::size_t repetitions = 0;

  double size_mb() const noexcept { return static_cast<double>(size_bytes) / kBytesPerMb; }
};

inline BenchRecord make_record(std::string label, std::uint64_t size_bytes, double encrypt_ms,
                               double storage_ms, double decrypt_ms, std::size_t workers = 1,
                               std::size_t repetitions = 1) {
  return {std::move(label), size_bytes, encrypt_ms, storage_ms, encrypt_ms + storage_ms,
          decrypt_ms,       workers,    repetitions};
}

struct FitResult {
  double slope = 0;      // ms per MB
  double intercept = 0;  // ms
  double r_squared = 0;
};

enum class FitSeries { SealTotal, Decrypt };

/// Deterministic pseudorandom bytes; identical for identical (size, seed).
inline Bytes generate_synthetic_model(std::uint64_t size_bytes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bytes out(static_cast<std::size_t>(size_bytes));
  std::size_t i = 0;
  for (; i + 8 <= out.size(); i += 8) store_le64(out.data() + i, rng());
  if (i < out.size()) {
    std::uint64_t v = rng();
    for (; i < out.size(); ++i, v >>= 8) out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw RangeError("median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

/// Ordinary least squares of the chosen series against size in MB.
inline FitResult fit_linear(const std::vector<BenchRecord>& records,
                            FitSeries series = FitSeries::SealTotal) {
  if (records.size() < 3) throw DegenerateError("fit: need at least 3 records");
  const double n = static_cast<double>(records.size());
  double mean_x = 0, mean_y = 0;
  for (const auto& r : records) {
    mean_x += r.size_mb();
    mean_y += series == FitSeries::SealTotal ? r.total_seal_ms : r.decrypt_ms;
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& r : records) {
    const double dx = r.size_mb() - mean_x;
    const double dy = (series == FitSeries::SealTotal ? r.total_seal_ms : r.decrypt_ms) - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw DegenerateError("fit: all sizes are equal");

  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  // With a least-squares line, SS_res = syy - slope * sxy.
  fit.r_squared = syy > 0 ? std::clamp(1.0 - (syy - fit.slope * sxy) / syy, 0.0, 1.0) : 1.0;
  return fit;
}

enum class TableFormat { Markdown, Csv };

inline constexpr std::string_view kCsvHeader = "label,size_mb,encrypt_ms,storage_ms,total_ms,decrypt_ms";

inline std::string emit_table(const std::vector<BenchRecord>& records, TableFormat format) {
  std::string out;
  if (format == TableFormat::Csv) {
    out += kCsvHeader;
    out += '\n';
    for (const auto& r : records) {
      out += r.label + ',' + format_number(r.size_mb()) + ',' + format_number(r.encrypt_ms) + ',' +
             format_number(r.storage_ms) + ',' + format_number(r.total_seal_ms) + ',' +
             format_number(r.decrypt_ms) + '\n';
    }
    return out;
  }
  out +=
      "| Model | Size (MB) | Encryption time (ms) | Storage time (ms) | Total time (ms) | "
      "Decryption time (ms) |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : records) {
    out += "| " + r.label + " | " + format_number(r.size_mb()) + " | " +
           format_number(r.encrypt_ms) + " | " + format_number(r.storage_ms) + " | " +
           format_number(r.total_seal_ms) + " | " + format_number(r.decrypt_ms) + " |\n";
  }
  return out;
}

struct BenchOptions {
  std::vector<double> sizes_mb = kReferenceSizesMb;
  std::size_t repetitions = 5;
  std::size_t workers = 1;
  CipherMode mode = CipherMode::ChunkedCtr;
  std::uint32_t chunk_size = kDefaultChunkSize;
  std::filesystem::path work_dir = std::filesystem::temp_directory_path();
  std::uint64_t seed = 42;
};

/// Times seal (encrypt + storage) and unseal for each size, sequentially.
/// One warm-up run per size is discarded. Sealed files are removed
/// afterwards.
inline std::vector<BenchRecord> run_bench(const BenchOptions& options) {
  if (options.repetitions < 3) throw RangeError("repetitions: must be at least 3");
  if (options.workers == 0) throw RangeError("workers: must be at least 1");

  std::array<std::uint8_t, KeyMaterial::kSize> raw{};
  fill_random(raw);
  const KeyMaterial key(raw);
  secure_zero(raw.data(), raw.size());

  std::vector<BenchRecord> records;
  for (const double mb : options.sizes_mb) {
    const std::uint64_t size = mb_to_bytes(mb);
    const Bytes model = generate_synthetic_model(size, options.seed);
    const std::filesystem::path model_path = options.work_dir / "mvc-bench-model.bin";
    const std::filesystem::path sealed_path = options.work_dir / "mvc-bench-model.sealed";
    write_file_atomic(model_path, model);

    std::vector<double> enc, stor, dec;
    for (std::size_t rep = 0; rep <= options.repetitions; ++rep) {
      const SealReport report =
          seal_file(model_path, sealed_path, key, options.mode, options.chunk_size);
      const Bytes sealed = read_file(sealed_path);

      const auto start = std::chrono::steady_clock::now();
      ModelBlob blob = options.mode == CipherMode::ChunkedCtr
                           ? unseal_parallel(sealed, key, options.workers)
                           : unseal(sealed, key, SealedFormat::RawDat);
      const double decrypt_ms = Millis(std::chrono::steady_clock::now() - start).count();
      if (blob.digest() != report.plaintext_digest) {
        throw DigestError("bench: round trip produced a different digest");
      }
      blob.release();
      if (rep == 0) continue;  // warm-up
      enc.push_back(report.encrypt_ms);
      stor.push_back(report.storage_ms);
      dec.push_back(decrypt_ms);
    }
    std::filesystem::remove(model_path);
    std::filesystem::remove(sealed_path);
    std::filesystem::remove(manifest_path_for(sealed_path));

    records.push_back(make_record(format_number(mb), size, median(enc), median(stor), median(dec),
                                  options.workers, options.repetitions));
  }
  return records;
}

}  // namespace mvc::bench
