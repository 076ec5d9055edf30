#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "mvc/bytes.hpp"
#include "mvc/container.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/key_material.hpp"
#include "mvc/secure_memory.hpp"
#include "mvc/sha256.hpp"

// Everything in this header works purely in memory; none of it touches the
// filesystem.

namespace mvc {

/// Decrypted model bytes. The buffer is zeroizing: release() or destruction
/// overwrites it before the memory goes back to the allocator.
class ModelBlob {
 public:
  ModelBlob(SecureBytes bytes, CipherMode source_mode)
      : bytes_(std::move(bytes)), digest_(sha256(bytes_)), source_mode_(source_mode) {}

  ModelBlob(ModelBlob&&) noexcept = default;
  ModelBlob& operator=(ModelBlob&&) noexcept = default;
  ModelBlob(const ModelBlob&) = delete;
  ModelBlob& operator=(const ModelBlob&) = delete;

  ByteView bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  const Digest& digest() const noexcept { return digest_; }
  CipherMode source_mode() const noexcept { return source_mode_; }

  void release() noexcept {
    secure_zero(bytes_.data(), bytes_.size());
    bytes_.clear();
    bytes_.shrink_to_fit();
  }

 private:
  SecureBytes bytes_;
  Digest digest_;
  CipherMode source_mode_;
};

struct UnsealProgress {
  std::size_t chunks_done = 0;
  std::size_t chunks_total = 0;
  std::uint64_t bytes_done = 0;
};

struct UnsealOptions {
  /// Invoked on a worker just before chunk `i` is decrypted. Test hook for
  /// simulating a slow cipher.
  std::function<void(std::size_t)> before_chunk;
};

inline std::size_t default_worker_count(std::size_t chunk_count) noexcept {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(hw, chunk_count));
}

namespace detail {

inline ContainerView open_container(ByteView sealed, const KeyMaterial& key) {
  if (!has_magic(sealed)) {
    throw ModeError("unseal: chunk-parallel decryption needs a container, not a raw .dat");
  }
  ContainerView view = decode_view(sealed);
  if (view.header.key_fingerprint != key.fingerprint()) {
    throw KeyMismatchError("key mismatch: fingerprint differs from container header");
  }
  return view;
}

inline ModelBlob finish_container(SecureBytes plaintext, const ContainerHeader& header) {
  ModelBlob blob(std::move(plaintext), CipherMode::ChunkedCtr);
  if (!constant_time_equal(blob.digest(), header.plaintext_digest)) {
    blob.release();
    throw DigestError("digest: plaintext does not match container digest");
  }
  return blob;
}

/// Decrypts every chunk of `view` into `out` using `workers` threads (the
/// calling thread counts as one). `stop()` is polled between chunks;
/// `done(bytes)` runs after each chunk.
template <typename StopFn, typename DoneFn>
void decrypt_chunks(const ContainerView& view, const KeyMaterial& key, MutableByteView out,
                    std::size_t workers, const UnsealOptions& options, StopFn&& stop,
                    DoneFn&& done) {
  const Aes256 aes(key.bytes());
  const std::size_t total = view.chunk_table.size();
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&] {
    try {
      for (;;) {
        if (failed.load(std::memory_order_relaxed) || stop()) return;
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= total) return;
        if (options.before_chunk) options.before_chunk(i);
        const ChunkEntry& e = view.chunk_table[i];
        const auto off = static_cast<std::size_t>(e.ciphertext_offset);
        ctr_apply(view.payload.subspan(off, e.plaintext_len), out.subspan(off, e.plaintext_len),
                  aes, view.header.file_nonce, i);
        done(e.plaintext_len);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };

  const std::size_t n = std::max<std::size_t>(1, std::min(workers, total));
  {
    std::vector<std::jthread> helpers;
    helpers.reserve(n - 1);
    for (std::size_t t = 1; t < n; ++t) helpers.emplace_back(work);
    work();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

/// Sequential decryption. Raw .dat input relies on padding validity alone;
/// containers are checked against the key fingerprint before any payload
/// byte is decrypted and against the plaintext digest afterwards.
inline ModelBlob unseal(ByteView sealed, const KeyMaterial& key, SealedFormat declared) {
  if (declared == SealedFormat::RawDat) {
    return ModelBlob(ecb_decrypt(sealed, key), CipherMode::RawEcbPkcs7);
  }
  if (!detail::has_magic(sealed)) decode_view(sealed);  // raises Magic/Truncation
  const ContainerView view = detail::open_container(sealed, key);
  SecureBytes out(view.header.plaintext_len);
  const Aes256 aes(key.bytes());
  for (std::size_t i = 0; i < view.chunk_table.size(); ++i) {
    const ChunkEntry& e = view.chunk_table[i];
    const auto off = static_cast<std::size_t>(e.ciphertext_offset);
    ctr_apply(view.payload.subspan(off, e.plaintext_len),
              MutableByteView(out).subspan(off, e.plaintext_len), aes, view.header.file_nonce, i);
  }
  return detail::finish_container(std::move(out), view.header);
}

/// Chunk-parallel decryption of a container into one contiguous buffer.
/// Output is byte-identical to unseal() for any worker count.
inline ModelBlob unseal_parallel(ByteView sealed, const KeyMaterial& key, std::size_t workers,
                                 const UnsealOptions& options = {}) {
  if (workers == 0) throw RangeError("workers: must be at least 1");
  const ContainerView view = detail::open_container(sealed, key);
  SecureBytes out(view.header.plaintext_len);
  detail::decrypt_chunks(
      view, key, out, workers, options, [] { return false; }, [](std::uint64_t) {});
  return detail::finish_container(std::move(out), view.header);
}

enum class TaskState { Running, Succeeded, Failed, Cancelled };

/// What the completion sink receives: exactly one of blob / error is set.
struct UnsealOutcome {
  std::optional<ModelBlob> blob;
  std::exception_ptr error;
  std::optional<ErrorKind> error_kind;
};

using ProgressSink = std::function<void(const UnsealProgress&)>;
using CompletionSink = std::function<void(UnsealOutcome)>;

/// Handle to a decryption running on background workers. Thread-safe;
/// destroying a handle cancels the task and waits for its workers.
class BackgroundUnseal {
 public:
  BackgroundUnseal(BackgroundUnseal&&) noexcept = default;
  BackgroundUnseal& operator=(BackgroundUnseal&& other) noexcept {
    if (this != &other) {
      if (state_) cancel();
      coordinator_ = std::move(other.coordinator_);  // joins the old task
      state_ = std::move(other.state_);
    }
    return *this;
  }

  ~BackgroundUnseal() {
    if (state_) cancel();
  }

  TaskState state() const noexcept { return state_->status.load(); }

  /// Aborts outstanding chunks. Once this returns no progress event fires
  /// again; on_done later receives CancelledError unless it already ran.
  /// Safe to call from inside a progress sink.
  void cancel() {
    state_->cancel_requested.store(true);
    std::lock_guard lock(state_->event_mutex);
  }

  /// Blocks until on_done has returned.
  void wait() {
    std::unique_lock lock(state_->done_mutex);
    state_->done_cv.wait(lock, [&] { return state_->finished; });
  }

 private:
  struct State {
    std::atomic<TaskState> status{TaskState::Running};
    std::atomic<bool> cancel_requested{false};
    std::recursive_mutex event_mutex;
    UnsealProgress progress;
    std::mutex done_mutex;
    std::condition_variable done_cv;
    bool finished = false;
  };

  BackgroundUnseal() : state_(std::make_shared<State>()) {}

  friend BackgroundUnseal unseal_background(Bytes, KeyMaterial, std::size_t, ProgressSink,
                                            CompletionSink, UnsealOptions);

  std::shared_ptr<State> state_;
  std::jthread coordinator_;
};

/// Starts decryption on background workers and returns at once. Errors,
/// including bad arguments, reach the caller only through on_done.
inline BackgroundUnseal unseal_background(Bytes sealed, KeyMaterial key, std::size_t workers,
                                          ProgressSink on_progress, CompletionSink on_done,
                                          UnsealOptions options = {}) {
  BackgroundUnseal handle;
  auto state = handle.state_;
  handle.coordinator_ = std::jthread([state, sealed = std::move(sealed), key, workers,
                                      on_progress = std::move(on_progress),
                                      on_done = std::move(on_done),
                                      options = std::move(options)]() mutable {
    UnsealOutcome outcome;
    SecureBytes out;
    auto cancelled = [&] { return state->cancel_requested.load(); };
    try {
      if (workers == 0) throw RangeError("workers: must be at least 1");
      const ContainerView view = detail::open_container(sealed, key);
      out.resize(view.header.plaintext_len);
      {
        std::lock_guard lock(state->event_mutex);
        state->progress.chunks_total = view.chunk_table.size();
      }
      detail::decrypt_chunks(view, key, out, workers, options, cancelled,
                             [&](std::uint64_t n) {
                               std::lock_guard lock(state->event_mutex);
                               if (cancelled()) return;
                               ++state->progress.chunks_done;
                               state->progress.bytes_done += n;
                               if (on_progress) on_progress(state->progress);
                             });
      if (cancelled()) throw CancelledError("unseal: cancelled");
      outcome.blob.emplace(detail::finish_container(std::move(out), view.header));
    } catch (const Error& e) {
      outcome.error = std::current_exception();
      outcome.error_kind = e.kind();
    } catch (...) {
      outcome.error = std::current_exception();
    }

    {
      std::lock_guard lock(state->event_mutex);
      if (cancelled() && outcome.blob) {
        outcome.blob->release();
        outcome.blob.reset();
      }
      if (cancelled() && outcome.error_kind != ErrorKind::Cancelled) {
        outcome.error = std::make_exception_ptr(CancelledError("unseal: cancelled"));
        outcome.error_kind = ErrorKind::Cancelled;
      }
    }
    secure_zero(out.data(), out.size());
    out.clear();

    state->status.store(outcome.blob                                   ? TaskState::Succeeded
                        : outcome.error_kind == ErrorKind::Cancelled ? TaskState::Cancelled
                                                                     : TaskState::Failed);
    if (on_done) on_done(std::move(outcome));
    {
      std::lock_guard lock(state->done_mutex);
      state->finished = true;
    }
    state->done_cv.notify_all();
  });
  return handle;
}

}  // namespace mvc
