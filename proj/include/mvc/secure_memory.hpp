#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace mvc {

/// Overwrites n bytes at p with zeros in a way the optimizer may not elide.
inline void secure_zero(void* p, std::size_t n) noexcept {
  if (p == nullptr || n == 0) return;
#if defined(__GLIBC__) && (__GLIBC__ > 2 || (__GLIBC__ == 2 && __GLIBC_MINOR__ >= 25))
  ::explicit_bzero(p, n);
#else
  volatile auto* v = static_cast<volatile unsigned char*>(p);
  for (std::size_t i = 0; i != n; ++i) v[i] = 0;
#endif
}

/// Allocator adaptor that wipes every block before handing it back to the
/// underlying allocator. Vector regrowth therefore leaves no stale copies.
template <typename T, typename Base = std::allocator<T>>
class ZeroizingAllocator {
 public:
  using value_type = T;
  using base_traits = std::allocator_traits<Base>;

  template <typename U>
  struct rebind {
    using other =
        ZeroizingAllocator<U, typename base_traits::template rebind_alloc<U>>;
  };

  ZeroizingAllocator() = default;
  explicit ZeroizingAllocator(const Base& base) : base_(base) {}

  template <typename U, typename B>
  ZeroizingAllocator(const ZeroizingAllocator<U, B>& other)  // NOLINT
      : base_(other.base()) {}

  T* allocate(std::size_t n) { return base_traits::allocate(base_, n); }

  void deallocate(T* p, std::size_t n) noexcept {
    secure_zero(p, n * sizeof(T));
    base_traits::deallocate(base_, p, n);
  }

  const Base& base() const noexcept { return base_; }

  template <typename U, typename B>
  bool operator==(const ZeroizingAllocator<U, B>& other) const noexcept {
    return base_ == other.base();
  }

 private:
  Base base_{};
};

using SecureBytes = std::vector<std::uint8_t, ZeroizingAllocator<std::uint8_t>>;

/// A string for secrets (passphrases, tokens). Heap and inline storage are
/// both wiped on destruction.
class SecretString {
 public:
  SecretString() = default;
  explicit SecretString(std::string value) : value_(std::move(value)) {}
  SecretString(const SecretString&) = default;
  SecretString(SecretString&& other) noexcept : value_(std::move(other.value_)) {
    other.wipe();
  }
  SecretString& operator=(const SecretString& other) {
    if (this != &other) {
      wipe();
      value_ = other.value_;
    }
    return *this;
  }
  SecretString& operator=(SecretString&& other) noexcept {
    if (this != &other) {
      wipe();
      value_ = std::move(other.value_);
      other.wipe();
    }
    return *this;
  }
  ~SecretString() { wipe(); }

  const std::string& reveal() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  void wipe() noexcept {
    secure_zero(value_.data(), value_.capacity());
    value_.clear();
  }

 private:
  std::string value_;
};

}  // namespace mvc
