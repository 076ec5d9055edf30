#include <gtest/gtest.h>

#include <cstring>
#include <memory>
#include <vector>

#include "mvc/secure_memory.hpp"

namespace {

// Snapshots every block's contents at the moment it is freed.
struct Snapshots {
  std::vector<std::vector<unsigned char>> freed;
};

template <typename T>
struct RecordingAllocator {
  using value_type = T;
  std::shared_ptr<Snapshots> log = std::make_shared<Snapshots>();

  RecordingAllocator() = default;
  template <typename U>
  RecordingAllocator(const RecordingAllocator<U>& o) : log(o.log) {}  // NOLINT

  T* allocate(std::size_t n) { return std::allocator<T>().allocate(n); }
  void deallocate(T* p, std::size_t n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    log->freed.emplace_back(bytes, bytes + n * sizeof(T));
    std::allocator<T>().deallocate(p, n);
  }
  template <typename U>
  bool operator==(const RecordingAllocator<U>& o) const { return log == o.log; }
};

bool all_zero(const std::vector<unsigned char>& v) {
  return std::all_of(v.begin(), v.end(), [](unsigned char c) { return c == 0; });
}

}  // namespace

TEST(SecureZero, ClearsBuffer) {
  unsigned char buf[64];
  std::memset(buf, 0xAB, sizeof(buf));
  mvc::secure_zero(buf, sizeof(buf));
  EXPECT_TRUE(std::all_of(std::begin(buf), std::end(buf), [](unsigned char c) { return c == 0; }));
  mvc::secure_zero(nullptr, 10);  // no-op
}

TEST(ZeroizingAllocator, WipesOnDestructionAndRegrowth) {
  using Alloc = mvc::ZeroizingAllocator<std::uint8_t, RecordingAllocator<std::uint8_t>>;
  RecordingAllocator<std::uint8_t> base;
  auto log = base.log;
  {
    std::vector<std::uint8_t, Alloc> v{Alloc(base)};
    v.assign(100, 0x5A);
    v.reserve(10'000);  // regrowth frees the first block
    v.assign(10'000, 0x77);
  }
  ASSERT_GE(log->freed.size(), 2u);
  for (const auto& block : log->freed) EXPECT_TRUE(all_zero(block));
}

TEST(SecretString, WipesOnMoveAndClear) {
  mvc::SecretString a(std::string(40, 'k'));
  mvc::SecretString b(std::move(a));
  EXPECT_TRUE(a.empty());  // NOLINT(bugprone-use-after-move)
  EXPECT_EQ(b.reveal(), std::string(40, 'k'));
  b.wipe();
  EXPECT_TRUE(b.empty());
}
