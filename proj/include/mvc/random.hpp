#pragma once

#include <sys/random.h>

#include <cerrno>
#include <cstddef>
#include <cstdint>
#include <string>

#include "mvc/bytes.hpp"
#include "mvc/errors.hpp"

namespace mvc {

/// Fills `out` from the operating system CSPRNG.
inline void fill_random(MutableByteView out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t n = ::getrandom(out.data() + done, out.size() - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("getrandom failed: errno " + std::to_string(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

/// Uniform integer in [0, bound) by rejection sampling over CSPRNG bytes.
inline std::uint32_t random_below(std::uint32_t bound) {
  if (bound == 0) throw RangeError("random_below: bound must be positive");
  const std::uint32_t limit = UINT32_MAX - (UINT32_MAX % bound);
  for (;;) {
    std::uint8_t raw[4];
    fill_random(raw);
    const std::uint32_t v = load_le32(raw);
    if (v < limit) return v % bound;
  }
}

}  // namespace mvc
