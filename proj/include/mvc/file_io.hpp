#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <string>

#include "mvc/bytes.hpp"
#include "mvc/errors.hpp"

namespace mvc {

namespace detail {

inline std::string errno_text(int err) { return std::strerror(err); }

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) noexcept : fd_(fd) {}
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  ~FileDescriptor() { close(); }

  int get() const noexcept { return fd_; }
  int close() noexcept {
    int rc = 0;
    if (fd_ >= 0) rc = ::close(fd_);
    fd_ = -1;
    return rc;
  }

 private:
  int fd_;
};

}  // namespace detail

/// Reads a whole file. The buffer type lets callers choose zeroizing storage.
template <typename Buffer = Bytes>
Buffer read_file(const std::filesystem::path& path) {
  detail::FileDescriptor fd(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) {
    throw IoError("cannot open '" + path.string() + "': " + detail::errno_text(errno));
  }
  Buffer out;
  std::uint8_t chunk[1 << 16];
  for (;;) {
    const ssize_t n = ::read(fd.get(), chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("cannot read '" + path.string() + "': " + detail::errno_text(errno));
    }
    if (n == 0) break;
    out.insert(out.end(), chunk, chunk + n);
  }
  return out;
}

/// Writes `data` to a temporary sibling of `path`, fsyncs it and renames it
/// into place. On failure the temporary is removed and `path` is untouched.
inline void write_file_atomic(const std::filesystem::path& path, ByteView data) {
  const std::filesystem::path dir = path.has_parent_path() ? path.parent_path() : ".";
  std::string tmpl = (dir / ("." + path.filename().string() + ".tmp-XXXXXX")).string();
  detail::FileDescriptor fd(::mkstemp(tmpl.data()));
  if (fd.get() < 0) {
    throw IoError("cannot create file in '" + dir.string() + "': " + detail::errno_text(errno));
  }
  auto fail = [&](const std::string& what) {
    const int err = errno;
    fd.close();
    ::unlink(tmpl.c_str());
    throw IoError(what + " '" + path.string() + "': " + detail::errno_text(err));
  };

  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd.get(), data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("cannot write");
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fchmod(fd.get(), 0644) != 0) fail("cannot set permissions on");
  if (::fsync(fd.get()) != 0) fail("cannot flush");
  if (fd.close() != 0) fail("cannot close");
  if (::rename(tmpl.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmpl.c_str());
    throw IoError("cannot rename into '" + path.string() + "': " + detail::errno_text(err));
  }
}

}  // namespace mvc
