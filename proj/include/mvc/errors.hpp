#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvc {

enum class ErrorKind {
  Length,
  Encoding,
  Hex,
  Padding,
  Range,
  Invariant,
  Magic,
  Version,
  Crc,
  Truncation,
  Io,
  KeyMismatch,
  Digest,
  Mode,
  Cancelled,
  Auth,
  Transport,
  Format,
  Degenerate,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Length: return "LengthError";
    case ErrorKind::Encoding: return "EncodingError";
    case ErrorKind::Hex: return "HexError";
    case ErrorKind::Padding: return "PaddingError";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::Invariant: return "InvariantError";
    case ErrorKind::Magic: return "MagicError";
    case ErrorKind::Version: return "VersionError";
    case ErrorKind::Crc: return "CrcError";
    case ErrorKind::Truncation: return "TruncationError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::KeyMismatch: return "KeyMismatchError";
    case ErrorKind::Digest: return "DigestError";
    case ErrorKind::Mode: return "ModeError";
    case ErrorKind::Cancelled: return "CancelledError";
    case ErrorKind::Auth: return "AuthError";
    case ErrorKind::Transport: return "TransportError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Degenerate: return "DegenerateError";
  }
  return "Error";
}

/// True for failures that mean "wrong key, tampered or corrupt artifact, or
/// rejected credentials" as opposed to usage and I/O problems. The CLI maps
/// these to exit status 2.
constexpr bool is_security_failure(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Padding:
    case ErrorKind::KeyMismatch:
    case ErrorKind::Digest:
    case ErrorKind::Auth:
    case ErrorKind::Magic:
    case ErrorKind::Version:
    case ErrorKind::Crc:
    case ErrorKind::Truncation:
      return true;
    default:
      return false;
  }
}

/// Base of every exception thrown by the library. Messages name fields,
/// paths and status codes only; they never carry key or token material.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class BasicError : public Error {
 public:
  explicit BasicError(const std::string& what) : Error(K, what) {}
};

using LengthError = BasicError<ErrorKind::Length>;
using EncodingError = BasicError<ErrorKind::Encoding>;
using HexError = BasicError<ErrorKind::Hex>;
using PaddingError = BasicError<ErrorKind::Padding>;
using RangeError = BasicError<ErrorKind::Range>;
using InvariantError = BasicError<ErrorKind::Invariant>;
using MagicError = BasicError<ErrorKind::Magic>;
using VersionError = BasicError<ErrorKind::Version>;
using CrcError = BasicError<ErrorKind::Crc>;
using TruncationError = BasicError<ErrorKind::Truncation>;
using IoError = BasicError<ErrorKind::Io>;
using KeyMismatchError = BasicError<ErrorKind::KeyMismatch>;
using DigestError = BasicError<ErrorKind::Digest>;
using ModeError = BasicError<ErrorKind::Mode>;
using CancelledError = BasicError<ErrorKind::Cancelled>;
using AuthError = BasicError<ErrorKind::Auth>;
using TransportError = BasicError<ErrorKind::Transport>;
using FormatError = BasicError<ErrorKind::Format>;
using DegenerateError = BasicError<ErrorKind::Degenerate>;

}  // namespace mvc
