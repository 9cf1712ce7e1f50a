#pragma once

#include <stdexcept>
#include <string>

namespace plab {

// Stable error taxonomy; mirrored 1:1 by plab_status in the C API.
enum class ErrorCode {
  InvalidArgument = 1,
  Config = 2,
  Io = 3,
  Parse = 4,
  Protocol = 5,
  Backend = 6,
  Unavailable = 7,
  Internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorCode::InvalidArgument, w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::Config, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::Parse, w) {}
};

// Malformed payload from an otherwise reachable backend (bad JSON, missing fields).
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& w) : Error(ErrorCode::Protocol, w) {}
};

// Non-retryable backend failure; carries the HTTP status when one exists.
struct BackendError : Error {
  BackendError(const std::string& w, int http_status = 0)
      : Error(ErrorCode::Backend, w), http_status(http_status) {}
  int http_status;
};

// Retry budget exhausted on transient failures.
struct UnavailableError : Error {
  explicit UnavailableError(const std::string& w) : Error(ErrorCode::Unavailable, w) {}
};

}  // namespace plab
