#pragma once

#include <stdexcept>
#include <string>

namespace dlgreward {

// Error kinds double as CLI exit codes.
enum class ErrorKind {
  internal = 1,
  usage = 2,
  io = 3,
  format = 4,
  numeric = 5,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

  const char* kind_name() const noexcept {
    switch (kind_) {
      case ErrorKind::usage: return "usage";
      case ErrorKind::io: return "io";
      case ErrorKind::format: return "format";
      case ErrorKind::numeric: return "numeric";
      default: return "internal";
    }
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::usage, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::io, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
  throw Error(ErrorKind::format, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::numeric, msg);
}

}  // namespace dlgreward
