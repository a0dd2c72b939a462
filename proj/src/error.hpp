#pragma once

#include <stdexcept>
#include <string>

namespace trifuse {

// Error category, mapped 1:1 onto C API status / CLI exit codes.
enum class ErrorKind {
  Input,     // malformed files, bad arguments, unusable data
  Internal,  // invariant violations inside the engine
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_input(std::string message) {
  throw Error(ErrorKind::Input, std::move(message));
}

[[noreturn]] inline void throw_internal(std::string message) {
  throw Error(ErrorKind::Internal, std::move(message));
}

}  // namespace trifuse
