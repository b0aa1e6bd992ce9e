#pragma once

#include <stdexcept>
#include <string>

namespace kmc {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kValidation,
  kIo,
  kDomain,
  kFingerprint,
};

/// Exception carrying a coarse kind (mapped to C status codes and CLI exit
/// codes) and a fine-grained machine-readable tag such as "cycle" or
/// "undefined_margin".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string tag, const std::string& message)
      : std::runtime_error(message), kind_(kind), tag_(std::move(tag)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& tag() const noexcept { return tag_; }

 private:
  ErrorKind kind_;
  std::string tag_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string tag, const std::string& message) {
  throw Error(kind, std::move(tag), message);
}

}  // namespace kmc
