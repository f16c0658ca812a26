#pragma once

#include <stdexcept>
#include <string>

namespace hdavca {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kFormat,
  kDimension,
  kDegenerate,
  kInternal,
};

// Every failure inside the library surfaces as an Error. The C API maps the
// code onto hdavca_status and keeps the message for hdavca_last_error().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

}  // namespace hdavca
