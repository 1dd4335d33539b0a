#pragma once

#include <stdexcept>
#include <string>

namespace planar_ba {

enum class ErrorCode {
  kInvalidArgument,
  kValidation,
  kIo,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace planar_ba
