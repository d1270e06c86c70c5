#pragma once

#include <stdexcept>
#include <string>

namespace winofi {

enum class ErrorCode {
  CONFIG_NOT_FOUND,
  CONFIG_INVALID,
  FILE_FORMAT,
  SHAPE_MISMATCH,
  INELIGIBLE_SPEC,
  OUT_OF_RANGE,
  INFEASIBLE_BUDGET,
  GOAL_UNREACHABLE,
  IO_FAILURE,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace winofi
