#pragma once

#include <stdexcept>
#include <string>

namespace regquad {

enum class ErrorCode {
  kArgument = 1,
  kUnsupported,
  kSingularSystem,
  kNumerical,
  kDegenerate,
  kExhausted,
  kIo,
  kParse,
};

const char* to_string(ErrorCode code);

// Base of every exception thrown by the library. The C API maps `code()` onto
// its status enum one-to-one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define REGQUAD_DEFINE_ERROR(Name, Code)                                    \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

REGQUAD_DEFINE_ERROR(ArgumentError, kArgument)
REGQUAD_DEFINE_ERROR(UnsupportedError, kUnsupported)
REGQUAD_DEFINE_ERROR(SingularSystemError, kSingularSystem)
REGQUAD_DEFINE_ERROR(NumericalError, kNumerical)
REGQUAD_DEFINE_ERROR(DegenerateError, kDegenerate)
REGQUAD_DEFINE_ERROR(ExhaustedError, kExhausted)
REGQUAD_DEFINE_ERROR(IoError, kIo)
REGQUAD_DEFINE_ERROR(ParseError, kParse)

#undef REGQUAD_DEFINE_ERROR

}  // namespace regquad
