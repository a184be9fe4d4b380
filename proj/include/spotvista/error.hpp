#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spotvista {

enum class ErrorCode {
  kInvalidArgument,
  kQuotaExceeded,
  kUnknownPool,
  kInconsistentProfile,
  kEmptyInput,
  kInvalidRecord,
  kIo,
  kNoCandidates,
  kNoPositiveScoreCandidate,
  kInfeasible,
  kTooManyCandidates,
  kZeroVariance,
};

std::string_view to_string(ErrorCode code);

// Base of every error raised by the library. The code lets transports
// (CLI, HTTP) map failures without dynamic_cast chains.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define SPOTVISTA_DEFINE_ERROR(Name, Code)                         \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(Code, what) {}  \
  }

SPOTVISTA_DEFINE_ERROR(InvalidArgument, ErrorCode::kInvalidArgument);
SPOTVISTA_DEFINE_ERROR(QuotaExceeded, ErrorCode::kQuotaExceeded);
SPOTVISTA_DEFINE_ERROR(UnknownPool, ErrorCode::kUnknownPool);
SPOTVISTA_DEFINE_ERROR(InconsistentProfile, ErrorCode::kInconsistentProfile);
SPOTVISTA_DEFINE_ERROR(EmptyInput, ErrorCode::kEmptyInput);
SPOTVISTA_DEFINE_ERROR(InvalidRecord, ErrorCode::kInvalidRecord);
SPOTVISTA_DEFINE_ERROR(IoError, ErrorCode::kIo);
SPOTVISTA_DEFINE_ERROR(NoCandidates, ErrorCode::kNoCandidates);
SPOTVISTA_DEFINE_ERROR(NoPositiveScoreCandidate,
                       ErrorCode::kNoPositiveScoreCandidate);
SPOTVISTA_DEFINE_ERROR(Infeasible, ErrorCode::kInfeasible);
SPOTVISTA_DEFINE_ERROR(TooManyCandidates, ErrorCode::kTooManyCandidates);
SPOTVISTA_DEFINE_ERROR(ZeroVariance, ErrorCode::kZeroVariance);

#undef SPOTVISTA_DEFINE_ERROR

}  // namespace spotvista
