#ifndef DIVEX_ERROR_H_
#define DIVEX_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace divex {

// Every failure raised by the library carries one of these codes. The code
// name is what the CLI and the HTTP service report to callers.
enum class ErrorCode {
  kEmptySentence,
  kEmptySide,
  kOutOfRange,
  kWouldEmptySide,
  kInvalidPhrase,
  kShapeError,
  kParseError,
  kDuplicateId,
  kTimeout,
  kProtocolError,
  kLengthMismatch,
  kEmptyCandidates,
  kInconsistentHistory,
  kSideTooShort,
  kEmptyGroup,
  kMissingGold,
  kStudyNotFound,
  kSessionNotFound,
  kSessionComplete,
  kValidationError,
  kDuplicateSubmission,
  kIoError,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace divex

#endif  // DIVEX_ERROR_H_
