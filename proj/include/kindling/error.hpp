#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kindling {

enum class ErrorCode {
  AuthorMismatch,
  TurnMismatch,
  UnknownParticipant,
  InvalidConversation,
  UnknownTemplate,
  NotEnumerable,
  NotTrainable,
  NonFinite,
  EmptyCandidates,
  InvalidArgument,
  EmptyDataset,
  InvalidDataset,
  Parse,
  Config,
  Io,
  GenerationFailure,
  Timeout,
  Transport,
  HttpStatus,
  MalformedResponse,
  AuthFailure,
  Unparsable,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int http_status = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message),
        http_status_(http_status) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }
  // Only meaningful for ErrorCode::HttpStatus and ErrorCode::AuthFailure.
  int http_status() const noexcept { return http_status_; }

 private:
  ErrorCode code_;
  std::string detail_;
  int http_status_;
};

}  // namespace kindling
