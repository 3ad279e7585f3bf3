#include "kindling/error.hpp"

namespace kindling {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AuthorMismatch: return "AuthorMismatch";
    case ErrorCode::TurnMismatch: return "TurnMismatch";
    case ErrorCode::UnknownParticipant: return "UnknownParticipant";
    case ErrorCode::InvalidConversation: return "InvalidConversation";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::NotEnumerable: return "NotEnumerable";
    case ErrorCode::NotTrainable: return "NotTrainable";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::Unparsable: return "Unparsable";
  }
  return "Unknown";
}

}  // namespace kindling
