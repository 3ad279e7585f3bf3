#include "kindling/conversation.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <utility>

#include "kindling/error.hpp"

namespace kindling {

ParticipantId::ParticipantId(std::string label) : label_(std::move(label)) {
  if (label_.empty()) throw Error(ErrorCode::InvalidArgument, "participant id must be non-empty");
}

ConversationState ConversationState::start(ParticipantId first, ParticipantId second) {
  if (first == second) {
    throw Error(ErrorCode::InvalidConversation, "participants must be distinct: '" + first.str() + "'");
  }
  ParticipantId next = first;
  return ConversationState({std::move(first), std::move(second)}, {}, std::move(next));
}

ConversationState ConversationState::from_messages(std::array<ParticipantId, 2> participants,
                                                   std::vector<Message> messages,
                                                   ParticipantId next_speaker) {
  if (participants[0] == participants[1]) {
    throw Error(ErrorCode::InvalidConversation,
                "participants must be distinct: '" + participants[0].str() + "'");
  }
  auto known = [&](const ParticipantId& p) { return p == participants[0] || p == participants[1]; };
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const Message& m = messages[i];
    if (!known(m.author)) {
      throw Error(ErrorCode::InvalidConversation,
                  "message " + std::to_string(i) + " authored by third participant '" + m.author.str() + "'");
    }
    if (m.turn != i) {
      throw Error(ErrorCode::InvalidConversation, "message " + std::to_string(i) + " has turn index " +
                                                      std::to_string(m.turn));
    }
    if (i > 0 && messages[i - 1].author == m.author) {
      throw Error(ErrorCode::InvalidConversation,
                  "authors do not alternate at message " + std::to_string(i) + " ('" + m.author.str() + "')");
    }
  }
  if (!known(next_speaker)) {
    throw Error(ErrorCode::InvalidConversation, "next speaker '" + next_speaker.str() + "' is not a participant");
  }
  if (!messages.empty() && messages.back().author == next_speaker) {
    throw Error(ErrorCode::InvalidConversation, "next speaker '" + next_speaker.str() + "' spoke last");
  }
  return ConversationState(std::move(participants), std::move(messages), std::move(next_speaker));
}

bool ConversationState::has_participant(const ParticipantId& p) const noexcept {
  return p == participants_[0] || p == participants_[1];
}

const ParticipantId& ConversationState::other(const ParticipantId& p) const {
  if (p == participants_[0]) return participants_[1];
  if (p == participants_[1]) return participants_[0];
  throw Error(ErrorCode::UnknownParticipant, "'" + p.str() + "' is not in this conversation");
}

Action make_action(const ConversationState& state, std::string content) {
  return Action{Message{state.next_speaker(), state.size(), std::move(content)}};
}

ConversationState append_action(const ConversationState& state, const Action& action) {
  const Message& m = action.message;
  if (m.author != state.next_speaker()) {
    throw Error(ErrorCode::AuthorMismatch,
                "action by '" + m.author.str() + "' but next speaker is '" + state.next_speaker().str() + "'");
  }
  if (m.turn != state.size()) {
    throw Error(ErrorCode::TurnMismatch,
                "action turn " + std::to_string(m.turn) + ", expected " + std::to_string(state.size()));
  }
  std::vector<Message> messages = state.messages();
  messages.push_back(m);
  return ConversationState(state.participants(), std::move(messages), state.other(m.author));
}

ConversationState switch_perspective(const ConversationState& state) {
  std::vector<Message> messages;
  messages.reserve(state.size());
  for (const Message& m : state.messages()) {
    messages.push_back(Message{state.other(m.author), m.turn, m.content});
  }
  return ConversationState(state.participants(), std::move(messages), state.other(state.next_speaker()));
}

Action switch_perspective_action(const Action& action, const ParticipantId& a, const ParticipantId& b) {
  const ParticipantId& author = action.message.author;
  if (author != a && author != b) {
    throw Error(ErrorCode::UnknownParticipant, "'" + author.str() + "' is not in this conversation");
  }
  return Action{Message{author == a ? b : a, action.message.turn, action.message.content}};
}

Action switch_perspective_action(const Action& action, const ConversationState& state) {
  return switch_perspective_action(action, state.participants()[0], state.participants()[1]);
}

RoleTranscript render_for_speaker(const ConversationState& state, const ParticipantId& viewpoint) {
  if (!state.has_participant(viewpoint)) {
    throw Error(ErrorCode::UnknownParticipant, "'" + viewpoint.str() + "' is not in this conversation");
  }
  RoleTranscript out;
  out.reserve(state.size());
  for (const Message& m : state.messages()) {
    out.push_back(RoleMessage{m.author == viewpoint ? Role::Self : Role::Other, m.content});
  }
  return out;
}

std::string to_jsonl_line(const TranscriptRecord& record) {
  nlohmann::ordered_json j;
  j["conv_id"] = record.conv_id;
  j["turn"] = record.turn;
  j["author"] = record.author;
  j["content"] = record.content;
  return j.dump();
}

TranscriptRecord parse_transcript_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, "transcript line is not a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::Parse, std::string("transcript line missing field '") + key + "'");
    return *it;
  };
  const auto& conv_id = require("conv_id");
  const auto& turn = require("turn");
  const auto& author = require("author");
  const auto& content = require("content");
  if (!conv_id.is_string() || !author.is_string() || !content.is_string() || !turn.is_number_unsigned()) {
    throw Error(ErrorCode::Parse, "transcript line has mistyped fields");
  }
  return TranscriptRecord{conv_id.get<std::string>(), turn.get<std::size_t>(), author.get<std::string>(),
                          content.get<std::string>()};
}

void write_transcript(std::ostream& out, const std::string& conv_id, const ConversationState& state) {
  for (const Message& m : state.messages()) {
    out << to_jsonl_line(TranscriptRecord{conv_id, m.turn, m.author.str(), m.content}) << '\n';
  }
}

}  // namespace kindling
