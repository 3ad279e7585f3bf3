#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace kindling {

// Opaque, non-empty participant label. Comparison is exact byte equality.
class ParticipantId {
 public:
  explicit ParticipantId(std::string label);

  const std::string& str() const noexcept { return label_; }

  friend bool operator==(const ParticipantId&, const ParticipantId&) = default;
  friend auto operator<=>(const ParticipantId&, const ParticipantId&) = default;

 private:
  std::string label_;
};

struct Message {
  ParticipantId author;
  std::size_t turn = 0;  // global, 0-based within the conversation
  std::string content;   // empty only for a "pass"

  friend bool operator==(const Message&, const Message&) = default;
};

struct Action {
  Message message;

  const std::string& content() const noexcept { return message.content; }
  const ParticipantId& author() const noexcept { return message.author; }

  friend bool operator==(const Action&, const Action&) = default;
};

// Chronological messages between exactly two participants with strict
// alternation, plus an explicit designation of who speaks next.
class ConversationState {
 public:
  // Empty conversation; `first` speaks first.
  static ConversationState start(ParticipantId first, ParticipantId second);

  // Validates alternation, turn indices, authorship and next_speaker.
  // Throws Error{InvalidConversation} on any violation.
  static ConversationState from_messages(std::array<ParticipantId, 2> participants,
                                         std::vector<Message> messages, ParticipantId next_speaker);

  const std::vector<Message>& messages() const noexcept { return messages_; }
  const ParticipantId& next_speaker() const noexcept { return next_speaker_; }
  const std::array<ParticipantId, 2>& participants() const noexcept { return participants_; }
  std::size_t size() const noexcept { return messages_.size(); }
  bool empty() const noexcept { return messages_.empty(); }

  bool has_participant(const ParticipantId& p) const noexcept;
  // Throws Error{UnknownParticipant} if p is not in this conversation.
  const ParticipantId& other(const ParticipantId& p) const;

  friend bool operator==(const ConversationState&, const ConversationState&) = default;

 private:
  friend ConversationState append_action(const ConversationState&, const struct Action&);
  friend ConversationState switch_perspective(const ConversationState&);

  ConversationState(std::array<ParticipantId, 2> participants, std::vector<Message> messages,
                    ParticipantId next_speaker)
      : participants_(std::move(participants)),
        messages_(std::move(messages)),
        next_speaker_(std::move(next_speaker)) {}

  std::array<ParticipantId, 2> participants_;
  std::vector<Message> messages_;
  ParticipantId next_speaker_;
};

// Builds an action for the state's next speaker at the correct turn index.
Action make_action(const ConversationState& state, std::string content);

// s' = s + a. Throws AuthorMismatch / TurnMismatch.
ConversationState append_action(const ConversationState& state, const Action& action);

// Swaps the two participant labels on every message and on next_speaker.
ConversationState switch_perspective(const ConversationState& state);

// Swaps the action's author to the other participant of `state`.
Action switch_perspective_action(const Action& action, const ConversationState& state);
// Same, with the pair given explicitly.
Action switch_perspective_action(const Action& action, const ParticipantId& a, const ParticipantId& b);

enum class Role { Self, Other };

struct RoleMessage {
  Role role;
  std::string content;

  friend bool operator==(const RoleMessage&, const RoleMessage&) = default;
};

using RoleTranscript = std::vector<RoleMessage>;

// Tags each message SELF if authored by `viewpoint`, OTHER otherwise.
RoleTranscript render_for_speaker(const ConversationState& state, const ParticipantId& viewpoint);

// Transcript JSONL: {"conv_id", "turn", "author", "content"} in that key order.
struct TranscriptRecord {
  std::string conv_id;
  std::size_t turn = 0;
  std::string author;
  std::string content;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

std::string to_jsonl_line(const TranscriptRecord& record);
// Throws Error{Parse} on malformed JSON, missing or mistyped fields.
TranscriptRecord parse_transcript_line(const std::string& line);
void write_transcript(std::ostream& out, const std::string& conv_id, const ConversationState& state);

}  // namespace kindling
