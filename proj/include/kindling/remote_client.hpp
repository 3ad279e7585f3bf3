#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kindling/conversation.hpp"
#include "kindling/policy.hpp"
#include "kindling/reward.hpp"

namespace kindling {

inline constexpr std::string_view kApiKeyEnv = "KINDLING_API_KEY";

struct RemoteEndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string api_key;   // never serialized
  std::string model_name;
  double timeout_seconds = 30.0;
  int max_retries = 2;
  double temperature = 1.0;
  std::string system_prompt;
  double backoff_base_seconds = 0.5;
  double backoff_factor = 2.0;
  std::size_t max_in_flight = 4;

  // Throws Error{Config} when an invariant does not hold.
  void validate() const;
};

// Reads KINDLING_API_KEY; empty if unset.
std::string api_key_from_env();

// Public view of the config, without the API key.
nlohmann::ordered_json to_public_json(const RemoteEndpointConfig& cfg);

// Delay before retry number `retry` (0-based): base * factor^retry.
std::chrono::duration<double> backoff_delay(const RemoteEndpointConfig& cfg, int retry);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

// SELF -> assistant, OTHER -> user, system prompt first when non-empty.
std::vector<ChatMessage> chat_messages_for(const RemoteEndpointConfig& cfg, const ConversationState& state,
                                           const ParticipantId& viewpoint);

// {"model", "messages", "temperature"}.
nlohmann::json chat_request_body(const RemoteEndpointConfig& cfg, const std::vector<ChatMessage>& messages);

// Sorted keys, no whitespace.
std::string canonical_json(const nlohmann::json& value);

// OpenAI-compatible chat-completions client with retry and a bound on
// concurrent in-flight requests. Safe to share between threads.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteEndpointConfig cfg);

  const RemoteEndpointConfig& config() const noexcept { return cfg_; }

  // POSTs {base_url}/chat/completions and returns choices[0].message.content.
  // Retries timeouts, transport failures and 5xx; never retries 401/403.
  std::string complete(const std::vector<ChatMessage>& messages) const;

 private:
  std::string post_once(const std::string& body) const;

  RemoteEndpointConfig cfg_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix + /chat/completions
  std::unique_ptr<std::counting_semaphore<64>> in_flight_;
};

Action remote_generate(const RemoteClient& client, const ConversationState& state, const ParticipantId& viewpoint);
Action remote_generate(const RemoteEndpointConfig& cfg, const ConversationState& state,
                       const ParticipantId& viewpoint);

struct RubricConfig {
  // {transcript} and {reply} are substituted.
  std::string prompt_template =
      "Rate how much the reply below benefits the person it answers. "
      "Answer with a single number.\n\nConversation:\n{transcript}\n\nReply:\n{reply}";
  double min_score = 0.0;
  double max_score = 1.0;
};

// First decimal number in `text`. Throws Error{Unparsable}.
double parse_first_number(std::string_view text);

std::string render_rubric(const RubricConfig& rubric, const Action& action, const ConversationState& state);

// Asks the remote model to grade `action` and clamps the parsed number.
double remote_score(const RemoteClient& client, const RubricConfig& rubric, const Action& action,
                    const ConversationState& state);

// Generate-only policy backed by a remote chat model. Not enumerable, not trainable.
class RemotePolicy final : public PolicyModel {
 public:
  explicit RemotePolicy(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}

  Action generate(const ConversationState& state, std::uint64_t seed) const override;
  std::string_view kind() const override { return "remote"; }

 private:
  std::shared_ptr<const RemoteClient> client_;
};

class RemoteScorer final : public ExtrinsicScorer {
 public:
  RemoteScorer(std::shared_ptr<const RemoteClient> client, RubricConfig rubric)
      : client_(std::move(client)), rubric_(std::move(rubric)) {}

  double score(const Action& action, const ConversationState& state) const override;

 private:
  std::shared_ptr<const RemoteClient> client_;
  RubricConfig rubric_;
};

}  // namespace kindling
