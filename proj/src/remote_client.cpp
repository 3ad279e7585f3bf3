#include "kindling/remote_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "kindling/error.hpp"

namespace kindling {

void RemoteEndpointConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw Error(ErrorCode::Config, "remote base_url must start with http:// or https://");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_url.rfind("https://", 0) == 0) {
    throw Error(ErrorCode::Config, "https endpoints need a build with KINDLING_WITH_TLS=ON");
  }
#endif
  if (!(timeout_seconds > 0.0)) throw Error(ErrorCode::Config, "remote timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::Config, "remote max_retries must be >= 0");
  if (!(backoff_base_seconds >= 0.0) || !(backoff_factor >= 1.0)) {
    throw Error(ErrorCode::Config, "remote backoff must have base >= 0 and factor >= 1");
  }
  if (max_in_flight == 0 || max_in_flight > 64) throw Error(ErrorCode::Config, "remote max_in_flight must be 1..64");
}

std::string api_key_from_env() {
  const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
  return key ? std::string(key) : std::string();
}

nlohmann::ordered_json to_public_json(const RemoteEndpointConfig& cfg) {
  nlohmann::ordered_json j;
  j["base_url"] = cfg.base_url;
  j["model_name"] = cfg.model_name;
  j["timeout"] = cfg.timeout_seconds;
  j["max_retries"] = cfg.max_retries;
  j["temperature"] = cfg.temperature;
  j["system_prompt"] = cfg.system_prompt;
  j["api_key_set"] = !cfg.api_key.empty();
  return j;
}

std::chrono::duration<double> backoff_delay(const RemoteEndpointConfig& cfg, int retry) {
  return std::chrono::duration<double>(cfg.backoff_base_seconds * std::pow(cfg.backoff_factor, retry));
}

std::vector<ChatMessage> chat_messages_for(const RemoteEndpointConfig& cfg, const ConversationState& state,
                                           const ParticipantId& viewpoint) {
  std::vector<ChatMessage> out;
  if (!cfg.system_prompt.empty()) out.push_back({"system", cfg.system_prompt});
  for (const RoleMessage& m : render_for_speaker(state, viewpoint)) {
    out.push_back({m.role == Role::Self ? "assistant" : "user", m.content});
  }
  return out;
}

nlohmann::json chat_request_body(const RemoteEndpointConfig& cfg, const std::vector<ChatMessage>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::json{{"model", cfg.model_name}, {"messages", std::move(msgs)}, {"temperature", cfg.temperature}};
}

std::string canonical_json(const nlohmann::json& value) { return value.dump(); }

namespace {

struct SplitUrl {
  std::string origin;
  std::string prefix;
};

SplitUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

// Transient failures are retried; everything else propagates immediately.
bool retryable(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Timeout:
    case ErrorCode::Transport:
      return true;
    case ErrorCode::HttpStatus:
      return e.http_status() >= 500;
    default:
      return false;
  }
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<64>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<64>& sem_;
};

}  // namespace

RemoteClient::RemoteClient(RemoteEndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto split = split_base_url(cfg_.base_url);
  origin_ = std::move(split.origin);
  path_ = split.prefix + "/chat/completions";
  in_flight_ = std::make_unique<std::counting_semaphore<64>>(static_cast<std::ptrdiff_t>(cfg_.max_in_flight));
}

std::string RemoteClient::post_once(const std::string& body) const {
  httplib::Client http(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg_.timeout_seconds));
  http.set_connection_timeout(timeout);
  http.set_read_timeout(timeout);
  http.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto res = http.Post(path_, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw Error(ErrorCode::Timeout, "no response from " + origin_ + path_ + " (" + httplib::to_string(err) + ")");
    }
    throw Error(ErrorCode::Transport, "request to " + origin_ + path_ + " failed (" + httplib::to_string(err) + ")");
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::AuthFailure, "endpoint rejected credentials with HTTP " + std::to_string(res->status),
                res->status);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::HttpStatus, "endpoint returned HTTP " + std::to_string(res->status), res->status);
  }
  return res->body;
}

std::string RemoteClient::complete(const std::vector<ChatMessage>& messages) const {
  const std::string body = canonical_json(chat_request_body(cfg_, messages));
  std::string response;
  for (int attempt = 0;; ++attempt) {
    try {
      SlotGuard slot(*in_flight_);
      response = post_once(body);
      break;
    } catch (const Error& e) {
      if (!retryable(e) || attempt >= cfg_.max_retries) throw;
    }
    std::this_thread::sleep_for(backoff_delay(cfg_, attempt));
  }

  nlohmann::json j = nlohmann::json::parse(response, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedResponse, "response is not a JSON object");
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::MalformedResponse, "response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "first choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

Action remote_generate(const RemoteClient& client, const ConversationState& state, const ParticipantId& viewpoint) {
  std::string content = client.complete(chat_messages_for(client.config(), state, viewpoint));
  return Action{Message{viewpoint, state.size(), std::move(content)}};
}

Action remote_generate(const RemoteEndpointConfig& cfg, const ConversationState& state,
                       const ParticipantId& viewpoint) {
  return remote_generate(RemoteClient(cfg), state, viewpoint);
}

double parse_first_number(std::string_view text) {
  static const std::regex number(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))");
  std::match_results<std::string_view::const_iterator> match;
  if (!std::regex_search(text.begin(), text.end(), match, number)) {
    throw Error(ErrorCode::Unparsable, "no number in score reply '" + std::string(text) + "'");
  }
  return std::stod(match.str());
}

std::string render_rubric(const RubricConfig& rubric, const Action& action, const ConversationState& state) {
  std::string transcript;
  for (const Message& m : state.messages()) transcript += m.author.str() + ": " + m.content + "\n";
  if (!transcript.empty()) transcript.pop_back();

  auto substitute = [](std::string text, std::string_view slot, const std::string& value) {
    for (auto pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + value.size())) {
      text.replace(pos, slot.size(), value);
    }
    return text;
  };
  return substitute(substitute(rubric.prompt_template, "{transcript}", transcript), "{reply}", action.content());
}

double remote_score(const RemoteClient& client, const RubricConfig& rubric, const Action& action,
                    const ConversationState& state) {
  std::vector<ChatMessage> messages;
  if (!client.config().system_prompt.empty()) messages.push_back({"system", client.config().system_prompt});
  messages.push_back({"user", render_rubric(rubric, action, state)});
  const double value = parse_first_number(client.complete(messages));
  return std::clamp(value, rubric.min_score, rubric.max_score);
}

Action RemotePolicy::generate(const ConversationState& state, std::uint64_t) const {
  try {
    return remote_generate(*client_, state, state.next_speaker());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownParticipant) throw;
    throw Error(ErrorCode::GenerationFailure, e.detail(), e.http_status());
  }
}

double RemoteScorer::score(const Action& action, const ConversationState& state) const {
  return remote_score(*client_, rubric_, action, state);
}

}  // namespace kindling
