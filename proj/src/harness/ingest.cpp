#include "kindling/harness/ingest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

#include "kindling/error.hpp"

namespace kindling::harness {

namespace {

struct ParsedPrompt {
  std::string conv_id;
  ConversationState state;
};

[[noreturn]] void bad_line(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::InvalidDataset, "line " + std::to_string(line_no) + ": " + why);
}

ParsedPrompt parse_prompt_line(const std::string& line, std::size_t line_no) {
  using nlohmann::json;
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad_line(line_no, "not a JSON object");
  static const std::set<std::string> known = {"conv_id", "messages", "model"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) bad_line(line_no, "unknown field '" + it.key() + "'");
  }
  if (!j.contains("conv_id") || !j["conv_id"].is_string()) bad_line(line_no, "missing string field 'conv_id'");
  if (!j.contains("messages") || !j["messages"].is_array()) bad_line(line_no, "missing array field 'messages'");
  std::string model = kDefaultModelId;
  if (j.contains("model")) {
    if (!j["model"].is_string() || j["model"].get<std::string>().empty()) {
      bad_line(line_no, "'model' must be a non-empty string");
    }
    model = j["model"].get<std::string>();
  }

  const json& raw = j["messages"];
  if (raw.empty()) bad_line(line_no, "prompt has no messages");
  std::vector<Message> messages;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const json& m = raw[i];
    if (!m.is_object() || !m.contains("author") || !m["author"].is_string() || !m.contains("content") ||
        !m["content"].is_string() || m.size() != 2) {
      bad_line(line_no, "message " + std::to_string(i) + " must be {\"author\": str, \"content\": str}");
    }
    const auto author = m["author"].get<std::string>();
    if (author.empty()) bad_line(line_no, "message " + std::to_string(i) + " has an empty author");
    messages.push_back(Message{ParticipantId(author), i, m["content"].get<std::string>()});
  }

  const ParticipantId model_id(model);
  const ParticipantId target_id = messages.back().author;
  if (target_id == model_id) bad_line(line_no, "prompt must end with the target's message, not the model's");
  for (std::size_t i = 1; i < messages.size(); ++i) {
    if (messages[i].author == messages[i - 1].author) {
      bad_line(line_no, "authors do not alternate at message " + std::to_string(i));
    }
  }
  try {
    return ParsedPrompt{j["conv_id"].get<std::string>(),
                        ConversationState::from_messages({model_id, target_id}, std::move(messages), model_id)};
  } catch (const Error& e) {
    bad_line(line_no, e.detail());
  }
}

}  // namespace

IngestResult ingest_prompts(std::istream& in, bool lenient) {
  std::vector<ConversationState> prompts;
  std::vector<std::string> ids;
  std::vector<std::string> diagnostics;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto parsed = parse_prompt_line(line, line_no);
      ids.push_back(std::move(parsed.conv_id));
      prompts.push_back(std::move(parsed.state));
    } catch (const Error& e) {
      if (!lenient) throw;
      diagnostics.push_back(e.detail());
    }
  }
  if (prompts.empty()) throw Error(ErrorCode::EmptyDataset, "no valid prompts found");
  return IngestResult{PromptDataset(std::move(prompts), std::move(ids)), std::move(diagnostics)};
}

IngestResult ingest_prompts(const std::filesystem::path& path, bool lenient) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset " + path.string());
  try {
    return ingest_prompts(in, lenient);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace kindling::harness
