#include "kindling/reward.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <set>

#include "kindling/error.hpp"

namespace kindling {

RewardBreakdown combined_reward(double extrinsic, double intrinsic) {
  if (!std::isfinite(extrinsic) || !std::isfinite(intrinsic)) {
    throw Error(ErrorCode::NonFinite, "reward components must be finite (extrinsic=" + std::to_string(extrinsic) +
                                          ", intrinsic=" + std::to_string(intrinsic) + ")");
  }
  return RewardBreakdown(extrinsic, intrinsic);
}

std::vector<std::string> lexicon_tokens(std::string_view content) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < content.size()) {
    while (i < content.size() && is_space(content[i])) ++i;
    std::size_t j = i;
    while (j < content.size() && !is_space(content[j])) ++j;
    std::size_t begin = i;
    std::size_t end = j;
    while (begin < end && is_punct(content[begin])) ++begin;
    while (end > begin && is_punct(content[end - 1])) --end;
    if (begin < end) {
      std::string token(content.substr(begin, end - begin));
      for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

namespace {

struct ScoreTable {
  std::map<std::string, double> entries;
  double default_value = 0.0;
};

ScoreTable parse_score_table(const std::string& text, std::string_view what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, std::string(what) + " is not a JSON object");
  ScoreTable table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "default") {
      if (!it->is_number()) throw Error(ErrorCode::Parse, std::string(what) + " 'default' must be a number");
      table.default_value = it->get<double>();
    } else if (it.key() == "entries") {
      if (!it->is_object()) throw Error(ErrorCode::Parse, std::string(what) + " 'entries' must be an object");
      for (auto e = it->begin(); e != it->end(); ++e) {
        if (!e->is_number()) throw Error(ErrorCode::Parse, std::string(what) + " entry '" + e.key() + "' is not a number");
        table.entries.emplace(e.key(), e->get<double>());
      }
    } else {
      throw Error(ErrorCode::Parse, std::string(what) + " has unknown field '" + it.key() + "'");
    }
  }
  for (const auto& [key, value] : table.entries) {
    if (!std::isfinite(value)) throw Error(ErrorCode::Parse, std::string(what) + " entry '" + key + "' is not finite");
  }
  return table;
}

}  // namespace

LexiconScorer::LexiconScorer(std::map<std::string, double> entries, double default_score)
    : entries_(std::move(entries)), default_score_(default_score) {
  for (const auto& [token, value] : entries_) {
    for (char c : token) {
      if (std::isupper(static_cast<unsigned char>(c))) {
        throw Error(ErrorCode::InvalidArgument, "lexicon token '" + token + "' is not lowercase");
      }
    }
  }
}

LexiconScorer LexiconScorer::from_json(const std::string& text) {
  ScoreTable table = parse_score_table(text, "lexicon");
  try {
    return LexiconScorer(std::move(table.entries), table.default_value);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, e.detail());
  }
}

double LexiconScorer::score_text(std::string_view content) const {
  double total = 0.0;
  for (const auto& token : lexicon_tokens(content)) {
    auto it = entries_.find(token);
    total += it == entries_.end() ? default_score_ : it->second;
  }
  return total;
}

double LexiconScorer::score(const Action& action, const ConversationState&) const {
  return score_text(action.content());
}

double SurprisalIrf::score(const Action& feedback, const ConversationState& state, const PolicyModel& policy) const {
  // 0.0 - x rather than -x: a certain event scores +0.0, not -0.0.
  return 0.0 - policy.log_prob(state, feedback);
}

TableIrf::TableIrf(std::map<std::string, double> entries, double default_value)
    : entries_(std::move(entries)), default_value_(default_value) {}

TableIrf TableIrf::from_json(const std::string& text) {
  ScoreTable table = parse_score_table(text, "irf table");
  return TableIrf(std::move(table.entries), table.default_value);
}

double TableIrf::score(const Action& feedback, const ConversationState&, const PolicyModel&) const {
  auto it = entries_.find(feedback.content());
  return it == entries_.end() ? default_value_ : it->second;
}

}  // namespace kindling
