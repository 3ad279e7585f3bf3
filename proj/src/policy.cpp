#include "kindling/policy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "kindling/error.hpp"
#include "kindling/random.hpp"

namespace kindling {

std::vector<Action> PolicyModel::candidates(const ConversationState&) const {
  throw Error(ErrorCode::NotEnumerable, std::string(kind()) + " policy cannot enumerate its actions");
}

double PolicyModel::log_prob(const ConversationState&, const Action&) const {
  throw Error(ErrorCode::NotEnumerable, std::string(kind()) + " policy has no log_prob");
}

std::size_t token_bucket(std::string_view token, std::size_t buckets) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % buckets);
}

std::size_t active_feature(const RoleTranscript& transcript, std::size_t buckets) {
  auto last_other = std::find_if(transcript.rbegin(), transcript.rend(),
                                 [](const RoleMessage& m) { return m.role == Role::Other; });
  if (last_other == transcript.rend()) return 0;

  std::vector<std::size_t> counts(buckets, 0);
  std::istringstream tokens(last_other->content);
  std::string token;
  while (tokens >> token) ++counts[token_bucket(token, buckets)];

  std::size_t best = 0;
  for (std::size_t b = 1; b < buckets; ++b) {
    if (counts[b] > counts[best]) best = b;
  }
  return best;
}

namespace {

void validate_templates(const std::vector<std::string>& templates) {
  if (templates.empty()) throw Error(ErrorCode::InvalidArgument, "template policy needs at least one template");
  std::set<std::string_view> seen;
  for (const auto& t : templates) {
    if (!seen.insert(t).second) throw Error(ErrorCode::InvalidArgument, "duplicate template '" + t + "'");
  }
}

void validate_temperature(double temperature) {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be finite and >= 0");
  }
}

}  // namespace

TemplatePolicy::TemplatePolicy(std::vector<std::string> templates, double temperature, std::size_t feature_buckets)
    : templates_(std::move(templates)),
      temperature_(temperature),
      weights_(feature_buckets, templates_.size(), 0.0) {
  validate_templates(templates_);
  validate_temperature(temperature_);
  if (feature_buckets == 0) throw Error(ErrorCode::InvalidArgument, "feature bucket count must be positive");
}

TemplatePolicy::TemplatePolicy(std::vector<std::string> templates, double temperature, WeightMatrix weights)
    : templates_(std::move(templates)), temperature_(temperature), weights_(std::move(weights)) {
  validate_templates(templates_);
  validate_temperature(temperature_);
  if (weights_.rows() == 0) throw Error(ErrorCode::InvalidArgument, "feature bucket count must be positive");
  if (weights_.cols() != templates_.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight matrix has " + std::to_string(weights_.cols()) +
                                                " columns for " + std::to_string(templates_.size()) + " templates");
  }
  for (double w : weights_.data()) {
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFinite, "non-finite policy weight");
  }
}

std::optional<std::size_t> TemplatePolicy::template_index(std::string_view content) const {
  for (std::size_t k = 0; k < templates_.size(); ++k) {
    if (templates_[k] == content) return k;
  }
  return std::nullopt;
}

std::size_t TemplatePolicy::checked_index(const Action& action) const {
  auto k = template_index(action.content());
  if (!k) throw Error(ErrorCode::UnknownTemplate, "'" + action.content() + "' is not a template");
  return *k;
}

std::size_t TemplatePolicy::feature_of(const ConversationState& state) const {
  return active_feature(render_for_speaker(state, state.next_speaker()), feature_buckets());
}

std::vector<double> TemplatePolicy::probabilities_for_feature(std::size_t feature) const {
  const auto row = weights_.row(feature);
  const std::size_t k_count = templates_.size();
  std::vector<double> p(k_count, 0.0);

  if (greedy()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < k_count; ++k) {
      if (row[k] > row[best]) best = k;
    }
    p[best] = 1.0;
    return p;
  }

  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) max_logit = std::max(max_logit, row[k] / temperature_);
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    p[k] = std::exp(row[k] / temperature_ - max_logit);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> TemplatePolicy::probabilities(const ConversationState& state) const {
  return probabilities_for_feature(feature_of(state));
}

Action TemplatePolicy::generate(const ConversationState& state, std::uint64_t seed) const {
  const auto p = probabilities(state);
  const double u = uniform01(seed);
  double cumulative = 0.0;
  std::size_t chosen = p.size();
  for (std::size_t k = 0; k < p.size(); ++k) {
    cumulative += p[k];
    if (u < cumulative) {
      chosen = k;
      break;
    }
  }
  if (chosen == p.size()) {
    // Rounding left u above the final cumulative sum.
    for (std::size_t k = p.size(); k-- > 0;) {
      if (p[k] > 0.0) {
        chosen = k;
        break;
      }
    }
  }
  return make_action(state, templates_[chosen]);
}

std::vector<Action> TemplatePolicy::candidates(const ConversationState& state) const {
  std::vector<Action> out;
  out.reserve(templates_.size());
  for (const auto& t : templates_) out.push_back(make_action(state, t));
  return out;
}

double TemplatePolicy::log_prob(const ConversationState& state, const Action& action) const {
  const std::size_t chosen = checked_index(action);
  const std::size_t f = feature_of(state);
  if (greedy()) {
    return probabilities_for_feature(f)[chosen] == 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const auto row = weights_.row(f);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double w : row) max_logit = std::max(max_logit, w / temperature_);
  double sum = 0.0;
  for (double w : row) sum += std::exp(w / temperature_ - max_logit);
  return row[chosen] / temperature_ - max_logit - std::log(sum);
}

WeightMatrix TemplatePolicy::log_prob_gradient(const ConversationState& state, const Action& action) const {
  if (greedy()) throw Error(ErrorCode::NotTrainable, "greedy template policy has no gradient");
  const std::size_t chosen = checked_index(action);
  const std::size_t f = feature_of(state);
  const auto p = probabilities_for_feature(f);
  WeightMatrix grad(weights_.rows(), weights_.cols(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    grad(f, k) = ((k == chosen ? 1.0 : 0.0) - p[k]) / temperature_;
  }
  return grad;
}

TemplatePolicy TemplatePolicy::update(std::span<const TrainingExample> batch, double learning_rate) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be finite and > 0");
  }
  if (greedy()) throw Error(ErrorCode::NotTrainable, "greedy template policy cannot be updated");

  struct Step {
    std::size_t feature;
    std::size_t chosen;
    double advantage;
    std::vector<double> p;
  };
  std::vector<Step> steps;
  steps.reserve(batch.size());
  for (const auto& ex : batch) {
    const std::size_t chosen = checked_index(ex.action);
    if (!std::isfinite(ex.advantage)) throw Error(ErrorCode::NonFinite, "non-finite advantage");
    if (ex.advantage == 0.0) continue;
    const std::size_t f = feature_of(ex.state);
    steps.push_back(Step{f, chosen, ex.advantage, probabilities_for_feature(f)});
  }

  WeightMatrix next = weights_;
  for (const auto& s : steps) {
    for (std::size_t k = 0; k < s.p.size(); ++k) {
      const double indicator = k == s.chosen ? 1.0 : 0.0;
      next(s.feature, k) += learning_rate * s.advantage * (indicator - s.p[k]) / temperature_;
    }
  }
  return with_weights(std::move(next));
}

TemplatePolicy TemplatePolicy::with_weights(WeightMatrix weights) const {
  return TemplatePolicy(templates_, temperature_, std::move(weights));
}

Action EchoPolicy::generate(const ConversationState& state, std::uint64_t) const {
  return make_action(state, state.empty() ? std::string(kOpening) : state.messages().back().content);
}

std::vector<Action> EchoPolicy::candidates(const ConversationState& state) const {
  return {generate(state, 0)};
}

double EchoPolicy::log_prob(const ConversationState& state, const Action& action) const {
  return action.content() == generate(state, 0).content() ? 0.0 : -std::numeric_limits<double>::infinity();
}

std::string to_checkpoint_json(const TemplatePolicy& policy) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["kind"] = "template";
  j["templates"] = policy.templates();
  j["temperature"] = policy.temperature();
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < policy.weights().rows(); ++r) {
    const auto row = policy.weights().row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["weights"] = std::move(rows);
  return j.dump();
}

TemplatePolicy from_checkpoint_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, "checkpoint is not a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::set<std::string> known = {"version", "kind", "templates", "temperature", "weights"};
    if (!known.contains(it.key())) throw Error(ErrorCode::Parse, "unknown checkpoint field '" + it.key() + "'");
  }
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::Parse, "unsupported checkpoint version");
    if (j.at("kind").get<std::string>() != "template") {
      throw Error(ErrorCode::Parse, "unsupported checkpoint kind '" + j.at("kind").get<std::string>() + "'");
    }
    auto templates = j.at("templates").get<std::vector<std::string>>();
    const double temperature = j.at("temperature").get<double>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error(ErrorCode::Parse, "checkpoint has no weight rows");
    WeightMatrix weights(rows.size(), templates.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != templates.size()) {
        throw Error(ErrorCode::Parse, "checkpoint weight row " + std::to_string(r) + " has wrong length");
      }
      for (std::size_t k = 0; k < rows[r].size(); ++k) weights(r, k) = rows[r][k];
    }
    return TemplatePolicy(std::move(templates), temperature, std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, e.detail());
  }
}

}  // namespace kindling
