#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kindling/conversation.hpp"

namespace kindling {

// Generative policy contract: a = M(s).
//
// All implementations are immutable after construction; generate() must be
// deterministic given (state, seed) and the model's parameters.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  // Returns an action authored by state.next_speaker() at turn state.size().
  virtual Action generate(const ConversationState& state, std::uint64_t seed) const = 0;

  virtual std::string_view kind() const = 0;

  // Enumerable policies expose their finite action set and exact log-probs.
  virtual bool enumerable() const { return false; }
  // Throws Error{NotEnumerable} unless enumerable().
  virtual std::vector<Action> candidates(const ConversationState& state) const;
  // Natural log. Throws Error{NotEnumerable} unless enumerable().
  virtual double log_prob(const ConversationState& state, const Action& action) const;
};

class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kDefaultFeatureBuckets = 64;

// FNV-1a bucket of one token.
std::size_t token_bucket(std::string_view token, std::size_t buckets);

// Hashed bag of the whitespace tokens of the most recent OTHER message; the
// bucket with the highest count wins, lowest index on ties. Bucket 0 when
// there is no OTHER message or it has no tokens.
std::size_t active_feature(const RoleTranscript& transcript, std::size_t buckets);

struct TrainingExample {
  ConversationState state;
  Action action;
  double advantage = 0.0;
};

// Softmax over K fixed response templates, conditioned on a hashed feature of
// the conversation: p(k | s) = softmax(weights[f(s)] / temperature)_k.
//
// temperature == 0 selects greedy mode: the argmax template (lowest index on
// ties) with probability one. Greedy policies are not trainable.
class TemplatePolicy final : public PolicyModel {
 public:
  TemplatePolicy(std::vector<std::string> templates, double temperature,
                 std::size_t feature_buckets = kDefaultFeatureBuckets);
  TemplatePolicy(std::vector<std::string> templates, double temperature, WeightMatrix weights);

  const std::vector<std::string>& templates() const noexcept { return templates_; }
  double temperature() const noexcept { return temperature_; }
  bool greedy() const noexcept { return temperature_ == 0.0; }
  std::size_t feature_buckets() const noexcept { return weights_.rows(); }
  const WeightMatrix& weights() const noexcept { return weights_; }

  std::optional<std::size_t> template_index(std::string_view content) const;
  std::size_t feature_of(const ConversationState& state) const;
  std::vector<double> probabilities_for_feature(std::size_t feature) const;
  std::vector<double> probabilities(const ConversationState& state) const;

  Action generate(const ConversationState& state, std::uint64_t seed) const override;
  std::string_view kind() const override { return "template"; }
  bool enumerable() const override { return true; }
  std::vector<Action> candidates(const ConversationState& state) const override;
  // Throws Error{UnknownTemplate} if the content is not a template.
  double log_prob(const ConversationState& state, const Action& action) const override;

  // d log p(action | state) / d weights. Nonzero only on the active row.
  WeightMatrix log_prob_gradient(const ConversationState& state, const Action& action) const;

  // REINFORCE ascent; every example's gradient is taken at the current
  // weights and applied in batch order. Returns the updated policy.
  TemplatePolicy update(std::span<const TrainingExample> batch, double learning_rate) const;

  TemplatePolicy with_weights(WeightMatrix weights) const;

 private:
  std::size_t checked_index(const Action& action) const;

  std::vector<std::string> templates_;
  double temperature_;
  WeightMatrix weights_;
};

// Echoes the last message; "hello" on an empty conversation.
class EchoPolicy final : public PolicyModel {
 public:
  static constexpr std::string_view kOpening = "hello";

  Action generate(const ConversationState& state, std::uint64_t seed) const override;
  std::string_view kind() const override { return "echo"; }
  bool enumerable() const override { return true; }
  std::vector<Action> candidates(const ConversationState& state) const override;
  // 0 for the echoed content, -inf for anything else.
  double log_prob(const ConversationState& state, const Action& action) const override;
};

// Checkpoint JSON: {"version": 1, "kind": "template", "templates": [...],
// "temperature": x, "weights": [[...], ...]}.
std::string to_checkpoint_json(const TemplatePolicy& policy);
// Throws Error{Parse} for malformed input, unknown version or kind.
TemplatePolicy from_checkpoint_json(const std::string& text);

}  // namespace kindling
