#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kindling/conversation.hpp"
#include "kindling/policy.hpp"

namespace kindling {

// R = R_EM + R_IM. total is computed once, at construction.
class RewardBreakdown {
 public:
  double extrinsic() const noexcept { return extrinsic_; }
  double intrinsic() const noexcept { return intrinsic_; }
  double total() const noexcept { return total_; }

  friend RewardBreakdown combined_reward(double extrinsic, double intrinsic);
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;

 private:
  RewardBreakdown(double extrinsic, double intrinsic)
      : extrinsic_(extrinsic), intrinsic_(intrinsic), total_(extrinsic + intrinsic) {}

  double extrinsic_;
  double intrinsic_;
  double total_;
};

// Throws Error{NonFinite} if either input is NaN or infinite.
RewardBreakdown combined_reward(double extrinsic, double intrinsic);

// Extrinsic (RLHF stand-in) scorer of an action given the state it was produced in.
class ExtrinsicScorer {
 public:
  virtual ~ExtrinsicScorer() = default;
  virtual double score(const Action& action, const ConversationState& state) const = 0;
};

// Lowercases, splits on whitespace and strips ASCII punctuation at token
// edges. Tokens that are pure punctuation are dropped.
std::vector<std::string> lexicon_tokens(std::string_view content);

class LexiconScorer final : public ExtrinsicScorer {
 public:
  LexiconScorer() = default;
  // Throws Error{InvalidArgument} for keys that are not lowercase.
  LexiconScorer(std::map<std::string, double> entries, double default_score = 0.0);

  // {"default": 0.0, "entries": {"token": score, ...}}. Throws Error{Parse}.
  static LexiconScorer from_json(const std::string& text);

  double score_text(std::string_view content) const;
  double score(const Action& action, const ConversationState& state) const override;

  const std::map<std::string, double>& entries() const noexcept { return entries_; }
  double default_score() const noexcept { return default_score_; }

 private:
  std::map<std::string, double> entries_;
  double default_score_ = 0.0;
};

inline double extrinsic_score(const ExtrinsicScorer& scorer, const Action& action, const ConversationState& state) {
  return scorer.score(action, state);
}

// Intrinsic reward computed from environmental feedback: the message the
// other party produced in `state` (feedback.turn == state.size()).
class IntrinsicScorer {
 public:
  virtual ~IntrinsicScorer() = default;
  virtual double score(const Action& feedback, const ConversationState& state, const PolicyModel& policy) const = 0;
};

class NullIrf final : public IntrinsicScorer {
 public:
  double score(const Action&, const ConversationState&, const PolicyModel&) const override { return 0.0; }
};

// Curiosity as surprisal: -log p(feedback | state) under the shared policy.
class SurprisalIrf final : public IntrinsicScorer {
 public:
  double score(const Action& feedback, const ConversationState& state, const PolicyModel& policy) const override;
};

// Exact-content lookup, for constructed experiments.
class TableIrf final : public IntrinsicScorer {
 public:
  TableIrf() = default;
  explicit TableIrf(std::map<std::string, double> entries, double default_value = 0.0);

  // {"default": 0.0, "entries": {"content": value, ...}}. Throws Error{Parse}.
  static TableIrf from_json(const std::string& text);

  double score(const Action& feedback, const ConversationState& state, const PolicyModel& policy) const override;

  const std::map<std::string, double>& entries() const noexcept { return entries_; }
  double default_value() const noexcept { return default_value_; }

 private:
  std::map<std::string, double> entries_;
  double default_value_ = 0.0;
};

inline double intrinsic_score(const IntrinsicScorer& scorer, const Action& feedback, const ConversationState& state,
                              const PolicyModel& policy) {
  return scorer.score(feedback, state, policy);
}

// The reward function handed to the trainer and estimators.
struct RewardScorers {
  std::shared_ptr<const ExtrinsicScorer> extrinsic;
  std::shared_ptr<const IntrinsicScorer> intrinsic;
  // Multiplies the intrinsic term before it enters the breakdown.
  double intrinsic_weight = 1.0;
};

}  // namespace kindling
