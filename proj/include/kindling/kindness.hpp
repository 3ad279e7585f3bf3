#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kindling/conversation.hpp"
#include "kindling/policy.hpp"
#include "kindling/reward.hpp"

namespace kindling {

// One model turn and the simulated target reply:
//   model_state = s^j_t, model_action = a^j_t,
//   target_state = s^i_{t+1} = s^j_t + a^j_t, target_response = a^i_{t+1}.
struct Exchange {
  ConversationState model_state;
  Action model_action;
  ConversationState target_state;
  Action target_response;

  friend bool operator==(const Exchange&, const Exchange&) = default;
};

// Perspective switch S applied to all four objects.
Exchange switch_exchange(const Exchange& exchange);

// Generates the target's reply with the model's own policy (self as predictor).
Action simulate_target_response(const PolicyModel& policy, const ConversationState& state_after_action,
                                std::uint64_t seed);

// Builds the exchange for a fixed model action.
Exchange run_exchange(const PolicyModel& policy, const ConversationState& model_state, const Action& model_action,
                      std::uint64_t target_seed);

// Target's estimated reward from a switched exchange: extrinsic on the
// switched reply given the switched target state, intrinsic on the switched
// model action given the switched model state (the intrinsic term is shifted
// back one step, onto the feedback the target received).
RewardBreakdown target_reward(const PolicyModel& policy, const RewardScorers& scorers, const Exchange& switched);

// Model's own reward from an un-switched exchange: extrinsic on its action,
// intrinsic on the target's reply as feedback.
RewardBreakdown own_reward(const PolicyModel& policy, const RewardScorers& scorers, const Exchange& exchange);

struct TargetRewardEstimate {
  RewardBreakdown reward;
  Action target_response;
  Exchange switched;
};

TargetRewardEstimate estimate_target_reward(const PolicyModel& policy, const RewardScorers& scorers,
                                            const Action& model_action, const ConversationState& model_state,
                                            std::uint64_t seed);

struct ObjectiveEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Seed of target simulation `sample`. Independent of the candidate, so every
// candidate sees the same random stream.
std::uint64_t target_sample_seed(std::uint64_t base_seed, std::size_t sample);

// Reduces values in index order (Welford). standard_error is 0 for n == 1.
ObjectiveEstimate summarize(std::span<const double> values);

// Monte-Carlo mean and standard error of the target's estimated total reward for a fixed
// candidate. `workers` > 1 fans rollouts out; results are identical to the
// sequential run.
ObjectiveEstimate kindness_objective_estimate(const PolicyModel& policy, const RewardScorers& scorers,
                                              const ConversationState& model_state, const Action& candidate,
                                              std::size_t samples, std::uint64_t seed, std::size_t workers = 1);

struct KindChoice {
  std::size_t index = 0;
  Action action;
  ObjectiveEstimate estimate;
  std::vector<ObjectiveEstimate> per_candidate;
};

// argmax over candidates of the estimated objective, lowest index on ties.
// Throws Error{EmptyCandidates}.
KindChoice select_kind_action(const PolicyModel& policy, const RewardScorers& scorers,
                              const ConversationState& model_state, std::span<const Action> candidates,
                              std::size_t samples, std::uint64_t seed, std::size_t workers = 1);
// Uses policy.candidates(model_state).
KindChoice select_kind_action(const PolicyModel& policy, const RewardScorers& scorers,
                              const ConversationState& model_state, std::size_t samples, std::uint64_t seed,
                              std::size_t workers = 1);

// Exact expectation over every target reply of an enumerable policy.
// Throws Error{NotEnumerable}.
double brute_force_objective(const PolicyModel& policy, const RewardScorers& scorers,
                             const ConversationState& model_state, const Action& candidate);

// sum_a p(a | s) * brute_force_objective(s, a).
double expected_objective_exact(const PolicyModel& policy, const RewardScorers& scorers,
                                const ConversationState& model_state);

// Monte-Carlo objective of the policy itself: both the model's action and the
// target's reply are sampled.
ObjectiveEstimate policy_objective_estimate(const PolicyModel& policy, const RewardScorers& scorers,
                                            const ConversationState& model_state, std::size_t samples,
                                            std::uint64_t seed, std::size_t workers = 1);

// Conversation prompts. Each prompt is non-empty and ends with the target's
// message, so the model speaks next.
class PromptDataset {
 public:
  PromptDataset() = default;
  PromptDataset(std::vector<ConversationState> prompts, std::vector<std::string> ids);
  explicit PromptDataset(std::vector<ConversationState> prompts);

  const std::vector<ConversationState>& prompts() const noexcept { return prompts_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return prompts_.size(); }
  bool empty() const noexcept { return prompts_.empty(); }
  const ConversationState& operator[](std::size_t i) const { return prompts_[i]; }

 private:
  void validate() const;

  std::vector<ConversationState> prompts_;
  std::vector<std::string> ids_;
};

enum class UpdateOn {
  Own,       // model's (s^j_t, a^j_t) credited with the target's reward
  Switched,  // literal reading: train on the switched target pair
};

struct TrainingConfig {
  std::uint64_t seed = 0;
  double learning_rate = 0.1;
  std::size_t epochs = 1;
  bool use_baseline = true;
  double baseline_decay = 0.9;
  UpdateOn update_on = UpdateOn::Own;
  std::size_t horizon = 1;
  // Record the exact expected objective before each update (enumerable
  // policies only); otherwise the step's single-rollout total is recorded.
  bool exact_objective = true;
};

struct TrainingStepRecord {
  std::size_t step = 0;
  std::size_t prompt_index = 0;
  Action model_action;
  Action target_response;
  RewardBreakdown reward;  // reward.total() is the advantage before baseline subtraction
  double objective_estimate = 0.0;
  Exchange exchange;
  Exchange switched;
};

struct TrainingResult {
  TemplatePolicy policy;
  std::vector<TrainingStepRecord> records;
};

// Naive Kindness: per prompt, act, simulate the target's reply with the same
// policy, switch perspectives, score the target's reward and update.
TrainingResult train_naive_kindness(const TemplatePolicy& policy, const PromptDataset& dataset,
                                    const RewardScorers& scorers, const TrainingConfig& config);

// Same loop, but the reward is the model's own un-switched reward.
TrainingResult train_selfish_baseline(const TemplatePolicy& policy, const PromptDataset& dataset,
                                      const RewardScorers& scorers, const TrainingConfig& config);

}  // namespace kindling
