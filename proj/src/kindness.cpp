#include "kindling/kindness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "kindling/error.hpp"
#include "kindling/random.hpp"

namespace kindling {

Exchange switch_exchange(const Exchange& e) {
  return Exchange{switch_perspective(e.model_state), switch_perspective_action(e.model_action, e.model_state),
                  switch_perspective(e.target_state), switch_perspective_action(e.target_response, e.target_state)};
}

Action simulate_target_response(const PolicyModel& policy, const ConversationState& state_after_action,
                                std::uint64_t seed) {
  if (state_after_action.empty()) {
    throw Error(ErrorCode::InvalidArgument, "target simulation needs the model's action in the state");
  }
  return policy.generate(state_after_action, seed);
}

Exchange run_exchange(const PolicyModel& policy, const ConversationState& model_state, const Action& model_action,
                      std::uint64_t target_seed) {
  ConversationState target_state = append_action(model_state, model_action);
  Action response = simulate_target_response(policy, target_state, target_seed);
  return Exchange{model_state, model_action, std::move(target_state), std::move(response)};
}

RewardBreakdown target_reward(const PolicyModel& policy, const RewardScorers& scorers, const Exchange& switched) {
  const double ext = scorers.extrinsic->score(switched.target_response, switched.target_state);
  const double irf = scorers.intrinsic->score(switched.model_action, switched.model_state, policy);
  return combined_reward(ext, scorers.intrinsic_weight * irf);
}

RewardBreakdown own_reward(const PolicyModel& policy, const RewardScorers& scorers, const Exchange& exchange) {
  const double ext = scorers.extrinsic->score(exchange.model_action, exchange.model_state);
  const double irf = scorers.intrinsic->score(exchange.target_response, exchange.target_state, policy);
  return combined_reward(ext, scorers.intrinsic_weight * irf);
}

TargetRewardEstimate estimate_target_reward(const PolicyModel& policy, const RewardScorers& scorers,
                                            const Action& model_action, const ConversationState& model_state,
                                            std::uint64_t seed) {
  if (model_action.author() != model_state.next_speaker()) {
    throw Error(ErrorCode::AuthorMismatch, "model action must be authored by the state's next speaker");
  }
  Exchange exchange = run_exchange(policy, model_state, model_action, seed);
  Exchange switched = switch_exchange(exchange);
  RewardBreakdown reward = target_reward(policy, scorers, switched);
  return TargetRewardEstimate{reward, std::move(exchange.target_response), std::move(switched)};
}

std::uint64_t target_sample_seed(std::uint64_t base_seed, std::size_t sample) {
  return mix_seed(base_seed, {0x7A, sample});
}

ObjectiveEstimate summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "cannot summarize zero samples");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : values) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double se = 0.0;
  if (n > 1) se = std::sqrt(m2 / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  return ObjectiveEstimate{mean, se, n};
}

namespace {

// Evaluates fn(0..n-1) into a vector, optionally across workers. Each index is
// computed independently so the result does not depend on scheduling.
template <typename Fn>
std::vector<double> evaluate_samples(std::size_t n, std::size_t workers, Fn fn) {
  std::vector<double> values(n);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t s = 0; s < n; ++s) values[s] = fn(s);
    return values;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t s = w; s < n; s += workers) values[s] = fn(s);
    }));
  }
  for (auto& j : jobs) j.get();
  return values;
}

void require_samples(std::size_t samples) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "objective estimate needs at least one sample");
}

}  // namespace

ObjectiveEstimate kindness_objective_estimate(const PolicyModel& policy, const RewardScorers& scorers,
                                              const ConversationState& model_state, const Action& candidate,
                                              std::size_t samples, std::uint64_t seed, std::size_t workers) {
  require_samples(samples);
  const auto values = evaluate_samples(samples, workers, [&](std::size_t s) {
    return estimate_target_reward(policy, scorers, candidate, model_state, target_sample_seed(seed, s))
        .reward.total();
  });
  return summarize(values);
}

KindChoice select_kind_action(const PolicyModel& policy, const RewardScorers& scorers,
                              const ConversationState& model_state, std::span<const Action> candidates,
                              std::size_t samples, std::uint64_t seed, std::size_t workers) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate actions to choose from");
  std::vector<ObjectiveEstimate> estimates;
  estimates.reserve(candidates.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    estimates.push_back(
        kindness_objective_estimate(policy, scorers, model_state, candidates[c], samples, seed, workers));
    if (estimates[c].mean > estimates[best].mean) best = c;
  }
  const ObjectiveEstimate chosen = estimates[best];
  return KindChoice{best, candidates[best], chosen, std::move(estimates)};
}

KindChoice select_kind_action(const PolicyModel& policy, const RewardScorers& scorers,
                              const ConversationState& model_state, std::size_t samples, std::uint64_t seed,
                              std::size_t workers) {
  const auto candidates = policy.candidates(model_state);
  return select_kind_action(policy, scorers, model_state, candidates, samples, seed, workers);
}

double brute_force_objective(const PolicyModel& policy, const RewardScorers& scorers,
                             const ConversationState& model_state, const Action& candidate) {
  if (!policy.enumerable()) {
    throw Error(ErrorCode::NotEnumerable, std::string(policy.kind()) + " policy is not enumerable");
  }
  const ConversationState after = append_action(model_state, candidate);
  // Target's view of the model's turn; the same for every reply.
  const ConversationState seen_state = switch_perspective(model_state);
  const Action seen_action = switch_perspective_action(candidate, model_state);
  const double irf = scorers.intrinsic->score(seen_action, seen_state, policy);
  const ConversationState reply_state = switch_perspective(after);

  double expectation = 0.0;
  for (const Action& reply : policy.candidates(after)) {
    const double lp = policy.log_prob(after, reply);
    if (lp == -std::numeric_limits<double>::infinity()) continue;
    const double ext = scorers.extrinsic->score(switch_perspective_action(reply, after), reply_state);
    expectation += std::exp(lp) * combined_reward(ext, scorers.intrinsic_weight * irf).total();
  }
  return expectation;
}

double expected_objective_exact(const PolicyModel& policy, const RewardScorers& scorers,
                                const ConversationState& model_state) {
  if (!policy.enumerable()) {
    throw Error(ErrorCode::NotEnumerable, std::string(policy.kind()) + " policy is not enumerable");
  }
  double expectation = 0.0;
  for (const Action& a : policy.candidates(model_state)) {
    const double lp = policy.log_prob(model_state, a);
    if (lp == -std::numeric_limits<double>::infinity()) continue;
    expectation += std::exp(lp) * brute_force_objective(policy, scorers, model_state, a);
  }
  return expectation;
}

ObjectiveEstimate policy_objective_estimate(const PolicyModel& policy, const RewardScorers& scorers,
                                            const ConversationState& model_state, std::size_t samples,
                                            std::uint64_t seed, std::size_t workers) {
  require_samples(samples);
  const auto values = evaluate_samples(samples, workers, [&](std::size_t s) {
    const Action a = policy.generate(model_state, mix_seed(seed, {0x4D, s}));
    return estimate_target_reward(policy, scorers, a, model_state, target_sample_seed(seed, s)).reward.total();
  });
  return summarize(values);
}

PromptDataset::PromptDataset(std::vector<ConversationState> prompts, std::vector<std::string> ids)
    : prompts_(std::move(prompts)), ids_(std::move(ids)) {
  validate();
}

PromptDataset::PromptDataset(std::vector<ConversationState> prompts) : prompts_(std::move(prompts)) {
  ids_.reserve(prompts_.size());
  for (std::size_t i = 0; i < prompts_.size(); ++i) ids_.push_back("prompt-" + std::to_string(i));
  validate();
}

void PromptDataset::validate() const {
  if (ids_.size() != prompts_.size()) {
    throw Error(ErrorCode::InvalidDataset, "prompt and id counts differ");
  }
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    if (prompts_[i].empty()) {
      throw Error(ErrorCode::InvalidDataset, "prompt " + std::to_string(i) + " has no target message");
    }
  }
}

namespace {

enum class RewardView { Target, Own };

TrainingResult train_loop(const TemplatePolicy& initial, const PromptDataset& dataset, const RewardScorers& scorers,
                          const TrainingConfig& config, RewardView view) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training needs at least one prompt");
  if (config.horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (initial.greedy()) throw Error(ErrorCode::NotTrainable, "greedy template policy cannot be trained");
  if (!(config.baseline_decay >= 0.0 && config.baseline_decay <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "baseline decay must lie in [0, 1]");
  }

  TrainingResult result{initial, {}};
  result.records.reserve(config.epochs * dataset.size() * config.horizon);
  TemplatePolicy& policy = result.policy;
  double baseline = 0.0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t p = 0; p < dataset.size(); ++p) {
      ConversationState state = dataset[p];
      for (std::size_t h = 0; h < config.horizon; ++h, ++step) {
        const double objective = config.exact_objective
                                     ? expected_objective_exact(policy, scorers, state)
                                     : std::numeric_limits<double>::quiet_NaN();

        // The same policy plays both seats.
        const Action model_action = policy.generate(state, mix_seed(config.seed, {step, 0}));
        Exchange exchange = run_exchange(policy, state, model_action, mix_seed(config.seed, {step, 1}));
        Exchange switched = switch_exchange(exchange);
        const RewardBreakdown reward =
            view == RewardView::Target ? target_reward(policy, scorers, switched) : own_reward(policy, scorers, exchange);

        double advantage = reward.total();
        if (config.use_baseline) {
          advantage -= baseline;
          baseline = config.baseline_decay * baseline + (1.0 - config.baseline_decay) * reward.total();
        }
        const TrainingExample example =
            config.update_on == UpdateOn::Own
                ? TrainingExample{exchange.model_state, exchange.model_action, advantage}
                : TrainingExample{switched.target_state, switched.target_response, advantage};
        policy = policy.update(std::span(&example, 1), config.learning_rate);

        result.records.push_back(TrainingStepRecord{step, p, exchange.model_action, exchange.target_response, reward,
                                                    config.exact_objective ? objective : reward.total(), exchange,
                                                    switched});
        state = append_action(exchange.target_state, exchange.target_response);
      }
    }
  }
  return result;
}

}  // namespace

TrainingResult train_naive_kindness(const TemplatePolicy& policy, const PromptDataset& dataset,
                                    const RewardScorers& scorers, const TrainingConfig& config) {
  return train_loop(policy, dataset, scorers, config, RewardView::Target);
}

TrainingResult train_selfish_baseline(const TemplatePolicy& policy, const PromptDataset& dataset,
                                      const RewardScorers& scorers, const TrainingConfig& config) {
  return train_loop(policy, dataset, scorers, config, RewardView::Own);
}

}  // namespace kindling
