#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kindling/kindness.hpp"
#include "kindling/policy.hpp"
#include "kindling/reward.hpp"

namespace kindling::testing {

inline const ParticipantId kModel{"model"};
inline const ParticipantId kTarget{"target"};

// Conversation whose last message is the target's, with the model to speak.
inline ConversationState prompt_state(const std::vector<std::string>& contents) {
  // contents alternate, ending with the target.
  const bool model_first = contents.size() % 2 == 0;
  ConversationState s = ConversationState::start(model_first ? kModel : kTarget, model_first ? kTarget : kModel);
  for (const auto& c : contents) s = append_action(s, make_action(s, c));
  return s;
}

inline RewardScorers scorers(std::shared_ptr<const ExtrinsicScorer> ext, std::shared_ptr<const IntrinsicScorer> irf,
                             double intrinsic_weight = 1.0) {
  return RewardScorers{std::move(ext), std::move(irf), intrinsic_weight};
}

inline constexpr const char* kGive = "i give you my apple";
inline constexpr const char* kKeep = "i keep my apple";

// Receiving the gift is worth +3 to the receiver (intrinsic, on feedback);
// saying "keep" is worth +3 to the speaker (extrinsic, on its own message).
inline RewardScorers gift_scorers() {
  return scorers(std::make_shared<LexiconScorer>(std::map<std::string, double>{{"keep", 3.0}}),
                 std::make_shared<TableIrf>(std::map<std::string, double>{{kGive, 3.0}}));
}

inline TemplatePolicy gift_policy() { return TemplatePolicy({kGive, kKeep}, 1.0); }

inline PromptDataset gift_dataset() {
  return PromptDataset({prompt_state({"I am hungry today"}),
                        prompt_state({"hello there", "hi, how are you?", "could you spare some food?"})},
                       {"gift-0", "gift-1"});
}

inline TrainingConfig gift_training(std::uint64_t seed = 7) {
  TrainingConfig c;
  c.seed = seed;
  c.learning_rate = 0.1;
  c.epochs = 100;  // 2 prompts -> 200 steps
  return c;
}

// Random small enumerable world: K <= 4 single-word templates, random
// weights, lexicon over the templates and a table IRF.
struct RandomWorld {
  TemplatePolicy policy;
  RewardScorers scorers;
  ConversationState state;
};

inline RandomWorld random_world(std::mt19937_64& rng, bool deterministic, bool surprisal = false) {
  static const std::vector<std::string> words = {"alpha", "bravo", "charlie", "delta"};
  const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
  std::vector<std::string> templates(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(k));

  std::normal_distribution<double> weight(0.0, 1.0);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  WeightMatrix w(8, k);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < k; ++c) w(r, c) = weight(rng);

  std::map<std::string, double> lexicon;
  std::map<std::string, double> table;
  for (const auto& t : templates) {
    lexicon[t] = value(rng);
    table[t] = value(rng);
  }
  std::shared_ptr<const IntrinsicScorer> irf;
  if (surprisal) {
    irf = std::make_shared<SurprisalIrf>();
  } else {
    irf = std::make_shared<TableIrf>(table, value(rng));
  }
  const double temperature = deterministic ? 0.0 : std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  return RandomWorld{TemplatePolicy(templates, temperature, std::move(w)),
                     scorers(std::make_shared<LexiconScorer>(lexicon, value(rng)), irf),
                     prompt_state({templates[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)]})};
}

}  // namespace kindling::testing
