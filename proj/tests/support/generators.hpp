#pragma once

#include <random>
#include <string>
#include <vector>

#include "kindling/conversation.hpp"

namespace kindling::testing {

inline std::string random_words(std::mt19937_64& rng, std::size_t max_words) {
  static const std::vector<std::string> vocab = {"hi",   "hello", "thanks", "apple", "give", "keep", "yes",
                                                 "no",   "why",   "Sure!",  "ok,",   "food", "you",  "me",
                                                 "what", "idiot", "friend", "?",     "great", "pass"};
  std::uniform_int_distribution<std::size_t> count(0, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string out;
  for (std::size_t n = count(rng), i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += vocab[pick(rng)];
  }
  return out;
}

inline std::pair<ParticipantId, ParticipantId> random_pair(std::mt19937_64& rng) {
  static const std::vector<std::string> names = {"A", "B", "model", "target", "alice", "bob", "x y", "ü"};
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  const auto a = pick(rng);
  auto b = pick(rng);
  while (b == a) b = pick(rng);
  return {ParticipantId(names[a]), ParticipantId(names[b])};
}

// Valid alternating conversation of `length` messages.
inline ConversationState random_conversation(std::mt19937_64& rng, std::size_t length) {
  auto [first, second] = random_pair(rng);
  ConversationState state = ConversationState::start(first, second);
  for (std::size_t i = 0; i < length; ++i) state = append_action(state, make_action(state, random_words(rng, 5)));
  return state;
}

inline ConversationState random_conversation(std::mt19937_64& rng) {
  return random_conversation(rng, std::uniform_int_distribution<std::size_t>(0, 12)(rng));
}

}  // namespace kindling::testing
