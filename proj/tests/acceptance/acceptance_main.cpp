// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "kindling/error.hpp"
#include "kindling/harness/commands.hpp"
#include "kindling/harness/ingest.hpp"
#include "kindling/harness/run_config.hpp"
#include "kindling/kindness.hpp"
#include "kindling/remote_client.hpp"
#include "support/generators.hpp"
#include "support/mock_server.hpp"
#include "support/remote_world.hpp"
#include "support/worlds.hpp"

namespace {

using namespace kindling;
namespace fs = std::filesystem;

struct Outcome {
  bool ok;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> check;
};

Outcome involution() {
  std::mt19937_64 rng(1001);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_conversation(rng);
    if (switch_perspective(switch_perspective(s)) == s) ++ok;
  }
  return {ok == 1000, std::to_string(ok) + "/1000 conversations restored"};
}

Outcome structural() {
  std::mt19937_64 rng(1002);
  int prefix_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_conversation(rng);
    const Action a = make_action(s, testing::random_words(rng, 6));
    const auto t = append_action(s, a);
    const bool ok = t.size() == s.size() + 1 &&
                    std::equal(s.messages().begin(), s.messages().end(), t.messages().begin()) &&
                    t.messages().back() == a.message && t.next_speaker() == s.other(a.author());
    prefix_ok += ok;
  }
  int additive_ok = 0;
  std::uniform_real_distribution<double> value(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double e = value(rng), n = value(rng);
    const RewardBreakdown r = combined_reward(e, n);
    additive_ok += r.total() == r.extrinsic() + r.intrinsic();
  }
  for (int i = 0; i < 500; ++i) {
    const auto world = testing::random_world(rng, false, i % 2 == 0);
    const auto est = estimate_target_reward(world.policy, world.scorers, world.policy.generate(world.state, i),
                                            world.state, i + 1);
    additive_ok += est.reward.total() == est.reward.extrinsic() + est.reward.intrinsic();
  }
  return {prefix_ok == 1000 && additive_ok == 1000,
          "append-prefix " + std::to_string(prefix_ok) + "/1000, additivity " + std::to_string(additive_ok) + "/1000"};
}

Outcome softmax_policy() {
  std::mt19937_64 rng(1003);
  std::normal_distribution<double> weight(0.0, 2.0);
  double worst_norm = 0.0;
  double worst_rel = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 2 + rng() % 5;
    std::vector<std::string> templates;
    for (std::size_t j = 0; j < k; ++j) templates.push_back("t" + std::to_string(j));
    WeightMatrix w(8, k);
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < k; ++c) w(r, c) = weight(rng);
    const TemplatePolicy policy(templates, 0.25 + (rng() % 100) / 40.0, w);
    const auto s = testing::random_conversation(rng, 1 + rng() % 8);

    for (std::size_t f = 0; f < 8; ++f) {
      double sum = 0.0;
      for (double p : policy.probabilities_for_feature(f)) sum += p;
      worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
    }

    // The REINFORCE step divided by lr * advantage is the analytic gradient.
    const Action a = make_action(s, templates[rng() % k]);
    const double advantage = 0.5 + std::abs(weight(rng));
    const double lr = 1e-3;
    const TrainingExample example{s, a, advantage};
    const WeightMatrix stepped = policy.update(std::span(&example, 1), lr).weights();
    const double h = 1e-6;
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        WeightMatrix up = w, down = w;
        up(r, c) += h;
        down(r, c) -= h;
        const double numeric =
            (policy.with_weights(up).log_prob(s, a) - policy.with_weights(down).log_prob(s, a)) / (2 * h);
        const double analytic = (stepped(r, c) - w(r, c)) / (lr * advantage);
        diff2 += (numeric - analytic) * (numeric - analytic);
        norm2 += numeric * numeric;
      }
    }
    worst_rel = std::max(worst_rel, std::sqrt(diff2 / norm2));
  }
  std::ostringstream d;
  d << "max |sum p - 1| = " << worst_norm << ", max gradient rel err = " << worst_rel << " over 100 instances";
  return {worst_norm <= 1e-9 && worst_rel <= 1e-4, d.str()};
}

Outcome oracle_agreement() {
  std::mt19937_64 rng(1004);
  int within = 0;
  double worst_sigmas = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto world = testing::random_world(rng, false, i % 2 == 1);
    const auto candidates = world.policy.candidates(world.state);
    const Action c = candidates[rng() % candidates.size()];
    const double exact = brute_force_objective(world.policy, world.scorers, world.state, c);
    const auto mc = kindness_objective_estimate(world.policy, world.scorers, world.state, c, 10000, rng());
    const double deviation = std::abs(mc.mean - exact);
    if (deviation <= 3.0 * mc.standard_error) ++within;
    if (mc.standard_error > 0) worst_sigmas = std::max(worst_sigmas, deviation / mc.standard_error);
  }
  int exact_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const auto world = testing::random_world(rng, true);
    bool ok = true;
    for (const auto& c : world.policy.candidates(world.state)) {
      const auto mc = kindness_objective_estimate(world.policy, world.scorers, world.state, c, 100, rng());
      ok = ok && mc.mean == brute_force_objective(world.policy, world.scorers, world.state, c) &&
           mc.standard_error == 0.0;
    }
    exact_ok += ok;
  }
  std::ostringstream d;
  d << within << "/50 stochastic worlds within 3 stderr (worst " << worst_sigmas << " stderr), " << exact_ok
    << "/50 deterministic worlds exact";
  return {within == 50 && exact_ok == 50, d.str()};
}

std::string dump_records(const TrainingResult& r) {
  std::string out;
  for (const auto& rec : r.records) {
    out += std::to_string(rec.step) + ' ' + rec.model_action.content() + '|' + rec.target_response.content() + ' ';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a %a\n", rec.reward.total(), rec.objective_estimate);
    out += buf;
  }
  return out;
}

Outcome separation() {
  const auto cfg = harness::load_run_config(testing::kSourceDir / "configs" / "gift_world.json");
  const auto rt = harness::build_runtime(cfg);
  const auto dataset = harness::ingest_prompts(cfg.dataset_path).dataset;
  TrainingConfig tc = harness::training_config(cfg);
  tc.seed = 7;
  tc.learning_rate = 0.1;

  const auto kind = train_naive_kindness(*rt.template_policy, dataset, rt.scorers, tc);
  const auto kind2 = train_naive_kindness(*rt.template_policy, dataset, rt.scorers, tc);
  const auto selfish = train_selfish_baseline(*rt.template_policy, dataset, rt.scorers, tc);
  const auto selfish2 = train_selfish_baseline(*rt.template_policy, dataset, rt.scorers, tc);

  const std::size_t give = *kind.policy.template_index("i give you my apple");
  const std::size_t keep = *kind.policy.template_index("i keep my apple");
  double min_give = 1.0, min_keep = 1.0;
  for (const auto& prompt : dataset.prompts()) {
    min_give = std::min(min_give, kind.policy.probabilities(prompt)[give]);
    min_keep = std::min(min_keep, selfish.policy.probabilities(prompt)[keep]);
  }
  const bool reproducible =
      to_checkpoint_json(kind.policy) == to_checkpoint_json(kind2.policy) &&
      to_checkpoint_json(selfish.policy) == to_checkpoint_json(selfish2.policy) &&
      dump_records(kind) == dump_records(kind2) && dump_records(selfish) == dump_records(selfish2);
  const bool steps_ok = kind.records.size() <= 200 && selfish.records.size() <= 200;

  std::ostringstream d;
  d << "kind min P(give) = " << min_give << ", selfish min P(keep) = " << min_keep << ", "
    << kind.records.size() << " steps, re-run " << (reproducible ? "identical" : "DIFFERENT");
  return {min_give > 0.9 && min_keep > 0.9 && reproducible && steps_ok, d.str()};
}

Outcome argmax_invariance() {
  std::mt19937_64 rng(1006);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-50.0, 50.0);
  int ok = 0;
  for (int i = 0; i < 20; ++i) {
    const auto world = testing::random_world(rng, true);
    const std::size_t base = select_kind_action(world.policy, world.scorers, world.state, 1, 0).index;
    const auto& lex = dynamic_cast<const LexiconScorer&>(*world.scorers.extrinsic);
    const auto& table = dynamic_cast<const TableIrf&>(*world.scorers.intrinsic);
    bool same = true;
    for (int j = 0; j < 5; ++j) {
      const double a = scale(rng), b = shift(rng);
      std::map<std::string, double> lex2, table2;
      for (const auto& [key, v] : lex.entries()) lex2[key] = a * v + b;
      for (const auto& [key, v] : table.entries()) table2[key] = a * v + b;
      const RewardScorers rescaled{std::make_shared<LexiconScorer>(lex2, a * lex.default_score() + b),
                                   std::make_shared<TableIrf>(table2, a * table.default_value() + b), 1.0};
      same = same && select_kind_action(world.policy, rescaled, world.state, 1, 0).index == base;
    }
    ok += same;
  }
  return {ok == 20, std::to_string(ok) + "/20 worlds keep their choice under 5 rescalings each"};
}

class TracingIrf final : public IntrinsicScorer {
 public:
  double score(const Action& feedback, const ConversationState&, const PolicyModel&) const override {
    seen.push_back(feedback);
    return 0.0;
  }
  mutable std::vector<Action> seen;
};

Outcome time_shift() {
  auto tracing = std::make_shared<TracingIrf>();
  const RewardScorers sc{testing::gift_scorers().extrinsic, tracing, 1.0};
  TrainingConfig tc = testing::gift_training();
  tc.epochs = 10;
  tc.exact_objective = false;
  const auto result = train_naive_kindness(testing::gift_policy(), testing::gift_dataset(), sc, tc);
  bool ok = tracing->seen.size() == result.records.size();
  std::size_t on_model = 0, on_reply = 0;
  for (std::size_t i = 0; ok && i < result.records.size(); ++i) {
    on_model += tracing->seen[i] == result.records[i].switched.model_action;
    on_reply += tracing->seen[i] == result.records[i].switched.target_response;
  }
  ok = ok && on_model == result.records.size() && on_reply == 0;
  return {ok, std::to_string(tracing->seen.size()) + " IRF calls: " + std::to_string(on_model) +
                  " on switched model action, " + std::to_string(on_reply) + " on switched target reply"};
}

template <typename Fn>
std::optional<ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

Outcome remote_wire() {
  using testing::completion_body;
  std::vector<std::string> failures;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  const auto state = testing::golden_state();

  {
    testing::MockChatServer server;
    server.reply_with("ok");
    const auto cfg = testing::golden_config(server.base_url());
    remote_generate(cfg, state, testing::kModel);
    remote_generate(cfg, state, testing::kModel);
    const auto golden = testing::canonical_fixture("remote_generate_request.json");
    const auto got = server.received();
    expect(got.size() == 2 && canonical_json(nlohmann::json::parse(got[0].body)) == golden, "golden body");
    expect(got.size() == 2 && got[0].body == got[1].body, "reproducible body");
    expect(!got.empty() && got[0].authorization == "Bearer test-key", "bearer header");
  }
  {
    testing::MockChatServer server;
    server.script({{500, "x"}, {500, "x"}, {200, completion_body("fine")}});
    auto cfg = testing::golden_config(server.base_url());
    cfg.backoff_base_seconds = 0.5;
    cfg.backoff_factor = 2.0;
    const bool ok = remote_generate(cfg, state, testing::kModel).content() == "fine";
    expect(ok && server.attempts() == 3, "500,500,200 in 3 attempts");
  }
  {
    testing::MockChatServer server;
    server.script({{200, R"({"id":"x"})"}});
    expect(error_of([&] { remote_generate(testing::golden_config(server.base_url()), state, testing::kModel); }) ==
               ErrorCode::MalformedResponse,
           "missing choices");
  }
  {
    testing::MockChatServer server;
    server.script({{401, "{}"}});
    expect(error_of([&] { remote_generate(testing::golden_config(server.base_url()), state, testing::kModel); }) ==
                   ErrorCode::AuthFailure &&
               server.attempts() == 1,
           "401 not retried");
  }
  {
    testing::MockChatServer server;
    server.script({{200, completion_body("late"), std::chrono::milliseconds(400)}});
    auto cfg = testing::golden_config(server.base_url());
    cfg.timeout_seconds = 0.1;
    cfg.max_retries = 1;
    expect(error_of([&] { remote_generate(cfg, state, testing::kModel); }) == ErrorCode::Timeout &&
               server.attempts() == 2,
           "timeout retried then reported");
  }
  {
    testing::MockChatServer server;
    const RemoteClient client(testing::golden_config(server.base_url()));
    const Action a = make_action(state, "here you go");
    server.reply_with("Score: 0.8");
    const bool parsed = remote_score(client, RubricConfig{}, a, state) == 0.8;
    server.reply_with("-3");
    const bool clamped = remote_score(client, RubricConfig{}, a, state) == 0.0;
    server.reply_with("great answer!");
    const bool unparsable =
        error_of([&] { remote_score(client, RubricConfig{}, a, state); }) == ErrorCode::Unparsable;
    expect(parsed && clamped && unparsable, "remote score parse/clamp");
  }
  {
    const std::string sentinel = "sk-acceptance-sentinel-5e1d";
    const testing::ScopedEnv env(std::string(kApiKeyEnv).c_str(), sentinel);
    testing::MockChatServer server;
    server.reply_with("0.5");
    const auto dir = testing::fresh_temp_dir("acceptance-secrets");
    const auto config = testing::write_remote_run_config(dir, server.base_url());
    std::ostringstream out, err;
    std::istringstream in("hello\n/quit\n");
    const harness::Streams io{in, out, err};
    const int eval = harness::run_cli({"kindling", "evaluate", "--config", config.string()}, io);
    const int chat = harness::run_cli({"kindling", "chat", "--config", config.string(), "--show-rewards"}, io);
    const int train = harness::run_cli({"kindling", "train", "--config", config.string()}, io);
    bool clean = out.str().find(sentinel) == std::string::npos && err.str().find(sentinel) == std::string::npos;
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      ++files;
      clean = clean && testing::read_text(entry.path()).find(sentinel) == std::string::npos;
    }
    const auto received = server.received();
    const bool key_sent = !received.empty() && received[0].authorization == "Bearer " + sentinel;
    expect(eval == 0 && chat == 0 && train == 1 && files >= 3 && key_sent && clean, "sentinel key hygiene");
    fs::remove_all(dir);
  }

  std::string detail = "golden, retry, error paths, secrets";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

Outcome end_to_end() {
  const auto dir = testing::fresh_temp_dir("acceptance-e2e");
  const std::string config = (testing::kSourceDir / "configs" / "gift_world.json").string();
  std::istringstream in;
  std::ostringstream out, err;
  const harness::Streams io{in, out, err};
  const int a = harness::run_cli(
      {"kindling", "train", "--config", config, "--seed", "7", "--output-dir", (dir / "a").string()}, io);
  const int b = harness::run_cli(
      {"kindling", "train", "--config", config, "--seed", "7", "--output-dir", (dir / "b").string()}, io);
  const std::string metrics_a = testing::read_text(dir / "a" / "metrics.jsonl");
  const bool metrics = !metrics_a.empty() && metrics_a == testing::read_text(dir / "b" / "metrics.jsonl");
  const std::string ckpt_a = testing::read_text(dir / "a" / "checkpoint.json");
  const bool checkpoint = !ckpt_a.empty() && ckpt_a == testing::read_text(dir / "b" / "checkpoint.json");
  fs::remove_all(dir);
  std::ostringstream d;
  d << "exit codes " << a << "," << b << "; metrics " << (metrics ? "identical" : "DIFFERENT") << " ("
    << metrics_a.size() << " bytes); checkpoint " << (checkpoint ? "identical" : "DIFFERENT");
  return {a == 0 && b == 0 && metrics && checkpoint, d.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "perspective-switch involution", 1.0, involution},
      {2, "append-prefix and reward additivity", 1.0, structural},
      {3, "softmax normalization and REINFORCE gradient", 5.0, softmax_policy},
      {4, "Monte-Carlo vs brute-force oracle agreement", 30.0, oracle_agreement},
      {5, "kind vs selfish separation in the gift world", 10.0, separation},
      {6, "argmax invariance under affine rescaling", 5.0, argmax_invariance},
      {7, "IRF time-shift bookkeeping", 1.0, time_shift},
      {8, "remote wire conformance", 5.0, remote_wire},
      {9, "end-to-end training determinism", 10.0, end_to_end},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    const bool in_time = elapsed.count() < c.limit_seconds;
    const bool pass = outcome.ok && in_time;
    failed += !pass;
    std::printf("%s %d %s: %s; %.3f s (limit %g s%s)\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(),
                outcome.detail.c_str(), elapsed.count(), c.limit_seconds, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
