#include "kindling/harness/commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "kindling/error.hpp"
#include "kindling/harness/ingest.hpp"
#include "kindling/harness/run_config.hpp"
#include "kindling/kindness.hpp"
#include "kindling/random.hpp"

namespace kindling::harness {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Parse:
    case ErrorCode::InvalidDataset:
    case ErrorCode::EmptyDataset:
    case ErrorCode::NotEnumerable:
    case ErrorCode::NotTrainable:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

template <typename Fn>
int guarded(Streams io, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    io.err << "kindling: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    io.err << "kindling: " << e.what() << '\n';
    return kExitRuntime;
  }
}

RunConfig load_with_overrides(const CommandOptions& options) {
  RunConfig cfg = load_run_config(options.config);
  if (options.seed) cfg.seed = *options.seed;
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  return cfg;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
  return out;
}

void write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  auto out = open_output(dir, name);
  out << text << '\n';
}

std::vector<Action> candidates_for(const RunConfig& cfg, const PolicyModel& policy, const ConversationState& state) {
  if (cfg.objective.candidates.empty()) return policy.candidates(state);
  std::vector<Action> out;
  for (const auto& c : cfg.objective.candidates) out.push_back(make_action(state, c));
  return out;
}

ordered_json metrics_line(const TrainingStepRecord& r) {
  ordered_json j;
  j["step"] = r.step;
  j["prompt_index"] = r.prompt_index;
  j["model_action"] = r.model_action.content();
  j["target_response"] = r.target_response.content();
  j["reward_ext"] = r.reward.extrinsic();
  j["reward_int"] = r.reward.intrinsic();
  j["reward_total"] = r.reward.total();
  j["objective_estimate"] = r.objective_estimate;
  return j;
}

double mean_exact_objective(const PolicyModel& policy, const RewardScorers& scorers, const PromptDataset& dataset) {
  double sum = 0.0;
  for (const auto& prompt : dataset.prompts()) sum += expected_objective_exact(policy, scorers, prompt);
  return sum / static_cast<double>(dataset.size());
}

}  // namespace

int cmd_train(const CommandOptions& options, Streams io) {
  return guarded(io, [&] {
    const auto started = std::chrono::steady_clock::now();
    const RunConfig cfg = load_with_overrides(options);
    const Runtime rt = build_runtime(cfg, options.checkpoint);
    if (!rt.template_policy) {
      throw Error(ErrorCode::NotTrainable, std::string(rt.policy->kind()) +
                                               " policy is generate-only; training needs a template policy");
    }
    const PromptDataset dataset = ingest_prompts(cfg.dataset_path, options.lenient).dataset;
    const TrainingConfig tc = training_config(cfg);

    const TrainingResult result = options.baseline
                                      ? train_selfish_baseline(*rt.template_policy, dataset, rt.scorers, tc)
                                      : train_naive_kindness(*rt.template_policy, dataset, rt.scorers, tc);

    write_text(cfg.output_dir, "checkpoint_initial.json", to_checkpoint_json(*rt.template_policy));
    write_text(cfg.output_dir, "checkpoint.json", to_checkpoint_json(result.policy));
    {
      auto metrics = open_output(cfg.output_dir, "metrics.jsonl");
      for (const auto& r : result.records) metrics << metrics_line(r).dump() << '\n';
    }
    {
      auto transcripts = open_output(cfg.output_dir, "transcripts.jsonl");
      for (const auto& r : result.records) {
        const std::string conv_id = dataset.ids()[r.prompt_index] + "#" + std::to_string(r.step);
        write_transcript(transcripts, conv_id, append_action(r.exchange.target_state, r.target_response));
      }
    }

    const double final_objective = mean_exact_objective(result.policy, rt.scorers, dataset);
    const double initial_objective = mean_exact_objective(*rt.template_policy, rt.scorers, dataset);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;

    io.out << (options.baseline ? "selfish baseline" : "naive kindness") << " training\n";
    io.out << "steps: " << result.records.size() << '\n';
    io.out << "mean objective: initial " << initial_objective << ", final " << final_objective << '\n';
    for (std::size_t p = 0; p < dataset.size(); ++p) {
      const auto probs = result.policy.probabilities(dataset[p]);
      io.out << "prompt " << p << " (" << dataset.ids()[p] << "):";
      for (std::size_t k = 0; k < probs.size(); ++k) {
        io.out << " P(" << result.policy.templates()[k] << ")=" << std::fixed << std::setprecision(4) << probs[k];
      }
      io.out << std::defaultfloat << '\n';
    }
    io.out << "wall time: " << wall.count() << " s\n";
    io.out << "outputs: " << cfg.output_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_evaluate(const CommandOptions& options, Streams io) {
  return guarded(io, [&] {
    const RunConfig cfg = load_with_overrides(options);
    const Runtime rt = build_runtime(cfg, options.checkpoint);
    const PromptDataset dataset = ingest_prompts(cfg.dataset_path, options.lenient).dataset;
    const PolicyModel& policy = *rt.policy;

    auto out = open_output(cfg.output_dir, "evaluation.jsonl");
    double sum = 0.0;
    for (std::size_t p = 0; p < dataset.size(); ++p) {
      const std::uint64_t seed = mix_seed(cfg.seed, {p});
      const ObjectiveEstimate est = policy_objective_estimate(policy, rt.scorers, dataset[p], cfg.objective.samples,
                                                              seed, cfg.objective.workers);
      const auto candidates = candidates_for(cfg, policy, dataset[p]);
      const KindChoice choice = select_kind_action(policy, rt.scorers, dataset[p], candidates, cfg.objective.samples,
                                                   seed, cfg.objective.workers);
      ordered_json j;
      j["prompt_index"] = p;
      j["conv_id"] = dataset.ids()[p];
      j["objective_mean"] = est.mean;
      j["objective_stderr"] = est.standard_error;
      j["samples"] = est.samples;
      j["objective_exact"] =
          policy.enumerable() ? ordered_json(expected_objective_exact(policy, rt.scorers, dataset[p])) : ordered_json();
      j["kind_action"] = choice.action.content();
      j["kind_objective"] = choice.estimate.mean;
      out << j.dump() << '\n';
      sum += est.mean;
      io.out << "prompt " << p << " (" << dataset.ids()[p] << "): objective " << est.mean << " +/- "
             << est.standard_error << ", kind action \"" << choice.action.content() << "\"\n";
    }
    io.out << "mean objective: " << sum / static_cast<double>(dataset.size()) << '\n';
    return kExitOk;
  });
}

int cmd_oracle(const CommandOptions& options, Streams io) {
  return guarded(io, [&] {
    const RunConfig cfg = load_with_overrides(options);
    const Runtime rt = build_runtime(cfg, options.checkpoint);
    const PolicyModel& policy = *rt.policy;
    if (!policy.enumerable()) {
      throw Error(ErrorCode::NotEnumerable, std::string(policy.kind()) + " policy is not enumerable");
    }
    const PromptDataset dataset = ingest_prompts(cfg.dataset_path, options.lenient).dataset;

    auto out = open_output(cfg.output_dir, "oracle.jsonl");
    double max_deviation = 0.0;
    bool all_within = true;
    for (std::size_t p = 0; p < dataset.size(); ++p) {
      const auto candidates = candidates_for(cfg, policy, dataset[p]);
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double exact = brute_force_objective(policy, rt.scorers, dataset[p], candidates[c]);
        const ObjectiveEstimate mc =
            kindness_objective_estimate(policy, rt.scorers, dataset[p], candidates[c], cfg.objective.samples,
                                        mix_seed(cfg.seed, {p}), cfg.objective.workers);
        const double deviation = std::abs(mc.mean - exact);
        const bool within = deviation <= 3.0 * mc.standard_error;
        all_within = all_within && within;
        max_deviation = std::max(max_deviation, deviation);

        ordered_json j;
        j["prompt_index"] = p;
        j["candidate"] = candidates[c].content();
        j["exact"] = exact;
        j["mc_mean"] = mc.mean;
        j["mc_stderr"] = mc.standard_error;
        j["samples"] = mc.samples;
        j["deviation"] = deviation;
        j["within_3_stderr"] = within;
        out << j.dump() << '\n';
        io.out << "prompt " << p << " candidate \"" << candidates[c].content() << "\": exact " << exact << ", mc "
               << mc.mean << " +/- " << mc.standard_error << (within ? "" : "  [OUTSIDE 3 stderr]") << '\n';
      }
    }
    io.out << "max abs deviation: " << max_deviation << '\n';
    if (!all_within) {
      io.err << "kindling: Monte-Carlo estimate outside 3 standard errors of the exact objective\n";
      return kExitRuntime;
    }
    return kExitOk;
  });
}

int cmd_chat(const CommandOptions& options, Streams io) {
  return guarded(io, [&] {
    const RunConfig cfg = load_with_overrides(options);
    const Runtime rt = build_runtime(cfg, options.checkpoint);
    const PolicyModel& policy = *rt.policy;
    const ParticipantId human("human");
    const ParticipantId model(kDefaultModelId);

    auto transcript = open_output(cfg.output_dir, "chat_transcript.jsonl");
    ConversationState state = ConversationState::start(human, model);
    std::string line;
    while (true) {
      io.out << "you> " << std::flush;
      if (!std::getline(io.in, line)) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == "/quit") break;
      if (line.find_first_not_of(" \t") == std::string::npos) continue;

      const Action said = make_action(state, line);
      state = append_action(state, said);
      transcript << to_jsonl_line({"chat", said.message.turn, said.author().str(), said.content()}) << '\n';

      const std::uint64_t turn_seed = mix_seed(cfg.seed, {state.size()});
      const Action reply = policy.generate(state, turn_seed);
      if (options.show_rewards) {
        try {
          const auto est = estimate_target_reward(policy, rt.scorers, reply, state, mix_seed(turn_seed, {1}));
          io.out << "[estimated reward for you] extrinsic " << est.reward.extrinsic() << ", intrinsic "
                 << est.reward.intrinsic() << ", total " << est.reward.total() << '\n';
        } catch (const Error& e) {
          io.out << "[estimated reward unavailable: " << e.detail() << "]\n";
        }
      }
      state = append_action(state, reply);
      transcript << to_jsonl_line({"chat", reply.message.turn, reply.author().str(), reply.content()}) << '\n'
                 << std::flush;
      io.out << "model> " << reply.content() << '\n';
    }
    io.out << '\n';
    return kExitOk;
  });
}

int cmd_ingest_check(const CommandOptions& options, Streams io) {
  return guarded(io, [&] {
    const RunConfig cfg = load_with_overrides(options);
    const IngestResult result = ingest_prompts(cfg.dataset_path, options.lenient);
    for (const auto& d : result.diagnostics) io.err << "skipped " << d << '\n';
    io.out << result.dataset.size() << " prompts OK";
    if (!result.diagnostics.empty()) io.out << ", " << result.diagnostics.size() << " skipped";
    io.out << '\n';
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Kindness self-play training harness", "kindling"};
  app.require_subcommand(1);

  CommandOptions options;
  std::string config;
  std::string checkpoint;
  std::string output_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--output-dir", output_dir, "Override the configured output directory");
    sub->add_flag("--lenient", options.lenient, "Skip invalid dataset lines instead of failing");
  };

  auto* train = app.add_subcommand("train", "Train with naive kindness (or the selfish baseline)");
  add_common(train);
  train->add_option("--checkpoint", checkpoint, "Initial policy checkpoint");
  train->add_flag("--baseline", options.baseline, "Train the selfish baseline instead");

  auto* evaluate = app.add_subcommand("evaluate", "Estimate the kindness objective over the dataset");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "Policy checkpoint to evaluate");

  auto* oracle = app.add_subcommand("oracle", "Compare Monte-Carlo objective estimates with exact enumeration");
  add_common(oracle);
  oracle->add_option("--checkpoint", checkpoint, "Policy checkpoint");

  auto* chat = app.add_subcommand("chat", "Chat with the model; you play the target");
  add_common(chat);
  chat->add_option("--checkpoint", checkpoint, "Policy checkpoint");
  chat->add_flag("--show-rewards", options.show_rewards, "Show the model's estimate of your reward");

  auto* ingest = app.add_subcommand("ingest-check", "Validate the prompt dataset");
  add_common(ingest);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // argv[0]
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.err << "kindling: " << e.what() << '\n';
    return kExitConfig;
  }

  options.config = config;
  if (!checkpoint.empty()) options.checkpoint = checkpoint;
  if (!output_dir.empty()) options.output_dir = output_dir;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) options.seed = seed;
  }

  if (train->parsed()) return cmd_train(options, io);
  if (evaluate->parsed()) return cmd_evaluate(options, io);
  if (oracle->parsed()) return cmd_oracle(options, io);
  if (chat->parsed()) return cmd_chat(options, io);
  return cmd_ingest_check(options, io);
}

}  // namespace kindling::harness
