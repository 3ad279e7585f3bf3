#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kindling/kindness.hpp"
#include "kindling/policy.hpp"
#include "kindling/remote_client.hpp"
#include "kindling/reward.hpp"

namespace kindling::harness {

enum class PolicyKind { Template, Echo, Remote };
enum class IrfKind { Surprisal, Null, Table };
enum class ExtrinsicKind { Lexicon, Remote };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Template;
  std::vector<std::string> templates;
  double temperature = 1.0;
  std::size_t feature_buckets = kDefaultFeatureBuckets;
  std::optional<std::filesystem::path> checkpoint;  // initial weights
  RemoteEndpointConfig remote;
};

struct RewardSpec {
  ExtrinsicKind extrinsic = ExtrinsicKind::Lexicon;
  std::optional<std::filesystem::path> lexicon_path;  // empty lexicon when absent
  IrfKind irf = IrfKind::Surprisal;
  std::optional<std::filesystem::path> irf_table_path;
  double intrinsic_weight = 1.0;
  RemoteEndpointConfig remote_scorer;
  RubricConfig rubric;
};

struct TrainingSpec {
  double learning_rate = 0.1;
  std::size_t epochs = 1;
  double baseline_decay = 0.9;
  bool use_baseline = true;
  UpdateOn update_on = UpdateOn::Own;
};

struct ObjectiveSpec {
  std::size_t samples = 100;
  std::vector<std::string> candidates;  // policy.candidates() when empty
  std::size_t workers = 1;
};

// Strict JSON run configuration. Relative paths resolve against the
// directory of the config file.
struct RunConfig {
  std::uint64_t seed = 0;
  PolicySpec policy;
  RewardSpec reward;
  TrainingSpec training;
  ObjectiveSpec objective;
  std::size_t horizon = 1;
  std::filesystem::path dataset_path;
  std::filesystem::path output_dir;
};

// Throws Error{Config} on unknown keys, bad types, missing input files.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

TrainingConfig training_config(const RunConfig& cfg);

// Policy and reward objects built from a config.
struct Runtime {
  std::shared_ptr<const PolicyModel> policy;
  std::optional<TemplatePolicy> template_policy;  // set for trainable policies
  RewardScorers scorers;
};

// `checkpoint` overrides the configured template policy.
Runtime build_runtime(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

TemplatePolicy load_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace kindling::harness
