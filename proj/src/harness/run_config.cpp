#include "kindling/harness/run_config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "kindling/error.hpp"

namespace kindling::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

// Reads one JSON object, rejecting keys that were never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) fail("must be an object");
  }

  // Call after all reads.
  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.contains(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) fail("missing required key '" + key + "'");
    return *v;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(*v, key);
  }

  template <typename T>
  T convert(const json& v, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail("'" + key + "' must be a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (!v.is_number_unsigned()) fail("'" + key + "' must be non-negative");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail("'" + key + "' must be a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail("'" + key + "' must be a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail("'" + key + "': " + e.what());
    }
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::Config, where_ + ": " + message);
  }

  const std::string& where() const { return where_; }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

fs::path existing_path(const fs::path& base_dir, const std::string& value, const std::string& what) {
  fs::path p = fs::path(value).is_absolute() ? fs::path(value) : base_dir / value;
  if (!fs::exists(p)) throw Error(ErrorCode::Config, what + " not found: " + p.string());
  return p;
}

void read_remote(ObjectReader& r, RemoteEndpointConfig& remote) {
  remote.base_url = r.convert<std::string>(r.require("base_url"), "base_url");
  r.read("model_name", remote.model_name);
  r.read("timeout", remote.timeout_seconds);
  r.read("max_retries", remote.max_retries);
  r.read("temperature", remote.temperature);
  r.read("system_prompt", remote.system_prompt);
  r.read("max_in_flight", remote.max_in_flight);
  r.read("backoff_base", remote.backoff_base_seconds);
  remote.api_key = api_key_from_env();
  remote.validate();
}

PolicySpec read_policy(const json& j, const fs::path& base_dir) {
  ObjectReader r(j, "policy");
  PolicySpec spec;
  const std::string kind = r.convert<std::string>(r.require("kind"), "kind");
  if (kind == "template") {
    spec.kind = PolicyKind::Template;
    const json& templates = r.require("templates");
    if (!templates.is_array() || templates.empty()) r.fail("'templates' must be a non-empty array");
    for (const auto& t : templates) spec.templates.push_back(r.convert<std::string>(t, "templates"));
    r.read("temperature", spec.temperature);
    r.read("feature_buckets", spec.feature_buckets);
    if (const json* ck = r.find("checkpoint")) {
      spec.checkpoint = existing_path(base_dir, r.convert<std::string>(*ck, "checkpoint"), "policy checkpoint");
    }
    if (spec.temperature < 0.0) r.fail("'temperature' must be >= 0");
    if (spec.feature_buckets == 0) r.fail("'feature_buckets' must be positive");
  } else if (kind == "echo") {
    spec.kind = PolicyKind::Echo;
  } else if (kind == "remote") {
    spec.kind = PolicyKind::Remote;
    read_remote(r, spec.remote);
  } else {
    r.fail("unknown policy kind '" + kind + "'");
  }
  r.finish();
  return spec;
}

RewardSpec read_reward(const json& j, const fs::path& base_dir) {
  ObjectReader r(j, "reward");
  RewardSpec spec;
  if (const json* v = r.find("extrinsic")) {
    const auto kind = r.convert<std::string>(*v, "extrinsic");
    if (kind == "lexicon") {
      spec.extrinsic = ExtrinsicKind::Lexicon;
    } else if (kind == "remote") {
      spec.extrinsic = ExtrinsicKind::Remote;
    } else {
      r.fail("unknown extrinsic scorer '" + kind + "'");
    }
  }
  if (const json* v = r.find("lexicon_path")) {
    spec.lexicon_path = existing_path(base_dir, r.convert<std::string>(*v, "lexicon_path"), "lexicon file");
  }
  if (const json* v = r.find("irf")) {
    const auto kind = r.convert<std::string>(*v, "irf");
    if (kind == "surprisal") {
      spec.irf = IrfKind::Surprisal;
    } else if (kind == "null") {
      spec.irf = IrfKind::Null;
    } else if (kind == "table") {
      spec.irf = IrfKind::Table;
    } else {
      r.fail("unknown irf '" + kind + "'");
    }
  }
  if (const json* v = r.find("irf_table_path")) {
    spec.irf_table_path = existing_path(base_dir, r.convert<std::string>(*v, "irf_table_path"), "irf table file");
  }
  r.read("intrinsic_weight", spec.intrinsic_weight);
  if (const json* v = r.find("remote_scorer")) {
    ObjectReader rr(*v, "reward.remote_scorer");
    read_remote(rr, spec.remote_scorer);
    rr.read("rubric", spec.rubric.prompt_template);
    rr.read("min", spec.rubric.min_score);
    rr.read("max", spec.rubric.max_score);
    if (!(spec.rubric.min_score <= spec.rubric.max_score)) rr.fail("'min' must not exceed 'max'");
    rr.finish();
  }
  if (spec.irf == IrfKind::Table && !spec.irf_table_path) r.fail("irf 'table' requires 'irf_table_path'");
  if (spec.extrinsic == ExtrinsicKind::Remote && spec.remote_scorer.base_url.empty()) {
    r.fail("extrinsic 'remote' requires 'remote_scorer'");
  }
  r.finish();
  return spec;
}

TrainingSpec read_training(const json& j) {
  ObjectReader r(j, "training");
  TrainingSpec spec;
  r.read("learning_rate", spec.learning_rate);
  r.read("epochs", spec.epochs);
  r.read("baseline_decay", spec.baseline_decay);
  r.read("use_baseline", spec.use_baseline);
  if (const json* v = r.find("update_on")) {
    const auto which = r.convert<std::string>(*v, "update_on");
    if (which == "own") {
      spec.update_on = UpdateOn::Own;
    } else if (which == "switched") {
      spec.update_on = UpdateOn::Switched;
    } else {
      r.fail("'update_on' must be 'own' or 'switched'");
    }
  }
  if (!(spec.learning_rate > 0.0)) r.fail("'learning_rate' must be > 0");
  if (!(spec.baseline_decay >= 0.0 && spec.baseline_decay <= 1.0)) r.fail("'baseline_decay' must be in [0, 1]");
  r.finish();
  return spec;
}

ObjectiveSpec read_objective(const json& j) {
  ObjectReader r(j, "objective");
  ObjectiveSpec spec;
  r.read("samples", spec.samples);
  r.read("workers", spec.workers);
  if (const json* v = r.find("candidates")) {
    if (!v->is_array()) r.fail("'candidates' must be an array of strings");
    for (const auto& c : *v) spec.candidates.push_back(r.convert<std::string>(c, "candidates"));
  }
  if (spec.samples == 0) r.fail("'samples' must be >= 1");
  if (spec.workers == 0) r.fail("'workers' must be >= 1");
  r.finish();
  return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, "config is not valid JSON");
  ObjectReader r(j, "config");
  RunConfig cfg;
  r.read("seed", cfg.seed);
  cfg.policy = read_policy(r.require("policy"), base_dir);
  if (const json* v = r.find("reward")) cfg.reward = read_reward(*v, base_dir);
  if (const json* v = r.find("training")) cfg.training = read_training(*v);
  if (const json* v = r.find("objective")) cfg.objective = read_objective(*v);
  r.read("horizon", cfg.horizon);
  if (cfg.horizon == 0) r.fail("'horizon' must be >= 1");
  cfg.dataset_path = existing_path(base_dir, r.convert<std::string>(r.require("dataset_path"), "dataset_path"),
                                   "dataset file");
  const auto out = r.convert<std::string>(r.require("output_dir"), "output_dir");
  cfg.output_dir = fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;
  r.finish();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, "config file not readable: " + path.string());
  }
  return parse_run_config(text, path.parent_path());
}

TrainingConfig training_config(const RunConfig& cfg) {
  TrainingConfig t;
  t.seed = cfg.seed;
  t.learning_rate = cfg.training.learning_rate;
  t.epochs = cfg.training.epochs;
  t.use_baseline = cfg.training.use_baseline;
  t.baseline_decay = cfg.training.baseline_decay;
  t.update_on = cfg.training.update_on;
  t.horizon = cfg.horizon;
  return t;
}

TemplatePolicy load_checkpoint(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::Config, "checkpoint not readable: " + path.string());
  }
  try {
    return from_checkpoint_json(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.detail());
  }
}

Runtime build_runtime(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  Runtime rt;
  if (checkpoint) {
    rt.template_policy = load_checkpoint(*checkpoint);
  } else if (cfg.policy.kind == PolicyKind::Template) {
    rt.template_policy = cfg.policy.checkpoint ? load_checkpoint(*cfg.policy.checkpoint)
                                               : TemplatePolicy(cfg.policy.templates, cfg.policy.temperature,
                                                                cfg.policy.feature_buckets);
  }
  if (rt.template_policy) {
    rt.policy = std::make_shared<TemplatePolicy>(*rt.template_policy);
  } else if (cfg.policy.kind == PolicyKind::Echo) {
    rt.policy = std::make_shared<EchoPolicy>();
  } else {
    rt.policy = std::make_shared<RemotePolicy>(std::make_shared<RemoteClient>(cfg.policy.remote));
  }

  const RewardSpec& rs = cfg.reward;
  if (rs.extrinsic == ExtrinsicKind::Remote) {
    rt.scorers.extrinsic =
        std::make_shared<RemoteScorer>(std::make_shared<RemoteClient>(rs.remote_scorer), rs.rubric);
  } else if (rs.lexicon_path) {
    try {
      rt.scorers.extrinsic = std::make_shared<LexiconScorer>(LexiconScorer::from_json(read_file(*rs.lexicon_path)));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, rs.lexicon_path->string() + ": " + e.detail());
    }
  } else {
    rt.scorers.extrinsic = std::make_shared<LexiconScorer>();
  }

  switch (rs.irf) {
    case IrfKind::Surprisal:
      rt.scorers.intrinsic = std::make_shared<SurprisalIrf>();
      break;
    case IrfKind::Null:
      rt.scorers.intrinsic = std::make_shared<NullIrf>();
      break;
    case IrfKind::Table:
      try {
        rt.scorers.intrinsic = std::make_shared<TableIrf>(TableIrf::from_json(read_file(*rs.irf_table_path)));
      } catch (const Error& e) {
        throw Error(ErrorCode::Config, rs.irf_table_path->string() + ": " + e.detail());
      }
      break;
  }
  rt.scorers.intrinsic_weight = rs.intrinsic_weight;
  return rt;
}

}  // namespace kindling::harness
