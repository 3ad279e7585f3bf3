#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "kindling/remote_client.hpp"
#include "support/worlds.hpp"

namespace kindling::testing {

inline const std::filesystem::path kSourceDir{KINDLING_SOURCE_DIR};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// State and config matching tests/fixtures/remote_generate_request.json.
inline ConversationState golden_state() {
  return prompt_state({"hello there", "hi, how are you?", "could you spare some food?"});
}

inline RemoteEndpointConfig golden_config(const std::string& base_url) {
  RemoteEndpointConfig cfg;
  cfg.base_url = base_url;
  cfg.api_key = "test-key";
  cfg.model_name = "mock-model";
  cfg.temperature = 0.7;
  cfg.system_prompt = "You are a helpful assistant.";
  cfg.timeout_seconds = 2.0;
  cfg.backoff_base_seconds = 0.01;
  return cfg;
}

inline std::string canonical_fixture(const std::string& name) {
  return canonical_json(nlohmann::json::parse(read_text(kSourceDir / "tests" / "fixtures" / name)));
}

// Writes a run config for a remote policy (and remote scorer) pointing at
// `base_url`, with the bundled gift-world dataset. Returns the config path.
inline std::filesystem::path write_remote_run_config(const std::filesystem::path& dir, const std::string& base_url) {
  std::filesystem::create_directories(dir);
  const auto worlds = kSourceDir / "configs" / "worlds";
  nlohmann::json policy = {{"kind", "remote"}, {"base_url", base_url}, {"model_name", "mock-model"}, {"max_retries", 0}};
  nlohmann::json scorer = {{"base_url", base_url}, {"model_name", "mock-model"}, {"max_retries", 0}};
  scorer["rubric"] = "Rate this reply: {reply}\n{transcript}";
  const nlohmann::json cfg = {
      {"seed", 1},
      {"policy", policy},
      {"reward", {{"extrinsic", "remote"}, {"remote_scorer", scorer}, {"irf", "null"}}},
      {"objective", {{"samples", 2}, {"candidates", {"i give you my apple", "i keep my apple"}}}},
      {"dataset_path", (worlds / "gift_prompts.jsonl").string()},
      {"output_dir", (dir / "out").string()}};
  const auto path = dir / "remote.json";
  std::ofstream(path) << cfg.dump(2);
  return path;
}

// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }
  ScopedEnv(const ScopedEnv&) = delete;
  ScopedEnv& operator=(const ScopedEnv&) = delete;

 private:
  const char* name_;
  std::optional<std::string> old_;
};

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kindling-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace kindling::testing
