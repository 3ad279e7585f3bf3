#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kindling::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> checkpoint;
  bool baseline = false;
  bool lenient = false;
  bool show_rewards = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

int cmd_train(const CommandOptions& options, Streams io);
int cmd_evaluate(const CommandOptions& options, Streams io);
int cmd_oracle(const CommandOptions& options, Streams io);
int cmd_chat(const CommandOptions& options, Streams io);
int cmd_ingest_check(const CommandOptions& options, Streams io);

// Full command line, argv[0] included.
int run_cli(const std::vector<std::string>& args, Streams io);

}  // namespace kindling::harness
