#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "kindling/kindness.hpp"

namespace kindling::harness {

inline constexpr const char* kDefaultModelId = "model";

struct IngestResult {
  PromptDataset dataset;
  std::vector<std::string> diagnostics;  // "line N: ..." for skipped lines
};

// One prompt per line:
//   {"conv_id": str, "messages": [{"author": str, "content": str}, ...], "model": str?}
// Authors alternate and the last message is the target's; the model
// ("model" unless given) speaks next. Blank lines are ignored.
//
// Strict mode throws Error{InvalidDataset} at the first bad line; lenient
// mode skips it and records a diagnostic. No valid prompts -> Error{EmptyDataset}.
IngestResult ingest_prompts(std::istream& in, bool lenient = false);
IngestResult ingest_prompts(const std::filesystem::path& path, bool lenient = false);

}  // namespace kindling::harness
