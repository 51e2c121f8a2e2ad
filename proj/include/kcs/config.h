#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/harness.h"
#include "kcs/trace.h"

namespace kcs {

// Experiment configs are JSON objects; see experiments/table1 for the
// presets. Unknown or mistyped fields throw ConfigError naming the field.
ExperimentSpec ParseExperimentSpec(std::string_view json_text);
ExperimentSpec LoadExperimentSpec(const std::filesystem::path& path);

// All *.cfg files in a directory, in file-name order.
std::vector<ExperimentSpec> LoadExperimentDir(const std::filesystem::path& dir);

// {"mean_hold_ms", "sd_hold_ms", "mean_gap_ms": [5], "sd_gap_ms": [5],
//  "seed", "user_id"}; values in milliseconds.
struct ProfileFile {
  TypistProfile profile;
  int user_id = 1;
};
ProfileFile ParseProfile(std::string_view json_text);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace kcs
