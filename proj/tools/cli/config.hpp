#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kibitz::cli {

struct Config {
  std::vector<std::string> engineCommand;
  std::string networkLabel = "default";
  std::string rules = "tromp-taylor";
  int visits = 1600;
  std::optional<double> komiOverride;
  std::filesystem::path cacheDir = ".kibitz-cache";
  std::filesystem::path outDir = "kibitz-out";
  std::uint64_t seed = 1;
  // In-process stub engine options ("k=v,..."); set means use the stub.
  std::optional<std::string> stub;
  std::optional<std::filesystem::path> thresholdsFile;
  bool lenient = false;
  int jobs = 2;
  std::string scoreField = "scoreLead";
  // Also analyze the position after the last move, so the last move has an effect.
  bool analyzeFinal = true;
  // Seconds; 0 waits forever.
  int timeoutSeconds = 0;
};

// Applies "key = value" lines ('#' comments). Keys mirror the long flag
// names: engine, network-label, rules, visits, komi-override, cache-dir, out,
// seed, stub, thresholds, leniency, jobs, score-field, timeout, analyze-final.
void applyConfigText(Config& config, std::string_view text);
void applyConfigFile(Config& config, const std::filesystem::path& path);
// Applies one key/value pair. Throws std::invalid_argument.
void applyConfigValue(Config& config, const std::string& key, const std::string& value);
// Throws std::invalid_argument when an invariant does not hold.
void validate(const Config& config);

// Whitespace splitting with single/double quotes and backslash escapes.
std::vector<std::string> splitCommand(std::string_view text);

}  // namespace kibitz::cli
