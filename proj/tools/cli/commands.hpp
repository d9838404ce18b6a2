#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace kibitz::cli {

enum ExitCode { kSuccess = 0, kFatal = 1, kPartial = 2 };

struct CommandResult {
  int exitCode = kSuccess;
  // Analysis queries sent to engines (cache hits send none).
  std::uint64_t engineQueries = 0;
  std::vector<std::filesystem::path> written;
};

CommandResult cmdAnalyze(const std::vector<std::filesystem::path>& sgfs, const Config& config, std::ostream& out,
                         std::ostream& err);

CommandResult cmdReport(const std::vector<std::filesystem::path>& sgfs, const Config& config, std::ostream& out,
                        std::ostream& err);

struct StrengthArgs {
  // "LABEL=COMMAND"; COMMAND "stub" or "stub:k=v,..." runs the in-process stub.
  std::vector<std::string> networks;
  bool samplePositions = false;
  double binWidth = 0.1;
};

// inputs are SGF files or directories scanned (non-recursively) for *.sgf.
CommandResult cmdStrength(const std::vector<std::filesystem::path>& inputs, const StrengthArgs& args,
                          const Config& config, std::ostream& out, std::ostream& err);

struct CalibrateArgs {
  int turn = 0;
  std::vector<int> visitGrid{10, 100, 1000};
  int repeats = 7;
};

CommandResult cmdCalibrate(const std::filesystem::path& sgf, const CalibrateArgs& args, const Config& config,
                           std::ostream& out, std::ostream& err);

}  // namespace kibitz::cli
