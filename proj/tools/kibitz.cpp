#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

struct SharedFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  CLI::Option* configFile = nullptr;
  std::string configPath;
  bool stubFlag = false;
  CLI::Option* stubOpt = nullptr;
  bool lenient = false;
  CLI::Option* lenientOpt = nullptr;
};

void addShared(CLI::App& app, SharedFlags& f) {
  auto add = [&](const std::string& key, const std::string& help) {
    f.options[key] = app.add_option("--" + key, f.values[key], help);
  };
  add("engine", "Engine command line, e.g. \"katago analysis -config a.cfg -model net.bin.gz\"");
  add("network-label", "Name recorded for the network (cache key and reports)");
  add("visits", "Visits per analyzed position (default 1600)");
  add("rules", "Rules sent to the engine (default tromp-taylor)");
  add("komi-override", "Use this komi instead of the record's KM");
  add("cache-dir", "Analysis cache directory (default .kibitz-cache)");
  add("out", "Output directory (default kibitz-out)");
  add("seed", "Seed for the stub engine and position sampling (default 1)");
  add("stub-config", "Stub engine options k=v,... (implies --stub)");
  add("thresholds", "Indicator thresholds file (key = value lines)");
  add("jobs", "Games analyzed concurrently (default 2)");
  add("score-field", "Response field read as the score mean: scoreLead or scoreMean");
  add("timeout", "Seconds to wait for one game's analysis; 0 waits forever");
  f.stubOpt = app.add_flag("--stub", f.stubFlag, "Use the deterministic in-process stub engine");
  f.lenientOpt = app.add_flag("--leniency", f.lenient, "Accept suicide and ko violations, skip moves onto stones");
  f.configFile = app.add_option("--config", f.configPath, "Configuration file (key = value); flags override it");
}

kibitz::cli::Config resolve(const SharedFlags& f) {
  kibitz::cli::Config c;
  if (f.configFile->count()) kibitz::cli::applyConfigFile(c, f.configPath);
  for (const auto& [key, opt] : f.options) {
    if (!opt->count()) continue;
    if (key == "stub-config") c.stub = f.values.at(key);
    else kibitz::cli::applyConfigValue(c, key, f.values.at(key));
  }
  if (f.stubOpt->count() && !c.stub) c.stub = "";
  if (f.lenientOpt->count()) c.lenient = true;
  kibitz::cli::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kibitz: engine-assisted review of Go game records"};
  app.require_subcommand(1);
  SharedFlags flags;
  addShared(app, flags);
  app.fallthrough();

  std::vector<std::string> files;
  auto* analyze = app.add_subcommand("analyze", "Analyze games and store the results in the cache");
  analyze->add_option("sgf", files, "SGF files")->required();

  auto* report = app.add_subcommand("report", "Write suspicion reports and plot specs for games");
  report->add_option("sgf", files, "SGF files")->required();

  kibitz::cli::StrengthArgs strengthArgs;
  auto* strength = app.add_subcommand("strength", "Compare networks by hit rate and KL divergence");
  strength->add_option("inputs", files, "SGF files or directories")->required();
  strength->add_option("--network", strengthArgs.networks, "LABEL=COMMAND (COMMAND may be stub or stub:k=v,...)")
      ->required();
  strength->add_flag("--sample-positions", strengthArgs.samplePositions, "One random position per game (seeded)");
  strength->add_option("--bin-width", strengthArgs.binWidth, "KL histogram bin width")->check(CLI::PositiveNumber);

  kibitz::cli::CalibrateArgs calArgs;
  std::string calFile;
  auto* calibrate = app.add_subcommand("calibrate", "KL divergence of one position across visit counts");
  calibrate->add_option("sgf", calFile, "SGF file")->required();
  calibrate->add_option("--turn", calArgs.turn, "Position before this move (0-based)")->required();
  calibrate->add_option("--visit-grid", calArgs.visitGrid, "Visit counts")->delimiter(',');
  calibrate->add_option("--repeats", calArgs.repeats, "Runs per visit count")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const kibitz::cli::Config config = resolve(flags);
    std::vector<std::filesystem::path> paths(files.begin(), files.end());
    kibitz::cli::CommandResult r;
    if (analyze->parsed()) r = kibitz::cli::cmdAnalyze(paths, config, std::cout, std::cerr);
    else if (report->parsed()) r = kibitz::cli::cmdReport(paths, config, std::cout, std::cerr);
    else if (strength->parsed()) r = kibitz::cli::cmdStrength(paths, strengthArgs, config, std::cout, std::cerr);
    else r = kibitz::cli::cmdCalibrate(calFile, calArgs, config, std::cout, std::cerr);
    return r.exitCode;
  } catch (const std::exception& e) {
    std::cerr << "kibitz: error: " << e.what() << "\n";
    return kibitz::cli::kFatal;
  }
}
