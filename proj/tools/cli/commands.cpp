#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kibitz/analyze.hpp"
#include "kibitz/metrics.hpp"
#include "kibitz/report.hpp"
#include "kibitz/stub_engine.hpp"

namespace kibitz::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string num(double x) { return json(x).dump(); }

void writeFile(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content) || !out.flush()) throw IoError("cannot write " + path.string());
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <typename F>
void runPool(std::size_t n, int jobs, F&& work) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) work(i);
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

// Starts the engine on first use so that fully cached runs never spawn one.
class EngineSource {
 public:
  EngineSource(std::vector<std::string> command, std::optional<std::string> stub, EngineOptions options,
               std::uint64_t seed)
      : command_(std::move(command)), stub_(std::move(stub)), options_(std::move(options)), seed_(seed) {}

  bool configured() const { return stub_.has_value() || !command_.empty(); }
  const std::string& label() const { return options_.networkLabel; }

  EngineHandle& get() {
    std::lock_guard lock(mutex_);
    if (!handle_) {
      if (stub_) {
        StubConfig sc = StubConfig::parse(*stub_);
        if (stub_->find("seed=") == std::string::npos) sc.seed = seed_;
        handle_ = stubEngine(std::move(sc), options_);
      } else if (!command_.empty()) {
        EngineOptions o = options_;
        if (o.engineName == "engine") o.engineName = fs::path(command_.front()).filename().string();
        handle_ = startEngine(command_, std::move(o));
      } else {
        throw MissingAnalysis("no engine configured");
      }
    }
    return *handle_;
  }

  std::uint64_t queries() const {
    std::lock_guard lock(mutex_);
    return handle_ ? handle_->queriesSent() : 0;
  }

  // One lock per game content hash: the same game listed twice is analyzed
  // once and the second worker reads the cache.
  std::mutex& gameLock(const std::string& hash) {
    std::lock_guard lock(mutex_);
    auto& m = gameLocks_[hash];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

 private:
  std::vector<std::string> command_;
  std::optional<std::string> stub_;
  EngineOptions options_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::unique_ptr<EngineHandle> handle_;
  std::map<std::string, std::unique_ptr<std::mutex>> gameLocks_;
};

EngineOptions engineOptions(const Config& c, const std::string& label) {
  EngineOptions o;
  o.networkLabel = label;
  o.scoreField = parseScoreField(c.scoreField);
  o.maxPending = std::max<std::size_t>(8, static_cast<std::size_t>(c.jobs) * 2);
  o.responseTimeout = std::chrono::milliseconds(1000LL * c.timeoutSeconds);
  return o;
}

AnalyzeOptions analyzeOptions(const Config& c) {
  AnalyzeOptions o;
  o.maxVisits = c.visits;
  o.rules = c.rules;
  o.komiOverride = c.komiOverride;
  o.lenient = c.lenient;
  o.analyzeFinal = c.analyzeFinal;
  return o;
}

struct LoadedGame {
  fs::path path;
  std::optional<GameRecord> record;
  std::string error;
  std::vector<std::string> warnings;
};

LoadedGame loadGame(const fs::path& path) {
  LoadedGame g;
  g.path = path;
  try {
    ParsedGame parsed = parseSgf(readFile(path));
    g.record = std::move(parsed.record);
    g.warnings = std::move(parsed.warnings);
  } catch (const std::exception& e) {
    g.error = e.what();
  }
  return g;
}

GameAnalysis obtainAnalysis(EngineSource& source, const GameRecord& record, const AnalyzeOptions& options,
                            const AnalysisCache& cache, const fs::path& path) {
  const Replay replayed = replay(record, ReplayOptions{options.lenient});
  std::lock_guard lock(source.gameLock(gameContentHash(buildQuery(record, replayed, options))));
  if (auto hit = cachedAnalysis(record, options, source.label(), cache)) return std::move(*hit);
  if (!source.configured())
    throw MissingAnalysis("no cached analysis for " + path.string() + " (network '" + source.label() + "', " +
                          std::to_string(options.maxVisits) +
                          " visits); run 'kibitz analyze' first or pass --engine or --stub");
  return analyzeGame(source.get(), record, options, &cache);
}

// Unique per-game directory names derived from file stems.
std::vector<std::string> gameDirs(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string stem = p.stem().string();
    if (stem.empty()) stem = "game";
    const int n = ++seen[stem];
    out.push_back(n == 1 ? stem : stem + "-" + std::to_string(n));
  }
  return out;
}

int exitFor(std::size_t failed, std::size_t total) {
  if (failed == 0) return kSuccess;
  return failed == total ? kFatal : kPartial;
}

std::vector<fs::path> collectSgfs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".sgf") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

std::string effectComment(const TurnMetrics& m) {
  std::string s = "kibitz: ";
  if (m.effect) s += "effect " + num(std::round(*m.effect * 1000.0) / 1000.0);
  else s += "effect n/a";
  if (m.actualRank) s += ", engine rank " + std::to_string(*m.actualRank);
  else s += ", not searched";
  return s;
}

}  // namespace

CommandResult cmdAnalyze(const std::vector<fs::path>& sgfs, const Config& config, std::ostream& out, std::ostream& err) {
  CommandResult result;
  validate(config);
  EngineSource source(config.engineCommand, config.stub, engineOptions(config, config.networkLabel), config.seed);
  const AnalysisCache cache(config.cacheDir);
  const AnalyzeOptions options = analyzeOptions(config);

  std::vector<std::string> status(sgfs.size());
  std::vector<char> failed(sgfs.size(), 0);
  std::mutex errMutex;
  runPool(sgfs.size(), config.jobs, [&](std::size_t i) {
    LoadedGame g = loadGame(sgfs[i]);
    std::ostringstream log;
    for (const auto& w : g.warnings) log << sgfs[i].string() << ": warning: " << w << "\n";
    try {
      if (!g.record) throw Error(g.error);
      const GameAnalysis a = obtainAnalysis(source, *g.record, options, cache, sgfs[i]);
      status[i] = sgfs[i].string() + ": " + std::to_string(a.turns.size()) + " positions" +
                  (a.fromCache ? " (cached)" : "") + " " + a.gameHash;
    } catch (const std::exception& e) {
      failed[i] = true;
      status[i] = sgfs[i].string() + ": error: " + e.what();
    }
    std::lock_guard lock(errMutex);
    err << log.str();
  });
  std::size_t failures = 0;
  for (std::size_t i = 0; i < sgfs.size(); ++i) {
    (failed[i] ? err : out) << status[i] << "\n";
    failures += failed[i];
  }
  result.engineQueries = source.queries();
  err << "engine queries: " << result.engineQueries << "\n";
  result.exitCode = exitFor(failures, sgfs.size());
  return result;
}

CommandResult cmdReport(const std::vector<fs::path>& sgfs, const Config& config, std::ostream& out, std::ostream& err) {
  CommandResult result;
  validate(config);
  const Thresholds thresholds = config.thresholdsFile ? Thresholds::load(*config.thresholdsFile) : Thresholds{};
  EngineSource source(config.engineCommand, config.stub, engineOptions(config, config.networkLabel), config.seed);
  const AnalysisCache cache(config.cacheDir);
  const AnalyzeOptions options = analyzeOptions(config);
  const std::vector<std::string> dirs = gameDirs(sgfs);

  std::vector<std::string> status(sgfs.size());
  std::vector<std::vector<fs::path>> written(sgfs.size());
  std::vector<char> failed(sgfs.size(), 0);
  std::mutex errMutex;
  runPool(sgfs.size(), config.jobs, [&](std::size_t i) {
    LoadedGame g = loadGame(sgfs[i]);
    std::ostringstream log;
    for (const auto& w : g.warnings) log << sgfs[i].string() << ": warning: " << w << "\n";
    try {
      if (!g.record) throw Error(g.error);
      GameRecord& record = *g.record;
      const GameAnalysis a = obtainAnalysis(source, record, options, cache, sgfs[i]);
      const Replay replayed = replay(record, ReplayOptions{config.lenient});
      ReportContext ctx{a.gameHash, "unknown", source.label(), config.visits, config.scoreField};
      if (auto entry = cache.loadEntry(CacheKey{a.gameHash, source.label(), config.visits})) {
        ctx.engine = entry->metadata.engine;
        ctx.scoreField = entry->metadata.scoreField;
      }
      const SuspicionReport report = buildReport(record, replayed, a.turns, thresholds, ctx);

      const fs::path dir = config.outDir / dirs[i];
      writeFile(dir / "report.txt", emitReport(report, ReportFormat::Text));
      writeFile(dir / "report.json", emitReport(report, ReportFormat::Json));
      written[i] = {dir / "report.txt", dir / "report.json"};
      for (auto& p : emitPlotSpecs(report, dir / "plots")) written[i].push_back(std::move(p));

      const TurnMetricsResult tm = turnMetrics(replayed.moves, a.turns, record.size);
      for (const auto& m : tm.turns)
        annotateMove(record, replayed.sourceIndex[static_cast<std::size_t>(m.turnIndex)], effectComment(m));
      writeFile(dir / "annotated.sgf", writeSgf(record));
      written[i].push_back(dir / "annotated.sgf");

      status[i] = sgfs[i].string() + ": black " + std::string(suspicionLevelName(report.black.level)) + ", white " +
                  std::string(suspicionLevelName(report.white.level)) + " -> " + dir.string();
    } catch (const std::exception& e) {
      failed[i] = true;
      status[i] = sgfs[i].string() + ": error: " + e.what();
    }
    std::lock_guard lock(errMutex);
    err << log.str();
  });
  std::size_t failures = 0;
  for (std::size_t i = 0; i < sgfs.size(); ++i) {
    (failed[i] ? err : out) << status[i] << "\n";
    failures += failed[i];
    result.written.insert(result.written.end(), written[i].begin(), written[i].end());
  }
  result.engineQueries = source.queries();
  err << "engine queries: " << result.engineQueries << "\n";
  result.exitCode = exitFor(failures, sgfs.size());
  return result;
}

CommandResult cmdStrength(const std::vector<fs::path>& inputs, const StrengthArgs& args, const Config& config,
                          std::ostream& out, std::ostream& err) {
  CommandResult result;
  validate(config);
  if (args.networks.empty()) throw std::invalid_argument("strength needs at least one --network LABEL=COMMAND");
  const std::vector<fs::path> paths = collectSgfs(inputs);
  if (paths.empty()) throw std::invalid_argument("no SGF files found in the given inputs");

  std::vector<LoadedGame> games;
  std::vector<int> moveCounts;
  std::size_t failures = 0;
  for (const auto& p : paths) {
    games.push_back(loadGame(p));
    LoadedGame& g = games.back();
    for (const auto& w : g.warnings) err << p.string() << ": warning: " << w << "\n";
    int n = 0;
    if (g.record) {
      try {
        n = static_cast<int>(replay(*g.record, ReplayOptions{config.lenient}).moves.size());
      } catch (const std::exception& e) {
        g.error = e.what();
        g.record.reset();
      }
    }
    if (!g.record) {
      err << p.string() << ": error: " << g.error << "\n";
      ++failures;
    }
    moveCounts.push_back(n);
  }
  const std::vector<int> picks = samplePositions(moveCounts, config.seed);

  std::vector<NetworkPositions> nets;
  std::vector<std::vector<std::pair<std::size_t, int>>> origin;  // (game, turn) per position
  const AnalysisCache cache(config.cacheDir);
  std::set<std::string> labels;
  for (const auto& spec : args.networks) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("network '" + spec + "' is not LABEL=COMMAND");
    const std::string label = spec.substr(0, eq);
    const std::string command = spec.substr(eq + 1);
    if (!labels.insert(label).second) throw std::invalid_argument("network label '" + label + "' given twice");
    std::optional<std::string> stub;
    std::vector<std::string> argv;
    if (command == "stub") stub = "";
    else if (command.rfind("stub:", 0) == 0) stub = command.substr(5);
    else argv = splitCommand(command);
    EngineSource source(argv, stub, engineOptions(config, label), config.seed);

    std::vector<std::vector<TurnAnalysis>> perGame(games.size());
    std::vector<std::string> errors(games.size());
    runPool(games.size(), config.jobs, [&](std::size_t i) {
      if (!games[i].record) return;
      AnalyzeOptions o = analyzeOptions(config);
      o.includePolicy = true;
      o.analyzeFinal = false;
      if (args.samplePositions) {
        if (picks[i] < 0) return;
        o.turns = std::vector<int>{picks[i]};
      }
      try {
        perGame[i] = obtainAnalysis(source, *games[i].record, o, cache, games[i].path).turns;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    NetworkPositions np{label, {}};
    std::vector<std::pair<std::size_t, int>> org;
    for (std::size_t i = 0; i < games.size(); ++i) {
      if (!errors[i].empty()) {
        err << games[i].path.string() << ": error (" << label << "): " << errors[i] << "\n";
        ++failures;
      }
      for (auto& t : perGame[i]) {
        org.emplace_back(i, t.turnIndex);
        np.positions.push_back(std::move(t));
      }
    }
    result.engineQueries += source.queries();
    nets.push_back(std::move(np));
    origin.push_back(std::move(org));
  }

  const std::vector<StrengthRow> rows = strengthBench(nets, args.binWidth);
  std::string table = "network,hit_rate,hits,positions,kl_mean,kl_max\n";
  std::string hist = "network,bin_start,bin_end,count\n";
  std::string perPos = "network,game,turn,hit,kl\n";
  json histValues = json::array();
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const StrengthRow& r = rows[n];
    table += r.label + "," + num(r.hit.rate) + "," + std::to_string(r.hit.hits) + "," + std::to_string(r.hit.positions) +
             "," + num(r.klMean) + "," + num(r.klMax) + "\n";
    for (std::size_t b = 0; b < r.histogram.counts.size(); ++b) {
      hist += r.label + "," + num(r.histogram.edges[b]) + "," + num(r.histogram.edges[b + 1]) + "," +
              std::to_string(r.histogram.counts[b]) + "\n";
      histValues.push_back({{"network", r.label},
                            {"bin_start", r.histogram.edges[b]},
                            {"bin_end", r.histogram.edges[b + 1]},
                            {"count", r.histogram.counts[b]}});
    }
    for (std::size_t k = 0; k < r.kls.size(); ++k) {
      const auto [game, turn] = origin[n][k];
      const auto hit = isHit(nets[n].positions[k]);
      perPos += r.label + "," + games[game].path.filename().string() + "," + std::to_string(turn) + "," +
                (hit ? (*hit ? "1" : "0") : "") + "," + num(r.kls[k]) + "\n";
    }
    out << r.label << ": hit rate " << num(std::round(r.hit.rate * 1e4) / 1e2) << "% (" << r.hit.hits << "/"
        << r.hit.positions << "), KL mean " << num(r.klMean) << ", max " << num(r.klMax) << "\n";
  }

  json spec;
  spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
  spec["title"] = "Search gap KL divergence per position";
  spec["data"] = {{"values", std::move(histValues)}};
  spec["mark"] = "bar";
  spec["encoding"] = {
      {"x", {{"field", "bin_start"}, {"bin", {{"binned", true}, {"step", args.binWidth}}}, {"title", "KL divergence (nats)"}}},
      {"x2", {{"field", "bin_end"}}},
      {"y", {{"field", "count"}, {"type", "quantitative"}, {"title", "Positions"}}},
      {"color", {{"field", "network"}, {"type", "nominal"}}},
      {"yOffset", {{"field", "network"}}}};

  const fs::path dir = config.outDir;
  writeFile(dir / "strength.csv", table);
  writeFile(dir / "kl_histogram.csv", hist);
  writeFile(dir / "kl_histogram.vl.json", spec.dump(2) + "\n");
  writeFile(dir / "kl_positions.csv", perPos);
  result.written = {dir / "strength.csv", dir / "kl_histogram.csv", dir / "kl_histogram.vl.json", dir / "kl_positions.csv"};
  if (args.samplePositions) {
    std::string sampled = "game,moves,turn,seed\n";
    for (std::size_t i = 0; i < games.size(); ++i)
      sampled += games[i].path.filename().string() + "," + std::to_string(moveCounts[i]) + "," + std::to_string(picks[i]) +
                 "," + std::to_string(config.seed) + "\n";
    writeFile(dir / "sampled_positions.csv", sampled);
    result.written.push_back(dir / "sampled_positions.csv");
  }
  err << "engine queries: " << result.engineQueries << "\n";
  result.exitCode = failures ? kPartial : kSuccess;
  return result;
}

CommandResult cmdCalibrate(const fs::path& sgf, const CalibrateArgs& args, const Config& config, std::ostream& out,
                           std::ostream& err) {
  CommandResult result;
  validate(config);
  EngineSource source(config.engineCommand, config.stub, engineOptions(config, config.networkLabel), config.seed);
  if (!source.configured()) throw MissingAnalysis("calibrate needs an engine: pass --engine or --stub");

  LoadedGame g = loadGame(sgf);
  for (const auto& w : g.warnings) err << sgf.string() << ": warning: " << w << "\n";
  if (!g.record) throw Error(sgf.string() + ": " + g.error);
  const Replay replayed = replay(*g.record, ReplayOptions{config.lenient});
  const int n = static_cast<int>(replayed.moves.size());
  if (args.turn < 0 || args.turn > n)
    throw std::invalid_argument("turn " + std::to_string(args.turn) + " is outside 0.." + std::to_string(n));
  AnalyzeOptions o = analyzeOptions(config);
  o.turns = std::vector<int>{args.turn};
  const AnalysisQuery position = buildQuery(*g.record, replayed, o);

  const std::vector<CalibrationRow> rows = calibrationRun(source.get(), position, args.visitGrid, args.repeats);
  std::string csv = "visits,run,kl\n";
  json values = json::array();
  for (const auto& r : rows) {
    csv += std::to_string(r.visits) + "," + std::to_string(r.run) + "," + num(r.kl) + "\n";
    values.push_back({{"visits", r.visits}, {"run", r.run}, {"kl", r.kl}});
  }
  json spec;
  spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
  spec["title"] = "Search gap KL divergence by visit count, turn " + std::to_string(args.turn);
  spec["data"] = {{"values", std::move(values)}};
  json points = {{"mark", {{"type", "point"}, {"filled", true}}},
                 {"encoding",
                  {{"x", {{"field", "visits"}, {"type", "quantitative"}, {"scale", {{"type", "log"}}}, {"title", "Visits"}}},
                   {"y", {{"field", "kl"}, {"type", "quantitative"}, {"title", "KL divergence (nats)"}}}}}};
  json means = {{"mark", "line"},
                {"encoding",
                 {{"x", {{"field", "visits"}, {"type", "quantitative"}, {"scale", {{"type", "log"}}}}},
                  {"y", {{"aggregate", "mean"}, {"field", "kl"}, {"type", "quantitative"}}}}}};
  spec["layer"] = json::array({std::move(points), std::move(means)});

  writeFile(config.outDir / "calibration.csv", csv);
  writeFile(config.outDir / "calibration.vl.json", spec.dump(2) + "\n");
  result.written = {config.outDir / "calibration.csv", config.outDir / "calibration.vl.json"};
  result.engineQueries = source.queries();
  out << rows.size() << " calibration runs -> " << (config.outDir / "calibration.csv").string() << "\n";
  return result;
}

}  // namespace kibitz::cli
