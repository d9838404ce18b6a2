#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "kibitz/board.hpp"
#include "kibitz/report.hpp"
#include "kibitz/sgf.hpp"
#include "test_util.hpp"

using namespace kibitz;
namespace kt = kibitz::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exitCode = -1;
  std::string out;
  std::string err;
};

Run runCli(const std::string& args, const fs::path& scratch) {
  const auto outFile = scratch / "stdout.txt";
  const auto errFile = scratch / "stderr.txt";
  const std::string cmd = std::string(KIBITZ_CLI) + " " + args + " >" + outFile.string() + " 2>" + errFile.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = kt::readFile(outFile);
  r.err = kt::readFile(errFile);
  return r;
}

// Non-adjacent points, so no stone is ever captured.
const Point kSpots[] = {{0, 0}, {8, 8}, {0, 8}, {8, 0}, {2, 2}, {6, 6}, {2, 6},
                        {6, 2}, {4, 4}, {4, 0}, {0, 4}, {8, 4}, {4, 8}, {2, 4}};

std::string smallGame(int moves, const std::string& name) {
  std::string s = "(;GM[1]FF[4]SZ[9]KM[7]PB[" + name + "-b]PW[" + name + "-w]";
  for (int i = 0; i < moves; ++i)
    s += std::string(";") + (i % 2 ? "W" : "B") + "[" + toSgfCoord(kSpots[i]) + "]";
  return s + ")\n";
}

// Four games with 5, 7, 9 and 12 moves: 33 positions before a move.
const int kGameMoves[] = {5, 7, 9, 12};
constexpr int kPositions = 5 + 7 + 9 + 12;

std::vector<fs::path> writeSmallCorpus(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (int i = 0; i < 4; ++i) {
    const auto p = dir / ("g" + std::to_string(i + 1) + ".sgf");
    kt::writeFile(p, smallGame(kGameMoves[i], "p" + std::to_string(i + 1)));
    paths.push_back(p);
  }
  return paths;
}

cli::Config stubConfig(const fs::path& scratch) {
  cli::Config c;
  c.stub = "";
  c.visits = 200;
  c.cacheDir = scratch / "cache";
  c.outDir = scratch / "out";
  return c;
}

std::map<std::string, std::string> readTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = kt::readFile(e.path());
  return files;
}

std::vector<std::vector<std::string>> csvRows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config file values and their precedence") {
  cli::Config c;
  cli::applyConfigText(c, "# shared\nvisits = 50\nengine = katago analysis -config 'my dir/a.cfg'\nleniency = yes\n");
  CHECK(c.visits == 50);
  CHECK(c.engineCommand == std::vector<std::string>{"katago", "analysis", "-config", "my dir/a.cfg"});
  CHECK(c.lenient);
  cli::applyConfigValue(c, "visits", "80");
  CHECK(c.visits == 80);
  CHECK_THROWS_AS(cli::applyConfigText(c, "colour = blue"), std::invalid_argument);
  CHECK_THROWS_AS(cli::applyConfigValue(c, "visits", "many"), std::invalid_argument);
  CHECK_THROWS_AS(cli::applyConfigValue(c, "score-field", "points"), std::invalid_argument);
  c.visits = 0;
  CHECK_THROWS_AS(cli::validate(c), std::invalid_argument);
  CHECK(cli::splitCommand(R"(a "b c" d\ e)") == std::vector<std::string>{"a", "b c", "d e"});
  CHECK_THROWS_AS(cli::splitCommand("a 'b"), std::invalid_argument);

  // Through the binary: the flag beats the config file.
  const auto dir = kt::scratchDir("cli-precedence");
  const auto games = writeSmallCorpus(dir);
  kt::writeFile(dir / "kibitz.conf", "out = " + (dir / "from-file").string() + "\nvisits = 30\nstub = seed=3\n");
  const auto r = runCli("--config " + (dir / "kibitz.conf").string() + " --out " + (dir / "from-flag").string() +
                            " --cache-dir " + (dir / "cache").string() + " calibrate " + games[0].string() +
                            " --turn 1 --visit-grid 10 --repeats 2",
                        dir);
  CHECK(r.exitCode == 0);
  CHECK(fs::exists(dir / "from-flag" / "calibration.csv"));
  CHECK_FALSE(fs::exists(dir / "from-file"));
}

TEST_CASE("analyze: three games, a bad file, and a cached rerun") {
  const auto dir = kt::scratchDir("cli-analyze");
  auto games = writeSmallCorpus(dir);
  games.pop_back();
  const auto config = stubConfig(dir);
  std::ostringstream out, err;
  const auto first = cli::cmdAnalyze(games, config, out, err);
  CHECK(first.exitCode == cli::kSuccess);
  CHECK(first.engineQueries == 3);
  int entries = 0;
  for (const auto& e : fs::recursive_directory_iterator(config.cacheDir)) entries += e.is_regular_file();
  CHECK(entries == 3);

  std::ostringstream out2, err2;
  const auto again = cli::cmdAnalyze(games, config, out2, err2);
  CHECK(again.exitCode == cli::kSuccess);
  CHECK(again.engineQueries == 0);
  CHECK(out2.str().find("(cached)") != std::string::npos);

  // Cached analyses need no engine at all.
  auto noEngine = config;
  noEngine.stub.reset();
  std::ostringstream out3, err3;
  CHECK(cli::cmdAnalyze(games, noEngine, out3, err3).exitCode == cli::kSuccess);

  const auto bad = dir / "broken.sgf";
  kt::writeFile(bad, "(;GM[1]SZ[9];B[aa];W[");
  const auto r = runCli("--stub --visits 200 --cache-dir " + config.cacheDir.string() + " analyze " +
                            games[0].string() + " " + bad.string(),
                        dir);
  CHECK(r.exitCode == 2);
  CHECK(r.err.find("broken.sgf") != std::string::npos);
  CHECK(r.err.find("engine queries: 0") != std::string::npos);

  const auto allBad = runCli("--stub --cache-dir " + config.cacheDir.string() + " analyze " + bad.string(), dir);
  CHECK(allBad.exitCode == 1);
  CHECK(runCli("analyze", dir).exitCode != 0);
}

TEST_CASE("report without engine or cache is MissingAnalysis") {
  const auto dir = kt::scratchDir("cli-missing");
  const auto games = writeSmallCorpus(dir);
  auto config = stubConfig(dir);
  config.stub.reset();
  std::ostringstream out, err;
  const auto r = cli::cmdReport({games[0]}, config, out, err);
  CHECK(r.exitCode == cli::kFatal);
  CHECK(err.str().find("no cached analysis") != std::string::npos);
  CHECK(err.str().find("kibitz analyze") != std::string::npos);
  CHECK_THROWS_AS(cli::cmdCalibrate(games[0], {}, config, out, err), MissingAnalysis);
}

TEST_CASE("report writes reports, plots and an annotated record") {
  const auto dir = kt::scratchDir("cli-report");
  const auto games = writeSmallCorpus(dir);
  const auto config = stubConfig(dir);
  std::ostringstream out, err;
  const auto r = cli::cmdReport({games[3], games[3]}, config, out, err);
  CHECK(r.exitCode == cli::kSuccess);
  for (const char* sub : {"g4", "g4-2"}) {
    const auto d = config.outDir / sub;
    for (const char* f : {"report.txt", "report.json", "annotated.sgf", "plots/winrate.vl.json", "plots/score_black.csv",
                          "plots/score_white.vl.json", "plots/effect_cma.csv"})
      CHECK(fs::exists(d / f));
  }
  const auto annotated = parseSgf(kt::readFile(config.outDir / "g4" / "annotated.sgf")).record;
  REQUIRE(annotated.comments.size() == 12);
  for (const auto& c : annotated.comments) CHECK(c->find("kibitz: effect") == 0);
  const auto report = parseReportJson(kt::readFile(config.outDir / "g4" / "report.json"));
  CHECK(report.game.engine == "kibitz-stub-1");
  CHECK(report.black.insufficientData);
}

TEST_CASE("strength: hand counts on a four-game stub corpus") {
  const auto dir = kt::scratchDir("cli-strength");
  writeSmallCorpus(dir / "corpus");
  auto config = stubConfig(dir);
  cli::StrengthArgs args;
  args.networks = {"agree=stub:shape=one-hot", "disagree=stub:shape=one-hot,disagree=1", "natural=stub"};
  std::ostringstream out, err;
  const auto r = cli::cmdStrength({dir / "corpus"}, args, config, out, err);
  REQUIRE(r.exitCode == cli::kSuccess);
  CHECK(r.engineQueries == 12);
  const auto rows = csvRows(kt::readFile(config.outDir / "strength.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"network", "hit_rate", "hits", "positions", "kl_mean", "kl_max"});
  // One-hot policy puts all mass on the search's top move: every position is a hit.
  CHECK(rows[1][0] == "agree");
  CHECK(rows[1][2] == std::to_string(kPositions));
  CHECK(rows[1][3] == std::to_string(kPositions));
  // Forced disagreement: the policy argmax is never the top move.
  CHECK(rows[2][0] == "disagree");
  CHECK(rows[2][2] == "0");
  CHECK(rows[2][3] == std::to_string(kPositions));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double rate = std::stod(rows[i][1]);
    const double hits = std::stod(rows[i][2]), positions = std::stod(rows[i][3]);
    CHECK(std::round(rate * 1e4) == std::round(hits / positions * 1e4));
  }

  // Histogram counts add up to the positions of each network.
  std::map<std::string, int> binned;
  const auto hist = csvRows(kt::readFile(config.outDir / "kl_histogram.csv"));
  for (std::size_t i = 1; i < hist.size(); ++i) binned[hist[i][0]] += std::stoi(hist[i][3]);
  CHECK(binned["agree"] == kPositions);
  CHECK(binned["natural"] == kPositions);
  const auto perPos = csvRows(kt::readFile(config.outDir / "kl_positions.csv"));
  CHECK(perPos.size() == 1 + 3 * static_cast<std::size_t>(kPositions));
  const auto spec = nlohmann::json::parse(kt::readFile(config.outDir / "kl_histogram.vl.json"));
  CHECK(spec["data"]["values"].size() == hist.size() - 1);

  args.networks = {"dup=stub", "dup=stub"};
  CHECK_THROWS_AS(cli::cmdStrength({dir / "corpus"}, args, config, out, err), std::invalid_argument);
  args.networks = {"nolabel"};
  CHECK_THROWS_AS(cli::cmdStrength({dir / "corpus"}, args, config, out, err), std::invalid_argument);
  CHECK_THROWS_AS(cli::cmdStrength({dir / "empty"}, args, config, out, err), std::exception);
}

TEST_CASE("strength: seeded position sampling") {
  const auto dir = kt::scratchDir("cli-sample");
  writeSmallCorpus(dir / "corpus");
  cli::StrengthArgs args;
  args.networks = {"a=stub", "b=stub:shape=one-hot"};
  args.samplePositions = true;
  auto picks = [&](std::uint64_t seed, const std::string& sub) {
    auto config = stubConfig(dir / sub);
    config.seed = seed;
    std::ostringstream out, err;
    REQUIRE(cli::cmdStrength({dir / "corpus"}, args, config, out, err).exitCode == cli::kSuccess);
    return std::pair{kt::readFile(config.outDir / "sampled_positions.csv"), kt::readFile(config.outDir / "strength.csv")};
  };
  const auto first = picks(9, "one");
  const auto second = picks(9, "two");
  CHECK(first == second);
  const auto rows = csvRows(first.first);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int turn = std::stoi(rows[i][2]);
    CHECK(turn >= 0);
    CHECK(turn < kGameMoves[i - 1]);
    CHECK(rows[i][3] == "9");
  }
  const auto strength = csvRows(first.second);
  CHECK(strength[1][3] == "4");
  CHECK(strength[2][2] == "4");
  bool differs = false;
  for (std::uint64_t s = 10; s < 20 && !differs; ++s) differs = picks(s, "other").first != first.first;
  CHECK(differs);
}

TEST_CASE("calibrate: 21 rows, matching plot data, zero spread without noise") {
  const auto dir = kt::scratchDir("cli-calibrate");
  const auto games = writeSmallCorpus(dir);
  auto config = stubConfig(dir);
  cli::CalibrateArgs args;
  args.turn = 6;
  std::ostringstream out, err;
  REQUIRE(cli::cmdCalibrate(games[3], args, config, out, err).exitCode == cli::kSuccess);
  const auto rows = csvRows(kt::readFile(config.outDir / "calibration.csv"));
  REQUIRE(rows.size() == 22);
  const auto spec = nlohmann::json::parse(kt::readFile(config.outDir / "calibration.vl.json"));
  CHECK(spec["data"]["values"].size() == 21);
  std::map<std::string, std::set<std::string>> klByVisits;
  for (std::size_t i = 1; i < rows.size(); ++i) klByVisits[rows[i][0]].insert(rows[i][2]);
  CHECK(klByVisits.size() == 3);
  for (const auto& [v, kls] : klByVisits) CHECK(kls.size() == 1);

  config.stub = "noise=1";
  config.outDir = dir / "noisy";
  REQUIRE(cli::cmdCalibrate(games[3], args, config, out, err).exitCode == cli::kSuccess);
  const auto noisy = csvRows(kt::readFile(config.outDir / "calibration.csv"));
  std::set<std::string> at1000;
  for (std::size_t i = 1; i < noisy.size(); ++i)
    if (noisy[i][0] == "1000") at1000.insert(noisy[i][2]);
  CHECK(at1000.size() > 1);

  args.turn = 13;
  CHECK_THROWS_AS(cli::cmdCalibrate(games[3], args, config, out, err), std::invalid_argument);
}

TEST_CASE("fixtures through the report command") {
  const auto dir = kt::scratchDir("cli-fixtures");
  const fixtures::FixtureOptions fo;
  kt::writeFile(dir / "perfect.sgf", writeSgf(fixtures::perfectPlayerGame(fo)));
  kt::writeFile(dir / "noisy.sgf", writeSgf(fixtures::noisyHumanGame(fo)));
  auto config = stubConfig(dir);
  config.visits = fo.maxVisits;
  std::ostringstream out, err;
  REQUIRE(cli::cmdReport({dir / "perfect.sgf", dir / "noisy.sgf"}, config, out, err).exitCode == cli::kSuccess);
  const auto perfect = parseReportJson(kt::readFile(config.outDir / "perfect" / "report.json"));
  CHECK(perfect.white.level == SuspicionLevel::Strong);
  const auto noisy = parseReportJson(kt::readFile(config.outDir / "noisy" / "report.json"));
  CHECK(noisy.black.level == SuspicionLevel::None);
  CHECK(noisy.white.level == SuspicionLevel::None);
}

TEST_CASE("reruns produce byte-identical outputs") {
  const auto dir = kt::scratchDir("cli-determinism");
  writeSmallCorpus(dir / "corpus");
  const auto game = (dir / "corpus" / "g4.sgf").string();
  auto run = [&](const std::string& tag) {
    const auto base = dir / tag;
    const std::string common = "--stub --seed 5 --visits 300 --cache-dir " + (base / "cache").string() + " --out " +
                               (base / "out").string() + " ";
    REQUIRE(runCli(common + "report " + game, dir).exitCode == 0);
    REQUIRE(runCli(common + "strength " + (dir / "corpus").string() +
                       " --network a=stub --network b=stub:shape=uniform-k --sample-positions",
                   dir)
                .exitCode == 0);
    REQUIRE(runCli(common + "calibrate " + game + " --turn 3 --visit-grid 10,100,1000", dir).exitCode == 0);
    return std::pair{readTree(base / "out"), readTree(base / "cache")};
  };
  const auto a = run("first");
  const auto b = run("second");
  CHECK(a.first.size() >= 14);
  CHECK(a.first == b.first);
  CHECK(a.second.size() == b.second.size());
  // Warm cache: same outputs again.
  const auto c = run("first");
  CHECK(c.first == a.first);
}

TEST_CASE("the example configuration file applies cleanly") {
  cli::Config c;
  cli::applyConfigFile(c, kt::dataDir() / ".." / ".." / "config" / "kibitz.conf");
  CHECK_NOTHROW(cli::validate(c));
  CHECK(c.stub == "seed=1");
  CHECK(c.visits == 1600);
  CHECK(c.thresholdsFile == fs::path("config/thresholds.conf"));
}
