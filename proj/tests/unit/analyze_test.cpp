#include <doctest.h>

#include <filesystem>
#include <thread>

#include "kibitz/analyze.hpp"
#include "kibitz/stub_engine.hpp"
#include "scripted_transport.hpp"
#include "test_util.hpp"

using namespace kibitz;
namespace kt = kibitz::testing;

namespace {

GameRecord twoMoveGame() { return parseSgf("(;SZ[9]KM[7];B[ee];W[cc])").record; }

TurnAnalysis sampleTurn(int turn) {
  TurnAnalysis a;
  a.turnIndex = turn;
  a.boardSize = 9;
  a.rootWinrate = 0.5 + 0.01 * turn;
  a.rootScoreMean = 0.5 * turn;
  a.candidates = {{"E5", 10, 0.5, 0.25, 0.5, {"E5", "C3"}}};
  a.totalVisits = 10;
  return a;
}

std::string line(const std::string& id, int turn, double winrate, double lead) {
  return R"({"id":")" + id + R"(","turnNumber":)" + std::to_string(turn) + R"(,"rootInfo":{"winrate":)" +
         std::to_string(winrate) + R"(,"scoreLead":)" + std::to_string(lead) +
         R"(},"moveInfos":[{"move":"E5","visits":4,"winrate":)" + std::to_string(winrate) + R"(,"scoreLead":)" +
         std::to_string(lead) + R"(,"prior":0.5}]})";
}

}  // namespace

TEST_CASE("cache round trip and partial entries") {
  const auto dir = kt::scratchDir("cache-roundtrip");
  AnalysisCache cache(dir);
  const CacheKey key{"abc123", "net-a", 400};
  CHECK_FALSE(cache.load(key));
  CHECK_FALSE(cache.loadEntry(key));

  CacheMetadata m;
  m.gameHash = "abc123";
  m.engine = "stub";
  m.network = "net-a";
  m.visits = 400;
  const std::vector<TurnAnalysis> turns = {sampleTurn(0), sampleTurn(1)};
  cache.store(key, m, turns);
  const auto loaded = cache.load(key);
  REQUIRE(loaded);
  CHECK(*loaded == turns);

  m.complete = false;
  m.error = "engine went away";
  cache.store(key, m, {sampleTurn(0)});
  CHECK_FALSE(cache.load(key));
  const auto entry = cache.loadEntry(key);
  REQUIRE(entry);
  CHECK(entry->metadata == m);
  CHECK(entry->turns.size() == 1);

  CHECK(cache.pathFor(key) != cache.pathFor({"abc123", "net-b", 400}));
  CHECK(cache.pathFor(key) != cache.pathFor({"abc123", "net-a", 800}));
  CHECK(decodeCacheMetadata(encodeCacheMetadata(m)) == m);

  kt::writeFile(cache.pathFor(key), "{\"kind\":\"something else\"}\n");
  CHECK_THROWS_AS(cache.loadEntry(key), ProtocolError);
  kt::writeFile(cache.pathFor(key), encodeCacheMetadata(m) + "\nnot json\n");
  CHECK_THROWS_AS(cache.loadEntry(key), ProtocolError);
}

TEST_CASE("buildQuery covers setup, handicap, komi override and the final position") {
  const auto rec = parseSgf("(;SZ[9]KM[0.5]HA[2]AB[cc][gg];W[ee];B[ce])").record;
  const auto rep = replay(rec);
  AnalyzeOptions o;
  o.maxVisits = 50;
  auto q = buildQuery(rec, rep, o);
  CHECK(q.initialStones.size() == 2);
  CHECK(q.initialStones[0].coord == "C7");
  CHECK(q.initialPlayer == Color::White);
  CHECK(q.komi == 0.5);
  CHECK(q.analyzeTurns == std::vector<int>{0, 1});
  CHECK(q.moves[1].coord == "C5");

  o.analyzeFinal = true;
  o.komiOverride = 6.5;
  const auto q2 = buildQuery(rec, rep, o);
  CHECK(q2.analyzeTurns == std::vector<int>{0, 1, 2});
  CHECK(q2.komi == 6.5);
  CHECK(gameContentHash(q2) != gameContentHash(q));
  CHECK(q2.id != q.id);
  CHECK(buildQuery(rec, rep, o).id == q2.id);

  o.turns = std::vector<int>{1};
  CHECK(buildQuery(rec, rep, o).analyzeTurns == std::vector<int>{1});
}

TEST_CASE("analyzeGame converts White-to-move answers to Black perspective") {
  auto shared = std::make_shared<kt::ScriptedTransport::Shared>();
  EngineHandle h(std::make_unique<kt::ScriptedTransport>(shared), {});
  const auto rec = twoMoveGame();
  AnalyzeOptions o;
  o.analyzeFinal = true;

  GameAnalysis result;
  std::thread worker([&] { result = analyzeGame(h, rec, o, nullptr); });
  REQUIRE(kt::waitWritten(*shared, 1));
  const auto q = decodeQuery(shared->written[0]);
  REQUIRE(q.analyzeTurns == std::vector<int>{0, 1, 2});
  // Turn 1 is White to move: White's 30% is Black's 70%.
  kt::emit(*shared, line(q.id, 0, 0.55, 0.5));
  kt::emit(*shared, line(q.id, 1, 0.3, -2.0));
  kt::emit(*shared, line(q.id, 2, 0.6, 1.0));
  worker.join();

  REQUIRE(result.turns.size() == 3);
  CHECK(result.turns[0].rootWinrate == doctest::Approx(0.55));
  CHECK(result.turns[1].rootWinrate == doctest::Approx(0.7));
  CHECK(result.turns[1].rootScoreMean == doctest::Approx(2.0));
  CHECK(result.turns[1].candidates[0].winrate == doctest::Approx(0.7));
  CHECK(result.turns[1].candidates[0].scoreMean == doctest::Approx(2.0));
  CHECK(result.turns[2].rootWinrate == doctest::Approx(0.6));
  CHECK_FALSE(result.fromCache);
}

TEST_CASE("second analysis of the same game is served from the cache") {
  const auto dir = kt::scratchDir("cache-hit");
  AnalysisCache cache(dir);
  StubConfig c;
  c.seed = 21;
  EngineOptions eo;
  eo.engineName = "stub";
  eo.networkLabel = "stub-net";
  auto engine = stubEngine(c, eo);
  const auto rec = parseSgf(kt::readFile(kt::dataDir() / "corpus" / "game05.sgf")).record;
  AnalyzeOptions o;
  o.maxVisits = 100;

  CHECK_FALSE(cachedAnalysis(rec, o, "stub-net", cache));
  const auto first = analyzeGame(*engine, rec, o, &cache);
  CHECK(engine->queriesSent() == 1);
  CHECK_FALSE(first.fromCache);
  CHECK(first.turns.size() == rec.moves.size());

  const auto second = analyzeGame(*engine, rec, o, &cache);
  CHECK(engine->queriesSent() == 1);
  CHECK(second.fromCache);
  CHECK(second.turns == first.turns);
  CHECK(second.gameHash == first.gameHash);

  const auto viaLookup = cachedAnalysis(rec, o, "stub-net", cache);
  REQUIRE(viaLookup);
  CHECK(viaLookup->turns == first.turns);
  CHECK_FALSE(cachedAnalysis(rec, o, "other-net", cache));

  // A fresh engine with the same cache sends nothing either.
  auto fresh = stubEngine(c, eo);
  (void)analyzeGame(*fresh, rec, o, &cache);
  CHECK(fresh->queriesSent() == 0);

  const auto entry = cache.loadEntry({first.gameHash, "stub-net", 100});
  REQUIRE(entry);
  CHECK(entry->metadata.engine == "stub");
  CHECK(entry->metadata.complete);
}

TEST_CASE("a failed analysis leaves a partial cache entry") {
  const auto dir = kt::scratchDir("cache-partial");
  AnalysisCache cache(dir);
  auto shared = std::make_shared<kt::ScriptedTransport::Shared>();
  EngineOptions eo;
  eo.networkLabel = "n";
  EngineHandle h(std::make_unique<kt::ScriptedTransport>(shared), eo);
  const auto rec = twoMoveGame();
  AnalyzeOptions o;

  std::exception_ptr failure;
  std::thread worker([&] {
    try {
      (void)analyzeGame(h, rec, o, &cache);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  REQUIRE(kt::waitWritten(*shared, 1));
  const auto q = decodeQuery(shared->written[0]);
  kt::emit(*shared, line(q.id, 0, 0.5, 0.0));
  kt::emit(*shared, R"({"id":")" + q.id + R"(","turnNumber":1,"rootInfo":{"winr)");
  worker.join();
  REQUIRE(failure);
  CHECK_THROWS_AS(std::rethrow_exception(failure), ProtocolError);

  const auto entry = cache.loadEntry({gameContentHash(q), "n", q.maxVisits});
  REQUIRE(entry);
  CHECK_FALSE(entry->metadata.complete);
  CHECK_FALSE(entry->metadata.error.empty());
  REQUIRE(entry->turns.size() == 1);
  CHECK(entry->turns[0].turnIndex == 0);
  CHECK_FALSE(cache.load({gameContentHash(q), "n", q.maxVisits}));
}

TEST_CASE("invalid engine numbers are rejected after normalization") {
  auto shared = std::make_shared<kt::ScriptedTransport::Shared>();
  EngineHandle h(std::make_unique<kt::ScriptedTransport>(shared), {});
  const auto rec = twoMoveGame();
  std::exception_ptr failure;
  std::thread worker([&] {
    try {
      (void)analyzeGame(h, rec, {}, nullptr);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  REQUIRE(kt::waitWritten(*shared, 1));
  const auto q = decodeQuery(shared->written[0]);
  kt::emit(*shared, line(q.id, 0, 1.5, 0.0));
  kt::emit(*shared, line(q.id, 1, 0.5, 0.0));
  worker.join();
  REQUIRE(failure);
  CHECK_THROWS_AS(std::rethrow_exception(failure), ProtocolError);
}

TEST_CASE("illegal records surface IllegalMove before any query") {
  auto engine = stubEngine(StubConfig{});
  const auto rec = parseSgf("(;SZ[9];B[ee];W[ee])").record;
  CHECK_THROWS_AS(analyzeGame(*engine, rec, {}, nullptr), IllegalMove);
  CHECK(engine->queriesSent() == 0);
  AnalyzeOptions lenient;
  lenient.lenient = true;
  CHECK(analyzeGame(*engine, rec, lenient, nullptr).turns.size() == 1);
}
