#include <benchmark/benchmark.h>

#include <numeric>

#include "kibitz/analyze.hpp"
#include "kibitz/metrics.hpp"
#include "kibitz/random.hpp"
#include "kibitz/sgf.hpp"
#include "kibitz/stub_engine.hpp"

using namespace kibitz;

namespace {

TurnAnalysis randomAnalysis(int candidates, std::uint64_t seed) {
  constexpr int size = 19;
  Rng rng(seed);
  TurnAnalysis a;
  a.boardSize = size;
  std::vector<int> slots(size * size);
  std::iota(slots.begin(), slots.end(), 0);
  for (int i = 0; i < candidates; ++i) {
    std::swap(slots[static_cast<std::size_t>(i)], slots[i + rng.below(slots.size() - i)]);
    const int s = slots[static_cast<std::size_t>(i)];
    const int v = 1 + static_cast<int>(rng.below(2000));
    a.candidates.push_back({toEngineCoord(Point{s % size, s / size}, size), v, 0.5, 0.0, 0.0, {}});
    a.totalVisits += v;
  }
  std::vector<double> policy(size * size + 1);
  for (auto& p : policy) p = rng.exponential(1.0);
  const double total = std::accumulate(policy.begin(), policy.end(), 0.0);
  for (auto& p : policy) p /= total;
  a.rawPolicy = std::move(policy);
  return a;
}

GameRecord benchGame(int moves) {
  GameRecord rec;
  rec.size = 19;
  rec.komi = 7.5;
  BoardState board(19);
  Rng rng(3);
  for (int i = 0; i < moves; ++i) {
    std::vector<Point> legal;
    for (int y = 0; y < 19; ++y)
      for (int x = 0; x < 19; ++x)
        if (board.isLegal({x, y})) legal.push_back({x, y});
    const Move m = Move::play(board.toMove(), legal[rng.below(legal.size())]);
    board = board.applyMove(m);
    rec.moves.push_back(m);
  }
  return rec;
}

void BM_SearchGapKL(benchmark::State& state) {
  const auto a = randomAnalysis(static_cast<int>(state.range(0)), 42);
  for (auto _ : state) benchmark::DoNotOptimize(searchGapKL(a));
}
BENCHMARK(BM_SearchGapKL)->Arg(1)->Arg(10)->Arg(50)->Arg(200)->Arg(361);

void BM_ParseSgf(benchmark::State& state) {
  const std::string text = writeSgf(benchGame(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(parseSgf(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseSgf)->Arg(50)->Arg(250);

void BM_Replay(benchmark::State& state) {
  const auto rec = benchGame(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(replay(rec));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Replay)->Arg(50)->Arg(250);

void BM_StubAnalyzeGame(benchmark::State& state) {
  const auto rec = benchGame(100);
  auto engine = stubEngine(StubConfig{});
  AnalyzeOptions o;
  o.maxVisits = 400;
  for (auto _ : state) benchmark::DoNotOptimize(analyzeGame(*engine, rec, o, nullptr));
}
BENCHMARK(BM_StubAnalyzeGame)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
