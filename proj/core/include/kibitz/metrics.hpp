#pragma once

// Move effects, network/search agreement and per-player aggregates computed
// from Black-perspective TurnAnalysis sequences.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kibitz/analysis.hpp"
#include "kibitz/board.hpp"
#include "kibitz/engine.hpp"

namespace kibitz {

inline constexpr double kPolicyFloor = 1e-10;

struct WeightedMove {
  std::string move;
  double probability = 0.0;
};

// pi': candidate visits normalized.
struct VisitDistribution {
  std::vector<WeightedMove> entries;
  std::vector<std::pair<std::string, int>> sourceVisits;
};

// p': raw policy restricted to the visited support and renormalized.
struct RestrictedPolicy {
  std::vector<WeightedMove> entries;
};

// Throws EmptySupport when no candidate has visits.
VisitDistribution visitDistribution(const TurnAnalysis& a);
// Throws MissingPolicy.
RestrictedPolicy restrictPolicy(const TurnAnalysis& a, const VisitDistribution& support, double floor = kPolicyFloor);

// sum p ln(p/q) over entries with p > 0; q must be positive there.
double klDivergence(std::span<const double> p, std::span<const double> q);

// D(p' || pi') in nats, clamped at 0.
double searchGapKL(const TurnAnalysis& a);

// Score change caused by a move, in the mover's perspective.
double effect(const TurnAnalysis& prev, const TurnAnalysis& next, Color mover);

// Whether the most visited candidate is the raw-policy argmax. nullopt when the
// position is excluded (top candidate is a pass the policy has no entry for).
// Throws MissingPolicy or EmptySupport.
std::optional<bool> isHit(const TurnAnalysis& a);

struct HitRateResult {
  double rate = 0.0;
  int hits = 0;
  int positions = 0;
};
HitRateResult hitRate(std::span<const TurnAnalysis> turns);

struct TurnMetrics {
  int turnIndex = 0;
  Color mover = Color::Black;
  std::string move;                  // engine coordinate of the played move
  std::optional<double> effect;      // absent when the next position was not analyzed
  std::optional<double> blackDelta;  // raw mu(s_{i+1}) - mu(s_i)
  std::optional<bool> hit;           // absent without policy or when excluded
  std::optional<double> klDivergence;
  std::optional<int> actualRank;     // 1-based by visits; absent when the move was not searched
  double bestScoreMean = 0.0;        // mover perspective from here on
  std::optional<double> actualScoreMean;
  double avgScoreMean = 0.0;
  double medianScoreMean = 0.0;
  double moverWinrate = 0.5;
  double rootWinrate = 0.5;          // Black perspective
  double rootScoreMean = 0.0;        // Black perspective
};

struct MetricsOptions {
  // Weight the candidate average and median by visits.
  bool visitWeighted = false;
};

struct TurnMetricsResult {
  std::vector<TurnMetrics> turns;
  std::vector<std::string> warnings;
};

// analyses[i] must describe the position before moves[i]; one extra trailing
// analysis (the final position) is allowed. Fewer analyses than moves yields
// metrics for the analyzed prefix. Throws MisalignedTurns.
TurnMetricsResult turnMetrics(std::span<const Move> moves, std::span<const TurnAnalysis> analyses, int boardSize,
                              const MetricsOptions& options = {});

struct PlayerSummary {
  Color color = Color::Black;
  int moves = 0;          // analyzed moves
  int measuredMoves = 0;  // moves with an effect
  double averageEffect = 0.0;
  double effectStdDev = 0.0;  // population
  std::vector<double> cmaSeries;
  double hitRate = 0.0;
  int hits = 0;
  int hitPositions = 0;
  std::map<int, double> topKMatchRate;
  std::optional<int> winrate98Turn;
  double avgEffectPre98 = 0.0;
  int movesPre98 = 0;
  std::optional<double> avgEffectPost98;
  int movesPost98 = 0;
  // Lowest mover win rate on the player's turns from winrate98Turn on.
  std::optional<double> minWinratePost98;
  std::optional<double> klMean;
  std::optional<double> klMax;
  friend bool operator==(const PlayerSummary&, const PlayerSummary&) = default;
};

// Throws NoMovesForColor when the player has no measured move.
PlayerSummary playerSummary(std::span<const TurnMetrics> metrics, Color color, double winThreshold = 0.98);

struct CalibrationRow {
  int visits = 0;
  int run = 0;
  double kl = 0.0;
};

// Fresh analyses of one position (position before move `turn`) for every
// (visits, run) pair. Engine errors propagate.
std::vector<CalibrationRow> calibrationRun(EngineHandle& engine, const AnalysisQuery& position,
                                           std::span<const int> visitGrid, int repeats);

struct Histogram {
  double binWidth = 0.1;
  std::vector<double> edges;  // bins + 1
  std::vector<int> counts;
};

struct NetworkPositions {
  std::string label;
  std::vector<TurnAnalysis> positions;
};

struct StrengthRow {
  std::string label;
  HitRateResult hit;
  double klMean = 0.0;
  double klMax = 0.0;
  std::vector<double> kls;
  Histogram histogram;
};

// Histograms share bin edges across networks. Throws EmptySupport when no
// network or an empty position set is given.
std::vector<StrengthRow> strengthBench(std::span<const NetworkPositions> networks, double binWidth = 0.1);

// One turn index per game, uniform over [0, moveCounts[i]), or -1 for a game
// without moves. Portable: the same seed gives the same picks everywhere.
std::vector<int> samplePositions(std::span<const int> moveCounts, std::uint64_t seed);

}  // namespace kibitz
