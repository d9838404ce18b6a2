#pragma once

// Per-game suspicion evidence: indicators, suspicion levels, text/JSON
// reports and plot specifications.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kibitz/analysis.hpp"
#include "kibitz/metrics.hpp"
#include "kibitz/replay.hpp"
#include "kibitz/sgf.hpp"

namespace kibitz {

inline constexpr int kReportSchemaVersion = 1;

enum class Verdict { Suspicious, Clean, Inconclusive };
enum class Direction { Above, Below };
enum class SuspicionLevel { None, Weak, Strong };
std::string_view verdictName(Verdict v);
std::string_view directionName(Direction d);
std::string_view suspicionLevelName(SuspicionLevel s);

struct Indicator {
  std::string name;
  int step = 1;  // 1 win rate, 2 average effect, 3 engine agreement
  double value = 0.0;
  double threshold = 0.0;
  // Suspicious when value >= threshold (Above) or value <= threshold (Below).
  Direction direction = Direction::Above;
  Verdict verdict = Verdict::Inconclusive;
  std::string narrative;
  friend bool operator==(const Indicator&, const Indicator&) = default;
};

namespace indicator_names {
inline constexpr const char* kDrawdown = "winrate_drawdown";
inline constexpr const char* kAverageEffect = "average_effect";
inline constexpr const char* kPost98 = "post98_sloppiness";
inline constexpr const char* kTopMatch = "top1_match";
inline constexpr const char* kVolatility = "volatility_adjusted_effect";
}  // namespace indicator_names

// Defaults are implementer-chosen, not calibrated.
struct Thresholds {
  double averageEffect = -0.35;
  double top1Match = 0.55;
  double drawdownPoints = 5.0;
  double drawdownStart = 0.60;
  double post98Degradation = 0.3;
  double winThreshold = 0.98;
  // Lowest mover win rate after the 98% turn that still counts as pinned.
  double pinnedWinrate = 0.95;
  double volatilityRatio = 0.25;
  int minMoves = 20;
  int minPost98Moves = 5;

  // "key = value" lines; '#' starts a comment. Unknown keys are an error.
  static Thresholds parse(std::string_view text);
  static Thresholds load(const std::filesystem::path& path);
  std::string dump() const;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Inputs of the indicators that are not part of PlayerSummary.
struct PlayerSeries {
  std::vector<int> turns;
  std::vector<double> winrate;          // player perspective, every analyzed position
  std::vector<double> bestMinusMedian;  // one per own analyzed move
};

struct IndicatorSet {
  std::vector<Indicator> indicators;
  bool insufficientData = false;
};

IndicatorSet buildIndicators(const PlayerSummary& summary, const PlayerSeries& series, const Thresholds& thresholds);

struct SuspicionResult {
  SuspicionLevel level = SuspicionLevel::None;
  std::vector<std::string> trace;
};
SuspicionResult suspicionLevel(std::span<const Indicator> indicators);

struct TimingStats {
  int moves = 0;
  double meanSeconds = 0.0;
  double medianSeconds = 0.0;
  double maxSeconds = 0.0;
  friend bool operator==(const TimingStats&, const TimingStats&) = default;
};

struct ScorePoint {
  int turn = 0;
  double best = 0.0;
  std::optional<double> actual;
  double avg = 0.0;
  double median = 0.0;
  friend bool operator==(const ScorePoint&, const ScorePoint&) = default;
};

struct CmaPoint {
  int turn = 0;
  double cma = 0.0;
  friend bool operator==(const CmaPoint&, const CmaPoint&) = default;
};

struct WinratePoint {
  int turn = 0;
  double blackWinrate = 0.5;
  double blackScoreMean = 0.0;
  friend bool operator==(const WinratePoint&, const WinratePoint&) = default;
};

struct PlayerReport {
  Color color = Color::Black;
  std::string name;
  bool insufficientData = false;
  PlayerSummary summary;
  std::vector<Indicator> indicators;
  SuspicionLevel level = SuspicionLevel::None;
  std::vector<std::string> trace;
  std::vector<ScorePoint> scoreSeries;  // mover perspective
  std::vector<CmaPoint> cmaSeries;
  std::optional<TimingStats> timing;
  friend bool operator==(const PlayerReport&, const PlayerReport&) = default;
};

struct GameInfo {
  std::string blackName;
  std::string whiteName;
  int boardSize = 19;
  double komi = 0.0;
  int handicap = 0;
  std::optional<std::string> result;
  int moves = 0;
  int analyzedPositions = 0;
  std::string gameHash;
  std::string engine;
  std::string network;
  int visits = 0;
  std::string scoreField = "scoreLead";
  friend bool operator==(const GameInfo&, const GameInfo&) = default;
};

struct SuspicionReport {
  int schemaVersion = kReportSchemaVersion;
  GameInfo game;
  Thresholds thresholds;
  std::vector<WinratePoint> winrateSeries;
  PlayerReport black;
  PlayerReport white;
  std::vector<std::string> warnings;
  friend bool operator==(const SuspicionReport&, const SuspicionReport&) = default;

  const PlayerReport& player(Color c) const { return c == Color::Black ? black : white; }
};

struct ReportContext {
  std::string gameHash;
  std::string engine;
  std::string network;
  int visits = 0;
  std::string scoreField = "scoreLead";
};

// analyses are Black-perspective and aligned with replayed.moves.
SuspicionReport buildReport(const GameRecord& record, const Replay& replayed, std::span<const TurnAnalysis> analyses,
                            const Thresholds& thresholds, const ReportContext& context);

// Seconds spent per move, from consecutive BL/WL values of one player.
std::optional<TimingStats> timingStats(const GameRecord& record, Color color);

enum class ReportFormat { Text, Json };
std::string emitReport(const SuspicionReport& report, ReportFormat format);
// Inverse of the JSON form. Throws ProtocolError.
SuspicionReport parseReportJson(std::string_view text);

// Writes winrate, score_black, score_white and effect_cma as .vl.json and
// .csv. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> emitPlotSpecs(const SuspicionReport& report, const std::filesystem::path& outDir);

}  // namespace kibitz
