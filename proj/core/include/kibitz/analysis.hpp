#pragma once

// Engine analysis data and the line-delimited JSON wire format spoken by
// KataGo-style analysis engines.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kibitz/board.hpp"

namespace kibitz {

// Which response field is read as the root/candidate score.
enum class ScoreField { ScoreLead, ScoreMean };
std::string_view scoreFieldName(ScoreField f);
ScoreField parseScoreField(std::string_view s);

inline constexpr double kIllegalPolicy = -1.0;

struct CandidateMove {
  std::string move;  // engine coordinate or "pass"
  int visits = 0;
  double winrate = 0.0;    // Black perspective after normalization
  double scoreMean = 0.0;  // Black-positive points after normalization
  double prior = 0.0;
  std::vector<std::string> pv;
  friend bool operator==(const CandidateMove&, const CandidateMove&) = default;
};

struct TurnAnalysis {
  int turnIndex = 0;
  int boardSize = 19;
  double rootScoreMean = 0.0;  // mu(s), Black-positive
  double rootWinrate = 0.5;    // V(s), Black perspective
  std::vector<CandidateMove> candidates;
  // size*size+1 entries, row-major from the top-left, pass last; kIllegalPolicy marks illegal points.
  std::optional<std::vector<double>> rawPolicy;
  std::int64_t totalVisits = 0;
  friend bool operator==(const TurnAnalysis&, const TurnAnalysis&) = default;
};

struct AnalysisQuery {
  struct Placement {
    Color color;
    std::string coord;  // engine coordinate
  };
  std::string id;
  std::vector<Placement> moves;
  std::vector<Placement> initialStones;
  std::optional<Color> initialPlayer;
  std::string rules = "tromp-taylor";
  double komi = 7.5;
  int boardSize = 19;
  std::vector<int> analyzeTurns;
  int maxVisits = 1600;
  bool includePolicy = true;
};

std::string encodeQuery(const AnalysisQuery& q);
// Throws ProtocolError on malformed input.
AnalysisQuery decodeQuery(std::string_view line);

// Side to move before the move at `turn` (the engine's own convention: the
// opposite of the previous mover, or initialPlayer/Black at turn 0).
Color sideToMove(const AnalysisQuery& q, int turn);

// One decoded engine output line.
struct AnalysisResponse {
  std::string id;
  int turnNumber = 0;
  TurnAnalysis analysis;  // side-to-move perspective, as delivered
};
struct ErrorResponse {
  std::string id;
  std::string message;
};
struct WarningResponse {
  std::string id;
  std::string message;
};
struct ActionResponse {
  std::string id;
  std::string action;
};
using ResponseLine = std::variant<AnalysisResponse, ErrorResponse, WarningResponse, ActionResponse>;

// Throws ProtocolError (carrying the raw line) if the line is not a
// well-formed response. boardSize is only used to fill TurnAnalysis::boardSize.
ResponseLine decodeResponse(std::string_view line, ScoreField field, int boardSize);

// Converts side-to-move winrates/scores to Black perspective.
TurnAnalysis toBlackPerspective(TurnAnalysis a, Color toMove);

// Cache/serialization form of a TurnAnalysis (Black perspective, one line).
std::string encodeTurnAnalysis(const TurnAnalysis& a);
TurnAnalysis decodeTurnAnalysis(std::string_view line);

// Throws ProtocolError when an invariant of TurnAnalysis is broken.
void validateTurnAnalysis(const TurnAnalysis& a);

// 64-bit FNV-1a, hex encoded; used for content addressing.
std::string contentHash(std::string_view bytes);

}  // namespace kibitz
