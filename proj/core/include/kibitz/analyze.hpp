#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kibitz/cache.hpp"
#include "kibitz/engine.hpp"
#include "kibitz/replay.hpp"
#include "kibitz/sgf.hpp"

namespace kibitz {

struct AnalyzeOptions {
  int maxVisits = 1600;
  bool includePolicy = true;
  std::string rules = "tromp-taylor";
  std::optional<double> komiOverride;
  // Also analyze the position after the last move.
  bool analyzeFinal = false;
  // Explicit turn list; defaults to every position before a move.
  std::optional<std::vector<int>> turns;
  bool lenient = false;
};

struct GameAnalysis {
  std::vector<TurnAnalysis> turns;  // Black perspective, ascending turn index
  std::string gameHash;
  bool fromCache = false;
};

// The query for a replayed game; its id is derived from the content hash.
AnalysisQuery buildQuery(const GameRecord& record, const Replay& replayed, const AnalyzeOptions& options);

// Hash of everything that determines the engine's answer except network and visits.
std::string gameContentHash(const AnalysisQuery& query);

// Analyzes (or loads from cache) one game. Partial results are written to the
// cache as an incomplete entry before the error is rethrown.
GameAnalysis analyzeGame(EngineHandle& engine, const GameRecord& record, const AnalyzeOptions& options,
                         const AnalysisCache* cache);

// Cache lookup only; nullopt when the game has not been analyzed with these settings.
std::optional<GameAnalysis> cachedAnalysis(const GameRecord& record, const AnalyzeOptions& options,
                                           const std::string& network, const AnalysisCache& cache);

// Converts one query's raw outcome to Black perspective and validates it.
std::vector<TurnAnalysis> normalizeOutcome(const AnalysisQuery& query, std::vector<TurnAnalysis> raw);

}  // namespace kibitz
