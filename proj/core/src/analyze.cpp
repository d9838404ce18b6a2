#include "kibitz/analyze.hpp"

#include <sstream>

namespace kibitz {

AnalysisQuery buildQuery(const GameRecord& record, const Replay& replayed, const AnalyzeOptions& options) {
  AnalysisQuery q;
  q.boardSize = record.size;
  q.komi = options.komiOverride.value_or(record.komi);
  q.rules = options.rules;
  q.maxVisits = options.maxVisits;
  q.includePolicy = options.includePolicy;
  for (const auto& s : record.setupStones) q.initialStones.push_back({s.color, toEngineCoord(s.point, record.size)});
  for (const auto& m : replayed.moves) q.moves.push_back({m.color, toEngineCoord(m.point, record.size)});
  q.initialPlayer = replayed.states.front().toMove();
  if (options.turns) {
    q.analyzeTurns = *options.turns;
  } else {
    const int n = static_cast<int>(q.moves.size());
    for (int t = 0; t < n; ++t) q.analyzeTurns.push_back(t);
    if (options.analyzeFinal) q.analyzeTurns.push_back(n);
  }
  q.id = "g" + gameContentHash(q) + "-v" + std::to_string(q.maxVisits);
  return q;
}

std::string gameContentHash(const AnalysisQuery& q) {
  std::ostringstream s;
  s << "size=" << q.boardSize << ";komi=" << q.komi << ";rules=" << q.rules
    << ";policy=" << q.includePolicy << ";first=" << (q.initialPlayer == Color::White ? 'W' : 'B') << ";setup=";
  for (const auto& p : q.initialStones) s << (p.color == Color::Black ? 'B' : 'W') << p.coord << ',';
  s << ";moves=";
  for (const auto& p : q.moves) s << (p.color == Color::Black ? 'B' : 'W') << p.coord << ',';
  s << ";turns=";
  for (int t : q.analyzeTurns) s << t << ',';
  return contentHash(s.str());
}

std::vector<TurnAnalysis> normalizeOutcome(const AnalysisQuery& query, std::vector<TurnAnalysis> raw) {
  std::vector<TurnAnalysis> out;
  out.reserve(raw.size());
  for (auto& t : raw) {
    t.boardSize = query.boardSize;
    const Color mover = sideToMove(query, t.turnIndex);
    TurnAnalysis b = toBlackPerspective(std::move(t), mover);
    validateTurnAnalysis(b);
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

CacheMetadata metadataFor(const EngineHandle& engine, const AnalysisQuery& q, const std::string& hash) {
  CacheMetadata m;
  m.gameHash = hash;
  m.engine = engine.options().engineName;
  m.network = engine.options().networkLabel;
  m.visits = q.maxVisits;
  m.scoreField = std::string(scoreFieldName(engine.options().scoreField));
  return m;
}

}  // namespace

std::optional<GameAnalysis> cachedAnalysis(const GameRecord& record, const AnalyzeOptions& options,
                                           const std::string& network, const AnalysisCache& cache) {
  const Replay replayed = replay(record, ReplayOptions{options.lenient});
  const AnalysisQuery q = buildQuery(record, replayed, options);
  const std::string hash = gameContentHash(q);
  auto turns = cache.load(CacheKey{hash, network, q.maxVisits});
  if (!turns) return std::nullopt;
  return GameAnalysis{std::move(*turns), hash, true};
}

GameAnalysis analyzeGame(EngineHandle& engine, const GameRecord& record, const AnalyzeOptions& options,
                         const AnalysisCache* cache) {
  const Replay replayed = replay(record, ReplayOptions{options.lenient});
  AnalysisQuery q = buildQuery(record, replayed, options);
  const std::string hash = gameContentHash(q);
  const CacheKey key{hash, engine.options().networkLabel, q.maxVisits};

  if (cache) {
    if (auto hit = cache->load(key)) return GameAnalysis{std::move(*hit), hash, true};
  }

  QueryOutcome outcome = engine.run(q);
  std::vector<TurnAnalysis> turns;
  std::exception_ptr error = outcome.error;
  try {
    turns = normalizeOutcome(q, std::move(outcome.turns));
  } catch (...) {
    if (!error) error = std::current_exception();
  }

  if (error) {
    if (cache && !turns.empty()) {
      CacheMetadata meta = metadataFor(engine, q, hash);
      meta.complete = false;
      try {
        std::rethrow_exception(error);
      } catch (const std::exception& e) {
        meta.error = e.what();
      }
      cache->store(key, meta, turns);
    }
    std::rethrow_exception(error);
  }
  if (cache) cache->store(key, metadataFor(engine, q, hash), turns);
  return GameAnalysis{std::move(turns), hash, false};
}

}  // namespace kibitz
