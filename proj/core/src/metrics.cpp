#include "kibitz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "kibitz/random.hpp"

namespace kibitz {

namespace {

// Policy slot of an engine move string, or -1 if it cannot be parsed.
int slotOf(const std::string& move, int size) {
  try {
    return policyIndex(fromEngineCoord(move, size), size);
  } catch (const MalformedCoordinate&) {
    return -1;
  }
}

double policyAt(const std::vector<double>& policy, int slot) {
  if (slot < 0 || static_cast<std::size_t>(slot) >= policy.size()) return 0.0;
  return std::max(policy[static_cast<std::size_t>(slot)], 0.0);
}

std::size_t topCandidate(const TurnAnalysis& a) {
  if (a.candidates.empty()) throw EmptySupport("turn " + std::to_string(a.turnIndex) + " has no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.candidates.size(); ++i)
    if (a.candidates[i].visits > a.candidates[best].visits) best = i;
  return best;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double weightedMedian(std::vector<std::pair<double, double>> xs) {
  std::sort(xs.begin(), xs.end());
  double total = 0.0;
  for (const auto& x : xs) total += x.second;
  double acc = 0.0;
  for (const auto& x : xs) {
    acc += x.second;
    if (acc >= 0.5 * total) return x.first;
  }
  return xs.back().first;
}

double mean(const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size()); }

}  // namespace

VisitDistribution visitDistribution(const TurnAnalysis& a) {
  VisitDistribution d;
  std::int64_t total = 0;
  std::unordered_set<std::string_view> seen;
  for (const auto& c : a.candidates) {
    if (c.visits < 1) continue;
    if (!seen.insert(c.move).second) throw ProtocolError("turn " + std::to_string(a.turnIndex) + " lists " + c.move + " twice");
    d.sourceVisits.emplace_back(c.move, c.visits);
    total += c.visits;
  }
  if (total == 0) throw EmptySupport("turn " + std::to_string(a.turnIndex) + " has no visited moves");
  for (const auto& [move, visits] : d.sourceVisits)
    d.entries.push_back({move, static_cast<double>(visits) / static_cast<double>(total)});
  return d;
}

RestrictedPolicy restrictPolicy(const TurnAnalysis& a, const VisitDistribution& support, double floor) {
  if (!a.rawPolicy) throw MissingPolicy("turn " + std::to_string(a.turnIndex) + " has no raw policy");
  if (support.entries.empty()) throw EmptySupport("empty support");
  RestrictedPolicy r;
  double total = 0.0;
  for (const auto& e : support.entries) {
    const double p = std::max(policyAt(*a.rawPolicy, slotOf(e.move, a.boardSize)), floor);
    r.entries.push_back({e.move, p});
    total += p;
  }
  for (auto& e : r.entries) e.probability /= total;
  return r;
}

double klDivergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

double searchGapKL(const TurnAnalysis& a) {
  if (!a.rawPolicy) throw MissingPolicy("turn " + std::to_string(a.turnIndex) + " has no raw policy");
  const VisitDistribution pi = visitDistribution(a);
  const RestrictedPolicy p = restrictPolicy(a, pi);
  std::vector<double> pv, qv;
  for (std::size_t i = 0; i < pi.entries.size(); ++i) {
    pv.push_back(p.entries[i].probability);
    qv.push_back(pi.entries[i].probability);
  }
  return std::max(0.0, klDivergence(pv, qv));
}

double effect(const TurnAnalysis& prev, const TurnAnalysis& next, Color mover) {
  if (next.turnIndex != prev.turnIndex + 1)
    throw MisalignedTurns("effect needs consecutive turns, got " + std::to_string(prev.turnIndex) + " and " +
                          std::to_string(next.turnIndex));
  const double delta = next.rootScoreMean - prev.rootScoreMean;
  return mover == Color::Black ? delta : -delta;
}

std::optional<bool> isHit(const TurnAnalysis& a) {
  if (!a.rawPolicy) throw MissingPolicy("turn " + std::to_string(a.turnIndex) + " has no raw policy");
  const auto& policy = *a.rawPolicy;
  const int slot = slotOf(a.candidates[topCandidate(a)].move, a.boardSize);
  if (slot < 0 || static_cast<std::size_t>(slot) >= policy.size()) return std::nullopt;
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < policy.size(); ++i)
    if (policy[i] > policy[argmax]) argmax = i;
  return static_cast<std::size_t>(slot) == argmax;
}

HitRateResult hitRate(std::span<const TurnAnalysis> turns) {
  HitRateResult r;
  for (const auto& t : turns) {
    const auto h = isHit(t);
    if (!h) continue;
    ++r.positions;
    if (*h) ++r.hits;
  }
  if (r.positions > 0) r.rate = static_cast<double>(r.hits) / r.positions;
  return r;
}

TurnMetricsResult turnMetrics(std::span<const Move> moves, std::span<const TurnAnalysis> analyses, int boardSize,
                              const MetricsOptions& options) {
  const std::size_t n = moves.size();
  if (analyses.size() > n + 1)
    throw MisalignedTurns(std::to_string(analyses.size()) + " analyses for " + std::to_string(n) + " moves");
  for (std::size_t i = 0; i < analyses.size(); ++i)
    if (analyses[i].turnIndex != static_cast<int>(i))
      throw MisalignedTurns("analysis " + std::to_string(i) + " is for turn " + std::to_string(analyses[i].turnIndex));

  TurnMetricsResult out;
  const std::size_t measured = std::min(n, analyses.size());
  for (std::size_t i = 0; i < measured; ++i) {
    const TurnAnalysis& a = analyses[i];
    const Move& mv = moves[i];
    const double sign = mv.color == Color::Black ? 1.0 : -1.0;
    TurnMetrics m;
    m.turnIndex = static_cast<int>(i);
    m.mover = mv.color;
    m.move = toEngineCoord(mv.point, boardSize);
    m.rootWinrate = a.rootWinrate;
    m.rootScoreMean = a.rootScoreMean;
    m.moverWinrate = mv.color == Color::Black ? a.rootWinrate : 1.0 - a.rootWinrate;
    if (i + 1 < analyses.size()) {
      m.effect = effect(a, analyses[i + 1], mv.color);
      m.blackDelta = analyses[i + 1].rootScoreMean - a.rootScoreMean;
    }

    if (a.candidates.empty()) {
      out.warnings.push_back("turn " + std::to_string(i) + ": engine returned no candidates");
      m.bestScoreMean = m.avgScoreMean = m.medianScoreMean = sign * a.rootScoreMean;
      out.turns.push_back(std::move(m));
      continue;
    }

    const std::size_t top = topCandidate(a);
    m.bestScoreMean = sign * a.candidates[top].scoreMean;
    std::vector<double> scores;
    std::vector<std::pair<double, double>> weighted;
    double weightedSum = 0.0, weightTotal = 0.0;
    const int playedSlot = policyIndex(mv.point, boardSize);
    for (const auto& c : a.candidates) {
      const double s = sign * c.scoreMean;
      scores.push_back(s);
      weighted.emplace_back(s, c.visits);
      weightedSum += s * c.visits;
      weightTotal += c.visits;
      if (!m.actualScoreMean && slotOf(c.move, boardSize) == playedSlot) {
        m.actualScoreMean = s;
        m.actualRank = 1 + static_cast<int>(std::count_if(a.candidates.begin(), a.candidates.end(),
                                                          [&](const CandidateMove& o) { return o.visits > c.visits; }));
      }
    }
    if (options.visitWeighted && weightTotal > 0) {
      m.avgScoreMean = weightedSum / weightTotal;
      m.medianScoreMean = weightedMedian(weighted);
    } else {
      m.avgScoreMean = mean(scores);
      m.medianScoreMean = median(scores);
    }
    if (!m.actualScoreMean)
      out.warnings.push_back("turn " + std::to_string(i) + ": played move " + m.move + " was not searched");

    if (a.rawPolicy) {
      m.hit = isHit(a);
      m.klDivergence = searchGapKL(a);
    }
    out.turns.push_back(std::move(m));
  }
  if (analyses.size() < n)
    out.warnings.push_back("only " + std::to_string(analyses.size()) + " of " + std::to_string(n) +
                           " positions were analyzed");
  return out;
}

PlayerSummary playerSummary(std::span<const TurnMetrics> metrics, Color color, double winThreshold) {
  PlayerSummary s;
  s.color = color;
  std::vector<const TurnMetrics*> rows;
  for (const auto& m : metrics)
    if (m.mover == color) rows.push_back(&m);
  s.moves = static_cast<int>(rows.size());

  std::vector<double> effects;
  for (const auto* m : rows) {
    if (!m->effect) continue;
    effects.push_back(*m->effect);
    s.cmaSeries.push_back(mean(effects));
  }
  if (effects.empty()) throw NoMovesForColor(std::string("no measured moves for ") + std::string(colorName(color)));
  s.measuredMoves = static_cast<int>(effects.size());
  s.averageEffect = mean(effects);
  double ss = 0.0;
  for (double e : effects) ss += (e - s.averageEffect) * (e - s.averageEffect);
  s.effectStdDev = std::sqrt(ss / static_cast<double>(effects.size()));

  std::vector<double> kls;
  for (const auto* m : rows) {
    if (m->hit) {
      ++s.hitPositions;
      if (*m->hit) ++s.hits;
    }
    if (m->klDivergence) kls.push_back(*m->klDivergence);
  }
  if (s.hitPositions > 0) s.hitRate = static_cast<double>(s.hits) / s.hitPositions;
  if (!kls.empty()) {
    s.klMean = mean(kls);
    s.klMax = *std::max_element(kls.begin(), kls.end());
  }

  for (int k : {1, 3, 5}) {
    const auto within = std::count_if(rows.begin(), rows.end(),
                                      [k](const TurnMetrics* m) { return m->actualRank && *m->actualRank <= k; });
    s.topKMatchRate[k] = rows.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(rows.size());
  }

  for (const auto* m : rows)
    if (m->moverWinrate >= winThreshold) {
      s.winrate98Turn = m->turnIndex;
      break;
    }
  std::vector<double> pre, post;
  for (const auto* m : rows) {
    const bool after = s.winrate98Turn && m->turnIndex >= *s.winrate98Turn;
    if (after) s.minWinratePost98 = std::min(s.minWinratePost98.value_or(1.0), m->moverWinrate);
    if (!m->effect) continue;
    (after ? post : pre).push_back(*m->effect);
  }
  s.movesPre98 = static_cast<int>(pre.size());
  s.movesPost98 = static_cast<int>(post.size());
  if (!pre.empty()) s.avgEffectPre98 = mean(pre);
  if (!post.empty()) s.avgEffectPost98 = mean(post);
  return s;
}

std::vector<CalibrationRow> calibrationRun(EngineHandle& engine, const AnalysisQuery& position,
                                           std::span<const int> visitGrid, int repeats) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (position.analyzeTurns.size() != 1) throw std::invalid_argument("calibration needs exactly one analyzed turn");
  std::vector<CalibrationRow> rows;
  for (int visits : visitGrid) {
    if (visits < 1) throw std::invalid_argument("visit counts must be positive");
    for (int run = 0; run < repeats; ++run) {
      AnalysisQuery q = position;
      q.id = position.id + "-cal-v" + std::to_string(visits) + "-r" + std::to_string(run);
      q.maxVisits = visits;
      q.includePolicy = true;
      QueryOutcome outcome = engine.run(std::move(q));
      if (outcome.error) std::rethrow_exception(outcome.error);
      if (outcome.turns.empty()) throw MissingAnalysis("engine returned no analysis for the calibration position");
      outcome.turns.front().boardSize = position.boardSize;
      rows.push_back({visits, run, searchGapKL(outcome.turns.front())});
    }
  }
  return rows;
}

std::vector<StrengthRow> strengthBench(std::span<const NetworkPositions> networks, double binWidth) {
  if (networks.empty()) throw EmptySupport("no networks to compare");
  if (!(binWidth > 0.0)) throw std::invalid_argument("histogram bin width must be positive");
  std::vector<StrengthRow> rows;
  double maxKl = 0.0;
  for (const auto& net : networks) {
    if (net.positions.empty()) throw EmptySupport("network " + net.label + " has no positions");
    StrengthRow r;
    r.label = net.label;
    r.hit = hitRate(net.positions);
    for (const auto& p : net.positions) r.kls.push_back(searchGapKL(p));
    r.klMean = mean(r.kls);
    r.klMax = *std::max_element(r.kls.begin(), r.kls.end());
    maxKl = std::max(maxKl, r.klMax);
    rows.push_back(std::move(r));
  }
  const std::size_t bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(maxKl / binWidth)) + 1);
  for (auto& r : rows) {
    r.histogram.binWidth = binWidth;
    for (std::size_t i = 0; i <= bins; ++i) r.histogram.edges.push_back(binWidth * static_cast<double>(i));
    r.histogram.counts.assign(bins, 0);
    for (double kl : r.kls) ++r.histogram.counts[std::min(bins - 1, static_cast<std::size_t>(kl / binWidth))];
  }
  return rows;
}

std::vector<int> samplePositions(std::span<const int> moveCounts, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out;
  out.reserve(moveCounts.size());
  for (int n : moveCounts) out.push_back(n > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(n))) : -1);
  return out;
}

}  // namespace kibitz
