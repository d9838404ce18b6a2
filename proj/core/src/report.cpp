#include "kibitz/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kibitz {

using json = nlohmann::ordered_json;

std::string_view verdictName(Verdict v) {
  switch (v) {
    case Verdict::Suspicious: return "suspicious";
    case Verdict::Clean: return "clean";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view directionName(Direction d) { return d == Direction::Above ? "above" : "below"; }

std::string_view suspicionLevelName(SuspicionLevel s) {
  switch (s) {
    case SuspicionLevel::None: return "none";
    case SuspicionLevel::Weak: return "weak";
    case SuspicionLevel::Strong: return "strong";
  }
  return "none";
}

namespace {

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

template <typename E, std::size_t N>
E enumFrom(const std::string& s, const std::array<E, N>& values, std::string_view (*name)(E)) {
  for (E v : values)
    if (name(v) == s) return v;
  throw ProtocolError("unknown value '" + s + "'");
}

struct ThresholdKey {
  const char* key;
  double Thresholds::*real;
  int Thresholds::*integer;
};

constexpr ThresholdKey kThresholdKeys[] = {
    {"average-effect", &Thresholds::averageEffect, nullptr},
    {"top1-match", &Thresholds::top1Match, nullptr},
    {"drawdown-points", &Thresholds::drawdownPoints, nullptr},
    {"drawdown-start", &Thresholds::drawdownStart, nullptr},
    {"post98-degradation", &Thresholds::post98Degradation, nullptr},
    {"win-threshold", &Thresholds::winThreshold, nullptr},
    {"pinned-winrate", &Thresholds::pinnedWinrate, nullptr},
    {"volatility-ratio", &Thresholds::volatilityRatio, nullptr},
    {"min-moves", nullptr, &Thresholds::minMoves},
    {"min-post98-moves", nullptr, &Thresholds::minPost98Moves},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Verdict decide(double value, double threshold, Direction d) {
  const bool hit = d == Direction::Above ? value >= threshold : value <= threshold;
  return hit ? Verdict::Suspicious : Verdict::Clean;
}

char letterOf(const std::string& name) {
  using namespace indicator_names;
  if (name == kDrawdown) return 'a';
  if (name == kAverageEffect) return 'b';
  if (name == kPost98) return 'c';
  if (name == kTopMatch) return 'd';
  if (name == kVolatility) return 'e';
  return '?';
}

double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

json optionalNumber(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }
json optionalInt(const std::optional<int>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> readOptional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::optional<int> readOptionalInt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

Thresholds Thresholds::parse(std::string_view text) {
  Thresholds t;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("thresholds line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto* k = std::find_if(std::begin(kThresholdKeys), std::end(kThresholdKeys),
                                 [&](const ThresholdKey& c) { return key == c.key; });
    if (k == std::end(kThresholdKeys))
      throw std::invalid_argument("thresholds line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
    try {
      std::size_t used = 0;
      if (k->real) {
        t.*(k->real) = std::stod(value, &used);
      } else {
        t.*(k->integer) = std::stoi(value, &used);
      }
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("thresholds line " + std::to_string(lineNo) + ": bad value '" + value + "'");
    }
  }
  return t;
}

Thresholds Thresholds::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read thresholds file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

std::string Thresholds::dump() const {
  std::string out;
  for (const auto& k : kThresholdKeys) {
    out += k.key;
    out += " = ";
    out += k.real ? json(this->*(k.real)).dump() : std::to_string(this->*(k.integer));
    out += '\n';
  }
  return out;
}

IndicatorSet buildIndicators(const PlayerSummary& summary, const PlayerSeries& series, const Thresholds& th) {
  using namespace indicator_names;
  IndicatorSet set;
  set.insufficientData = summary.moves < th.minMoves;

  {
    Indicator ind{kDrawdown, 1, 0.0, th.drawdownPoints, Direction::Below, Verdict::Inconclusive, {}};
    const auto& w = series.winrate;
    if (w.empty()) {
      ind.narrative = "no analyzed positions";
    } else {
      std::size_t start = 0;
      bool reached = false;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] >= th.drawdownStart) {
          start = i;
          reached = true;
          break;
        }
      double peak = w[start], drop = 0.0;
      for (std::size_t i = start; i < w.size(); ++i) {
        peak = std::max(peak, w[i]);
        drop = std::max(drop, peak - w[i]);
      }
      ind.value = 100.0 * drop;
      ind.verdict = decide(ind.value, ind.threshold, ind.direction);
      const std::string from = reached ? "after first reaching " + fmt(100.0 * th.drawdownStart, 0) + "% at turn " +
                                             std::to_string(series.turns.empty() ? 0 : series.turns[start])
                                       : "over the whole game (never reached " + fmt(100.0 * th.drawdownStart, 0) + "%)";
      ind.narrative = "largest win-rate drop " + fmt(ind.value, 1) + " points " + from;
    }
    set.indicators.push_back(std::move(ind));
  }

  {
    Indicator ind{kAverageEffect, 2, summary.averageEffect, th.averageEffect, Direction::Above, Verdict::Inconclusive, {}};
    if (summary.measuredMoves > 0) {
      ind.verdict = decide(ind.value, ind.threshold, ind.direction);
      ind.narrative = "average effect " + fmt(ind.value) + " points over " + std::to_string(summary.measuredMoves) +
                      " moves (std " + fmt(summary.effectStdDev) + ")";
    } else {
      ind.narrative = "no measured moves";
    }
    set.indicators.push_back(std::move(ind));
  }

  {
    Indicator ind{kPost98, 2, 0.0, th.post98Degradation, Direction::Above, Verdict::Inconclusive, {}};
    if (!summary.winrate98Turn) {
      ind.narrative = "win rate never reached " + fmt(100.0 * th.winThreshold, 0) + "%";
    } else if (summary.movesPost98 < th.minPost98Moves || summary.movesPre98 < 1 || !summary.avgEffectPost98) {
      ind.narrative = "too few moves around turn " + std::to_string(*summary.winrate98Turn) + " (" +
                      std::to_string(summary.movesPre98) + " before, " + std::to_string(summary.movesPost98) + " after)";
    } else {
      ind.value = summary.avgEffectPre98 - *summary.avgEffectPost98;
      const double low = summary.minWinratePost98.value_or(0.0);
      const std::string detail = "average effect " + fmt(summary.avgEffectPre98) + " before turn " +
                                 std::to_string(*summary.winrate98Turn) + ", " + fmt(*summary.avgEffectPost98) +
                                 " after; lowest win rate after " + fmt(100.0 * low, 1) + "%";
      if (low < th.pinnedWinrate) {
        ind.narrative = detail + ", so the win rate was not pinned";
      } else {
        ind.verdict = decide(ind.value, ind.threshold, ind.direction);
        ind.narrative = detail;
      }
    }
    set.indicators.push_back(std::move(ind));
  }

  {
    const auto it = summary.topKMatchRate.find(1);
    const double rate = it == summary.topKMatchRate.end() ? 0.0 : it->second;
    Indicator ind{kTopMatch, 3, rate, th.top1Match, Direction::Above, Verdict::Inconclusive, {}};
    if (summary.moves > 0) {
      ind.verdict = decide(ind.value, ind.threshold, ind.direction);
      std::string ks;
      for (const auto& [k, r] : summary.topKMatchRate) ks += " top-" + std::to_string(k) + " " + fmt(100.0 * r, 1) + "%";
      ind.narrative = "matched engine choices:" + ks;
    } else {
      ind.narrative = "no analyzed moves";
    }
    set.indicators.push_back(std::move(ind));
  }

  {
    Indicator ind{kVolatility, 3, 0.0, th.volatilityRatio, Direction::Below, Verdict::Inconclusive, {}};
    const double spread = mean(series.bestMinusMedian);
    if (summary.measuredMoves == 0 || series.bestMinusMedian.empty() || spread <= 1e-9) {
      ind.narrative = "candidate spread unavailable";
    } else {
      ind.value = -summary.averageEffect / spread;
      ind.verdict = decide(ind.value, ind.threshold, ind.direction);
      ind.narrative = "points lost per move " + fmt(-summary.averageEffect) + " against mean best-to-median spread " +
                      fmt(spread);
    }
    set.indicators.push_back(std::move(ind));
  }

  if (set.insufficientData)
    for (auto& ind : set.indicators) {
      ind.verdict = Verdict::Inconclusive;
      ind.narrative = "insufficient data: " + std::to_string(summary.moves) + " analyzed moves, at least " +
                      std::to_string(th.minMoves) + " needed";
    }
  return set;
}

SuspicionResult suspicionLevel(std::span<const Indicator> indicators) {
  SuspicionResult r;
  std::string fired;
  std::set<int> steps;
  int count = 0;
  for (const auto& ind : indicators) {
    if (ind.verdict != Verdict::Suspicious) continue;
    ++count;
    steps.insert(ind.step);
    fired += std::string(fired.empty() ? "" : " ") + "(" + letterOf(ind.name) + ")";
  }
  std::string stepText;
  for (int s : steps) stepText += std::string(stepText.empty() ? "" : " ") + std::to_string(s);
  r.trace.push_back("suspicious indicators: " + std::to_string(count) + (fired.empty() ? "" : " " + fired));
  r.trace.push_back("steps covered: " + (stepText.empty() ? std::string("none") : stepText));
  const bool strong = count >= 3 && steps.count(1) && steps.count(2) && steps.count(3);
  const bool weak = count >= 2;
  r.trace.push_back(std::string("rule strong (3 or more suspicious, covering steps 1, 2 and 3): ") +
                    (strong ? "fired" : "not fired"));
  if (!strong) r.trace.push_back(std::string("rule weak (2 or more suspicious): ") + (weak ? "fired" : "not fired"));
  r.level = strong ? SuspicionLevel::Strong : weak ? SuspicionLevel::Weak : SuspicionLevel::None;
  return r;
}

std::optional<TimingStats> timingStats(const GameRecord& record, Color color) {
  std::vector<double> spent;
  std::optional<double> last;
  for (std::size_t i = 0; i < record.moves.size() && i < record.timeLeft.size(); ++i) {
    if (record.moves[i].color != color || !record.timeLeft[i]) continue;
    if (last && *last >= *record.timeLeft[i]) spent.push_back(*last - *record.timeLeft[i]);
    last = record.timeLeft[i];
  }
  if (spent.empty()) return std::nullopt;
  TimingStats t;
  t.moves = static_cast<int>(spent.size());
  t.meanSeconds = mean(spent);
  t.maxSeconds = *std::max_element(spent.begin(), spent.end());
  std::sort(spent.begin(), spent.end());
  const std::size_t n = spent.size();
  t.medianSeconds = n % 2 ? spent[n / 2] : 0.5 * (spent[n / 2 - 1] + spent[n / 2]);
  return t;
}

SuspicionReport buildReport(const GameRecord& record, const Replay& replayed, std::span<const TurnAnalysis> analyses,
                            const Thresholds& thresholds, const ReportContext& context) {
  SuspicionReport r;
  r.thresholds = thresholds;
  r.game.blackName = record.blackName;
  r.game.whiteName = record.whiteName;
  r.game.boardSize = record.size;
  r.game.komi = record.komi;
  r.game.handicap = record.handicap;
  r.game.result = record.result;
  r.game.moves = static_cast<int>(replayed.moves.size());
  r.game.analyzedPositions = static_cast<int>(analyses.size());
  r.game.gameHash = context.gameHash;
  r.game.engine = context.engine;
  r.game.network = context.network;
  r.game.visits = context.visits;
  r.game.scoreField = context.scoreField;
  r.warnings = replayed.warnings;

  const TurnMetricsResult tm = turnMetrics(replayed.moves, analyses, record.size);
  r.warnings.insert(r.warnings.end(), tm.warnings.begin(), tm.warnings.end());
  for (const auto& a : analyses) r.winrateSeries.push_back({a.turnIndex, a.rootWinrate, a.rootScoreMean});

  for (Color c : {Color::Black, Color::White}) {
    PlayerReport& p = c == Color::Black ? r.black : r.white;
    p.color = c;
    p.name = record.playerName(c);
    try {
      p.summary = playerSummary(tm.turns, c, thresholds.winThreshold);
    } catch (const NoMovesForColor&) {
      p.summary = PlayerSummary{};
      p.summary.color = c;
      for (const auto& m : tm.turns) p.summary.moves += m.mover == c;
    }

    PlayerSeries series;
    for (const auto& a : analyses) {
      series.turns.push_back(a.turnIndex);
      series.winrate.push_back(c == Color::Black ? a.rootWinrate : 1.0 - a.rootWinrate);
    }
    for (const auto& m : tm.turns) {
      if (m.mover != c) continue;
      series.bestMinusMedian.push_back(m.bestScoreMean - m.medianScoreMean);
      p.scoreSeries.push_back({m.turnIndex, m.bestScoreMean, m.actualScoreMean, m.avgScoreMean, m.medianScoreMean});
    }
    std::size_t k = 0;
    for (const auto& m : tm.turns)
      if (m.mover == c && m.effect && k < p.summary.cmaSeries.size()) p.cmaSeries.push_back({m.turnIndex, p.summary.cmaSeries[k++]});

    IndicatorSet set = buildIndicators(p.summary, series, thresholds);
    p.insufficientData = set.insufficientData;
    p.indicators = std::move(set.indicators);
    SuspicionResult level = suspicionLevel(p.indicators);
    p.level = level.level;
    p.trace = std::move(level.trace);
    if (p.insufficientData) p.trace.insert(p.trace.begin(), "insufficient data: every indicator is inconclusive");
    p.timing = timingStats(record, c);
  }
  return r;
}

namespace {

json summaryJson(const PlayerSummary& s) {
  json j;
  j["moves"] = s.moves;
  j["measuredMoves"] = s.measuredMoves;
  j["averageEffect"] = s.averageEffect;
  j["effectStdDev"] = s.effectStdDev;
  j["cmaSeries"] = s.cmaSeries;
  j["hitRate"] = s.hitRate;
  j["hits"] = s.hits;
  j["hitPositions"] = s.hitPositions;
  json top = json::object();
  for (const auto& [k, v] : s.topKMatchRate) top[std::to_string(k)] = v;
  j["topKMatchRate"] = std::move(top);
  j["winrate98Turn"] = optionalInt(s.winrate98Turn);
  j["avgEffectPre98"] = s.avgEffectPre98;
  j["movesPre98"] = s.movesPre98;
  j["avgEffectPost98"] = optionalNumber(s.avgEffectPost98);
  j["movesPost98"] = s.movesPost98;
  j["minWinratePost98"] = optionalNumber(s.minWinratePost98);
  j["klMean"] = optionalNumber(s.klMean);
  j["klMax"] = optionalNumber(s.klMax);
  return j;
}

PlayerSummary summaryFrom(const json& j, Color c) {
  PlayerSummary s;
  s.color = c;
  s.moves = j.at("moves").get<int>();
  s.measuredMoves = j.at("measuredMoves").get<int>();
  s.averageEffect = j.at("averageEffect").get<double>();
  s.effectStdDev = j.at("effectStdDev").get<double>();
  s.cmaSeries = j.at("cmaSeries").get<std::vector<double>>();
  s.hitRate = j.at("hitRate").get<double>();
  s.hits = j.at("hits").get<int>();
  s.hitPositions = j.at("hitPositions").get<int>();
  for (const auto& [k, v] : j.at("topKMatchRate").items()) s.topKMatchRate[std::stoi(k)] = v.get<double>();
  s.winrate98Turn = readOptionalInt(j.at("winrate98Turn"));
  s.avgEffectPre98 = j.at("avgEffectPre98").get<double>();
  s.movesPre98 = j.at("movesPre98").get<int>();
  s.avgEffectPost98 = readOptional(j.at("avgEffectPost98"));
  s.movesPost98 = j.at("movesPost98").get<int>();
  s.minWinratePost98 = readOptional(j.at("minWinratePost98"));
  s.klMean = readOptional(j.at("klMean"));
  s.klMax = readOptional(j.at("klMax"));
  return s;
}

json playerJson(const PlayerReport& p) {
  json j;
  j["color"] = std::string(colorName(p.color));
  j["name"] = p.name;
  j["suspicionLevel"] = std::string(suspicionLevelName(p.level));
  j["insufficientData"] = p.insufficientData;
  json inds = json::array();
  for (const auto& i : p.indicators) {
    json ij;
    ij["name"] = i.name;
    ij["step"] = i.step;
    ij["value"] = i.value;
    ij["threshold"] = i.threshold;
    ij["direction"] = std::string(directionName(i.direction));
    ij["verdict"] = std::string(verdictName(i.verdict));
    ij["narrative"] = i.narrative;
    inds.push_back(std::move(ij));
  }
  j["indicators"] = std::move(inds);
  j["trace"] = p.trace;
  j["summary"] = summaryJson(p.summary);
  json score = json::array();
  for (const auto& s : p.scoreSeries)
    score.push_back({{"turn", s.turn}, {"best", s.best}, {"actual", optionalNumber(s.actual)}, {"avg", s.avg},
                     {"median", s.median}});
  j["scoreSeries"] = std::move(score);
  json cma = json::array();
  for (const auto& c : p.cmaSeries) cma.push_back({{"turn", c.turn}, {"cma", c.cma}});
  j["cmaSeries"] = std::move(cma);
  if (p.timing)
    j["timing"] = {{"moves", p.timing->moves},
                   {"meanSeconds", p.timing->meanSeconds},
                   {"medianSeconds", p.timing->medianSeconds},
                   {"maxSeconds", p.timing->maxSeconds}};
  else
    j["timing"] = nullptr;
  return j;
}

PlayerReport playerFrom(const json& j) {
  PlayerReport p;
  p.color = j.at("color").get<std::string>() == "white" ? Color::White : Color::Black;
  p.name = j.at("name").get<std::string>();
  p.level = enumFrom(j.at("suspicionLevel").get<std::string>(),
                     std::array{SuspicionLevel::None, SuspicionLevel::Weak, SuspicionLevel::Strong}, suspicionLevelName);
  p.insufficientData = j.at("insufficientData").get<bool>();
  for (const auto& ij : j.at("indicators")) {
    Indicator i;
    i.name = ij.at("name").get<std::string>();
    i.step = ij.at("step").get<int>();
    i.value = ij.at("value").get<double>();
    i.threshold = ij.at("threshold").get<double>();
    i.direction = enumFrom(ij.at("direction").get<std::string>(), std::array{Direction::Above, Direction::Below},
                           directionName);
    i.verdict = enumFrom(ij.at("verdict").get<std::string>(),
                         std::array{Verdict::Suspicious, Verdict::Clean, Verdict::Inconclusive}, verdictName);
    i.narrative = ij.at("narrative").get<std::string>();
    p.indicators.push_back(std::move(i));
  }
  p.trace = j.at("trace").get<std::vector<std::string>>();
  p.summary = summaryFrom(j.at("summary"), p.color);
  for (const auto& s : j.at("scoreSeries"))
    p.scoreSeries.push_back({s.at("turn").get<int>(), s.at("best").get<double>(), readOptional(s.at("actual")),
                             s.at("avg").get<double>(), s.at("median").get<double>()});
  for (const auto& c : j.at("cmaSeries")) p.cmaSeries.push_back({c.at("turn").get<int>(), c.at("cma").get<double>()});
  if (const auto& t = j.at("timing"); !t.is_null())
    p.timing = TimingStats{t.at("moves").get<int>(), t.at("meanSeconds").get<double>(),
                           t.at("medianSeconds").get<double>(), t.at("maxSeconds").get<double>()};
  return p;
}

const char* kCaveat =
    "This report lists statistical evidence only. Engine statistics are no hard evidence of cheating; "
    "a human arbiter has to weigh them together with everything else known about the game.";
const char* kThresholdNote = "Thresholds are implementer-chosen defaults, not calibrated values.";

std::string handicapBanner(int handicap) {
  return "HANDICAP " + std::to_string(handicap) +
         ": score means behave differently in handicap games; weigh the indicators accordingly.";
}

std::string textReport(const SuspicionReport& r) {
  std::ostringstream o;
  const GameInfo& g = r.game;
  o << "kibitz suspicion report (schema " << r.schemaVersion << ")\n";
  o << "Game: Black " << (g.blackName.empty() ? "?" : g.blackName) << " vs White "
    << (g.whiteName.empty() ? "?" : g.whiteName) << ", " << g.boardSize << "x" << g.boardSize << ", komi "
    << json(g.komi).dump() << ", result " << g.result.value_or("?") << "\n";
  o << "Moves: " << g.moves << ", analyzed positions: " << g.analyzedPositions << "\n";
  o << "Engine: " << g.engine << ", network " << g.network << ", " << g.visits << " visits, score field "
    << g.scoreField << "\n";
  if (g.handicap > 0) o << handicapBanner(g.handicap) << "\n";
  o << "\n" << kCaveat << "\n" << kThresholdNote << "\n";

  for (const PlayerReport* p : {&r.black, &r.white}) {
    const PlayerSummary& s = p->summary;
    o << "\n== " << (p->color == Color::Black ? "Black" : "White") << ": " << (p->name.empty() ? "?" : p->name)
      << " ==\n";
    o << "Suspicion level: " << suspicionLevelName(p->level) << (p->insufficientData ? " (insufficient data)" : "")
      << "\n";
    o << "Average effect " << fmt(s.averageEffect) << " (std " << fmt(s.effectStdDev) << ", " << s.measuredMoves
      << " moves); hit rate " << fmt(100.0 * s.hitRate, 1) << "% (" << s.hits << "/" << s.hitPositions << ")";
    if (s.klMean) o << "; KL mean " << fmt(*s.klMean, 4) << ", max " << fmt(*s.klMax, 4);
    o << "\n";
    if (s.winrate98Turn)
      o << "Win rate first reached " << fmt(100.0 * r.thresholds.winThreshold, 0) << "% at turn " << *s.winrate98Turn
        << "\n";
    o << "Indicators:\n";
    for (const auto& i : p->indicators)
      o << "  (" << letterOf(i.name) << ") step " << i.step << " " << i.name << ": " << fmt(i.value) << ", suspicious "
        << (i.direction == Direction::Above ? ">= " : "<= ") << fmt(i.threshold) << " -> " << verdictName(i.verdict)
        << "; " << i.narrative << "\n";
    o << "Rule trace:\n";
    for (const auto& t : p->trace) o << "  " << t << "\n";
    if (p->timing)
      o << "Time per move: mean " << fmt(p->timing->meanSeconds, 1) << "s, median " << fmt(p->timing->medianSeconds, 1)
        << "s, max " << fmt(p->timing->maxSeconds, 1) << "s over " << p->timing->moves << " moves\n";
  }
  if (!r.warnings.empty()) {
    o << "\nWarnings:\n";
    for (const auto& w : r.warnings) o << "  " << w << "\n";
  }
  return o.str();
}

json reportJson(const SuspicionReport& r) {
  json j;
  j["schema"] = "kibitz-report";
  j["schemaVersion"] = r.schemaVersion;
  j["caveat"] = kCaveat;
  const GameInfo& g = r.game;
  j["game"] = {{"black", g.blackName},
               {"white", g.whiteName},
               {"boardSize", g.boardSize},
               {"komi", g.komi},
               {"handicap", g.handicap},
               {"result", g.result ? json(*g.result) : json(nullptr)},
               {"moves", g.moves},
               {"analyzedPositions", g.analyzedPositions},
               {"gameHash", g.gameHash},
               {"engine", g.engine},
               {"network", g.network},
               {"visits", g.visits},
               {"scoreField", g.scoreField}};
  j["handicapBanner"] = g.handicap > 0 ? json(handicapBanner(g.handicap)) : json(nullptr);
  json th = json::object();
  for (const auto& k : kThresholdKeys) th[k.key] = k.real ? json(r.thresholds.*(k.real)) : json(r.thresholds.*(k.integer));
  j["thresholds"] = std::move(th);
  json wr = json::array();
  for (const auto& w : r.winrateSeries)
    wr.push_back({{"turn", w.turn}, {"blackWinrate", w.blackWinrate}, {"blackScoreMean", w.blackScoreMean}});
  j["winrateSeries"] = std::move(wr);
  j["players"] = json::array({playerJson(r.black), playerJson(r.white)});
  j["warnings"] = r.warnings;
  return j;
}

void writeFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content) || !out.flush()) throw IoError("cannot write " + path.string());
}

std::string num(double x) { return json(x).dump(); }

json lineSpec(const std::string& title, json values, json encoding) {
  json spec;
  spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
  spec["title"] = title;
  spec["width"] = 720;
  spec["height"] = 280;
  spec["data"] = {{"values", std::move(values)}};
  spec["mark"] = {{"type", "line"}, {"interpolate", "linear"}};
  spec["encoding"] = std::move(encoding);
  return spec;
}

}  // namespace

std::string emitReport(const SuspicionReport& report, ReportFormat format) {
  if (format == ReportFormat::Text) return textReport(report);
  return reportJson(report).dump(2) + "\n";
}

SuspicionReport parseReportJson(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema") != "kibitz-report") throw ProtocolError("not a kibitz report");
    SuspicionReport r;
    r.schemaVersion = j.at("schemaVersion").get<int>();
    if (r.schemaVersion != kReportSchemaVersion)
      throw ProtocolError("report schema " + std::to_string(r.schemaVersion) + " is not supported");
    const json& g = j.at("game");
    r.game.blackName = g.at("black").get<std::string>();
    r.game.whiteName = g.at("white").get<std::string>();
    r.game.boardSize = g.at("boardSize").get<int>();
    r.game.komi = g.at("komi").get<double>();
    r.game.handicap = g.at("handicap").get<int>();
    if (!g.at("result").is_null()) r.game.result = g["result"].get<std::string>();
    r.game.moves = g.at("moves").get<int>();
    r.game.analyzedPositions = g.at("analyzedPositions").get<int>();
    r.game.gameHash = g.at("gameHash").get<std::string>();
    r.game.engine = g.at("engine").get<std::string>();
    r.game.network = g.at("network").get<std::string>();
    r.game.visits = g.at("visits").get<int>();
    r.game.scoreField = g.at("scoreField").get<std::string>();
    for (const auto& k : kThresholdKeys) {
      const json& v = j.at("thresholds").at(k.key);
      if (k.real)
        r.thresholds.*(k.real) = v.get<double>();
      else
        r.thresholds.*(k.integer) = v.get<int>();
    }
    for (const auto& w : j.at("winrateSeries"))
      r.winrateSeries.push_back(
          {w.at("turn").get<int>(), w.at("blackWinrate").get<double>(), w.at("blackScoreMean").get<double>()});
    const json& players = j.at("players");
    if (!players.is_array() || players.size() != 2) throw ProtocolError("report must list two players");
    r.black = playerFrom(players[0]);
    r.white = playerFrom(players[1]);
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed report: ") + e.what());
  }
}

std::vector<std::filesystem::path> emitPlotSpecs(const SuspicionReport& report, const std::filesystem::path& outDir) {
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw IoError("cannot create " + outDir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& stem, const json& spec, const std::string& csv) {
    const auto specPath = outDir / (stem + ".vl.json");
    const auto csvPath = outDir / (stem + ".csv");
    writeFile(specPath, spec.dump(2) + "\n");
    writeFile(csvPath, csv);
    written.push_back(specPath);
    written.push_back(csvPath);
  };

  {
    json values = json::array();
    std::string csv = "turn,black_winrate,black_score_mean\n";
    for (const auto& w : report.winrateSeries) {
      values.push_back({{"turn", w.turn}, {"black_winrate", w.blackWinrate}, {"black_score_mean", w.blackScoreMean}});
      csv += std::to_string(w.turn) + "," + num(w.blackWinrate) + "," + num(w.blackScoreMean) + "\n";
    }
    json enc = {{"x", {{"field", "turn"}, {"type", "quantitative"}, {"title", "Move"}}},
                {"y",
                 {{"field", "black_winrate"},
                  {"type", "quantitative"},
                  {"title", "Black win rate"},
                  {"scale", {{"domain", json::array({0, 1})}}}}}};
    emit("winrate", lineSpec("Win rate (Black)", std::move(values), std::move(enc)), csv);
  }

  for (const PlayerReport* p : {&report.black, &report.white}) {
    const std::string who = p->color == Color::Black ? "black" : "white";
    json values = json::array();
    std::string csv = "turn,series,score_mean\n";
    auto row = [&](int turn, const char* series, double v) {
      values.push_back({{"turn", turn}, {"series", series}, {"score_mean", v}});
      csv += std::to_string(turn) + "," + series + "," + num(v) + "\n";
    };
    for (const auto& s : p->scoreSeries) {
      row(s.turn, "best", s.best);
      if (s.actual) row(s.turn, "actual", *s.actual);
      row(s.turn, "avg", s.avg);
      row(s.turn, "median", s.median);
    }
    json enc = {{"x", {{"field", "turn"}, {"type", "quantitative"}, {"title", "Move"}}},
                {"y", {{"field", "score_mean"}, {"type", "quantitative"}, {"title", "Score mean (points, mover)"}}},
                {"color",
                 {{"field", "series"},
                  {"type", "nominal"},
                  {"scale", {{"domain", json::array({"best", "actual", "avg", "median"})}}}}}};
    const std::string title = "Score mean, " + who + (p->name.empty() ? "" : " (" + p->name + ")");
    emit("score_" + who, lineSpec(title, std::move(values), std::move(enc)), csv);
  }

  {
    json values = json::array();
    std::string csv = "player,turn,cma\n";
    for (const PlayerReport* p : {&report.black, &report.white}) {
      const std::string who = p->color == Color::Black ? "black" : "white";
      for (const auto& c : p->cmaSeries) {
        values.push_back({{"player", who}, {"turn", c.turn}, {"cma", c.cma}});
        csv += who + "," + std::to_string(c.turn) + "," + num(c.cma) + "\n";
      }
    }
    json enc = {{"x", {{"field", "turn"}, {"type", "quantitative"}, {"title", "Move"}}},
                {"y", {{"field", "cma"}, {"type", "quantitative"}, {"title", "Average effect so far (points)"}}},
                {"color", {{"field", "player"}, {"type", "nominal"}}}};
    emit("effect_cma", lineSpec("Cumulative average effect", std::move(values), std::move(enc)), csv);
  }
  return written;
}

}  // namespace kibitz
