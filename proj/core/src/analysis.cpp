#include "kibitz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "kibitz/random.hpp"

namespace kibitz {

using json = nlohmann::ordered_json;

std::string_view scoreFieldName(ScoreField f) { return f == ScoreField::ScoreLead ? "scoreLead" : "scoreMean"; }

ScoreField parseScoreField(std::string_view s) {
  if (s == "scoreLead") return ScoreField::ScoreLead;
  if (s == "scoreMean") return ScoreField::ScoreMean;
  throw std::invalid_argument("unknown score field '" + std::string(s) + "' (expected scoreLead or scoreMean)");
}

namespace {

std::string colorLetter(Color c) { return c == Color::Black ? "B" : "W"; }

Color parseColorLetter(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "B" || s == "b") return Color::Black;
  if (s == "W" || s == "w") return Color::White;
  throw ProtocolError("bad color '" + s + "'");
}

json placements(const std::vector<AnalysisQuery::Placement>& ps) {
  json arr = json::array();
  for (const auto& p : ps) arr.push_back(json::array({colorLetter(p.color), p.coord}));
  return arr;
}

std::vector<AnalysisQuery::Placement> readPlacements(const json& j) {
  std::vector<AnalysisQuery::Placement> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ProtocolError("placement must be [color, coord]");
    out.push_back({parseColorLetter(e[0]), e[1].get<std::string>()});
  }
  return out;
}

double number(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw ProtocolError(std::string("missing numeric field '") + key + "'");
  return it->get<double>();
}

}  // namespace

std::string encodeQuery(const AnalysisQuery& q) {
  json j;
  j["id"] = q.id;
  j["moves"] = placements(q.moves);
  j["initialStones"] = placements(q.initialStones);
  if (q.initialPlayer) j["initialPlayer"] = colorLetter(*q.initialPlayer);
  j["rules"] = q.rules;
  j["komi"] = q.komi;
  j["boardXSize"] = q.boardSize;
  j["boardYSize"] = q.boardSize;
  j["analyzeTurns"] = q.analyzeTurns;
  j["maxVisits"] = q.maxVisits;
  j["includePolicy"] = q.includePolicy;
  return j.dump();
}

AnalysisQuery decodeQuery(std::string_view line) {
  try {
    const json j = json::parse(line);
    AnalysisQuery q;
    q.id = j.at("id").get<std::string>();
    q.moves = readPlacements(j.value("moves", json::array()));
    q.initialStones = readPlacements(j.value("initialStones", json::array()));
    if (j.contains("initialPlayer")) q.initialPlayer = parseColorLetter(j["initialPlayer"]);
    q.rules = j.value("rules", std::string("tromp-taylor"));
    q.komi = j.value("komi", 7.5);
    q.boardSize = j.value("boardXSize", 19);
    if (j.value("boardYSize", q.boardSize) != q.boardSize) throw ProtocolError("only square boards are supported");
    if (j.contains("analyzeTurns"))
      q.analyzeTurns = j["analyzeTurns"].get<std::vector<int>>();
    else
      q.analyzeTurns = {static_cast<int>(q.moves.size())};
    q.maxVisits = j.value("maxVisits", 1600);
    q.includePolicy = j.value("includePolicy", false);
    return q;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed query: ") + e.what(), std::string(line));
  }
}

Color sideToMove(const AnalysisQuery& q, int turn) {
  if (turn <= 0 || q.moves.empty()) return q.initialPlayer.value_or(Color::Black);
  return opponent(q.moves[static_cast<std::size_t>(std::min<int>(turn, static_cast<int>(q.moves.size()))) - 1].color);
}

ResponseLine decodeResponse(std::string_view line, ScoreField field, int boardSize) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("engine wrote a line that is not JSON: ") + e.what(), std::string(line));
  }
  try {
    if (!j.is_object()) throw ProtocolError("response is not a JSON object");
    const std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::string();
    if (j.contains("error")) return ErrorResponse{id, j["error"].dump()};
    if (j.contains("warning")) return WarningResponse{id, j["warning"].dump()};
    if (id.empty()) throw ProtocolError("response has no id");
    if (j.contains("action")) return ActionResponse{id, j["action"].get<std::string>()};

    AnalysisResponse r;
    r.id = id;
    r.turnNumber = j.at("turnNumber").get<int>();
    const json& root = j.at("rootInfo");
    const char* key = field == ScoreField::ScoreLead ? "scoreLead" : "scoreMean";
    TurnAnalysis& a = r.analysis;
    a.turnIndex = r.turnNumber;
    a.boardSize = boardSize;
    a.rootWinrate = number(root, "winrate");
    a.rootScoreMean = number(root, key);
    for (const auto& mi : j.at("moveInfos")) {
      CandidateMove c;
      c.move = mi.at("move").get<std::string>();
      c.visits = mi.at("visits").get<int>();
      if (c.visits < 1) continue;
      c.winrate = number(mi, "winrate");
      c.scoreMean = number(mi, key);
      c.prior = mi.value("prior", 0.0);
      if (mi.contains("pv")) c.pv = mi["pv"].get<std::vector<std::string>>();
      a.totalVisits += c.visits;
      a.candidates.push_back(std::move(c));
    }
    if (j.contains("policy")) a.rawPolicy = j["policy"].get<std::vector<double>>();
    return r;
  } catch (const ProtocolError& e) {
    throw ProtocolError(e.what(), std::string(line));
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what(), std::string(line));
  }
}

TurnAnalysis toBlackPerspective(TurnAnalysis a, Color toMove) {
  if (toMove == Color::Black) return a;
  a.rootWinrate = 1.0 - a.rootWinrate;
  a.rootScoreMean = -a.rootScoreMean;
  for (auto& c : a.candidates) {
    c.winrate = 1.0 - c.winrate;
    c.scoreMean = -c.scoreMean;
  }
  return a;
}

std::string encodeTurnAnalysis(const TurnAnalysis& a) {
  json j;
  j["turn"] = a.turnIndex;
  j["boardSize"] = a.boardSize;
  j["scoreMean"] = a.rootScoreMean;
  j["winrate"] = a.rootWinrate;
  j["totalVisits"] = a.totalVisits;
  json cands = json::array();
  for (const auto& c : a.candidates) {
    json cj;
    cj["move"] = c.move;
    cj["visits"] = c.visits;
    cj["winrate"] = c.winrate;
    cj["scoreMean"] = c.scoreMean;
    cj["prior"] = c.prior;
    cj["pv"] = c.pv;
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  j["policy"] = a.rawPolicy ? json(*a.rawPolicy) : json(nullptr);
  return j.dump();
}

TurnAnalysis decodeTurnAnalysis(std::string_view line) {
  try {
    const json j = json::parse(line);
    TurnAnalysis a;
    a.turnIndex = j.at("turn").get<int>();
    a.boardSize = j.at("boardSize").get<int>();
    a.rootScoreMean = j.at("scoreMean").get<double>();
    a.rootWinrate = j.at("winrate").get<double>();
    a.totalVisits = j.at("totalVisits").get<std::int64_t>();
    for (const auto& cj : j.at("candidates")) {
      CandidateMove c;
      c.move = cj.at("move").get<std::string>();
      c.visits = cj.at("visits").get<int>();
      c.winrate = cj.at("winrate").get<double>();
      c.scoreMean = cj.at("scoreMean").get<double>();
      c.prior = cj.at("prior").get<double>();
      c.pv = cj.at("pv").get<std::vector<std::string>>();
      a.candidates.push_back(std::move(c));
    }
    if (!j.at("policy").is_null()) a.rawPolicy = j["policy"].get<std::vector<double>>();
    return a;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed analysis record: ") + e.what(), std::string(line));
  }
}

void validateTurnAnalysis(const TurnAnalysis& a) {
  std::int64_t sum = 0;
  for (const auto& c : a.candidates) {
    if (c.visits < 1) throw ProtocolError("candidate " + c.move + " has no visits");
    if (!(c.winrate >= 0.0 && c.winrate <= 1.0)) throw ProtocolError("candidate " + c.move + " winrate outside [0,1]");
    if (!(c.prior >= 0.0 && c.prior <= 1.0)) throw ProtocolError("candidate " + c.move + " prior outside [0,1]");
    sum += c.visits;
  }
  if (sum != a.totalVisits) throw ProtocolError("totalVisits does not match candidate visits");
  if (!(a.rootWinrate >= 0.0 && a.rootWinrate <= 1.0)) throw ProtocolError("root winrate outside [0,1]");
  if (a.rawPolicy) {
    const auto n = static_cast<std::size_t>(a.boardSize * a.boardSize);
    if (a.rawPolicy->size() != n + 1 && a.rawPolicy->size() != n)
      throw ProtocolError("policy has " + std::to_string(a.rawPolicy->size()) + " entries, expected " + std::to_string(n + 1));
    double total = 0.0;
    for (double p : *a.rawPolicy)
      if (p >= 0.0) total += p;
    if (std::abs(total - 1.0) > 1e-4) throw ProtocolError("policy sums to " + std::to_string(total));
  }
}

std::string contentHash(std::string_view bytes) {
  const std::uint64_t h = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kibitz
