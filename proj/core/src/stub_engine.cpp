#include "kibitz/stub_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "kibitz/random.hpp"

namespace kibitz {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return hashCombine(a, b); }
std::uint64_t hashText(std::string_view s) { return fnv1a64(s); }

double roundTo(double x, double scale) { return std::round(x * scale) / scale; }

// Integer split of `total` proportional to `shares`, at least one each.
std::vector<int> apportion(const std::vector<double>& shares, int total) {
  const std::size_t k = shares.size();
  std::vector<int> out(k, 1);
  const int rest = total - static_cast<int>(k);
  if (rest <= 0) return out;
  const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::vector<double> rema(k);
  int given = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = shares[i] / sum * rest;
    const int base = static_cast<int>(std::floor(exact));
    out[i] += base;
    given += base;
    rema[i] = exact - base;
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rema[a] > rema[b]; });
  for (int i = 0; i < rest - given; ++i) out[order[static_cast<std::size_t>(i) % k]] += 1;
  return out;
}

}  // namespace

PolicyShape parsePolicyShape(std::string_view s) {
  if (s == "natural" || s == "dirichlet") return PolicyShape::Natural;
  if (s == "one-hot" || s == "onehot") return PolicyShape::OneHot;
  if (s == "uniform-k" || s == "uniform") return PolicyShape::UniformK;
  throw std::invalid_argument("unknown policy shape '" + std::string(s) + "' (natural, one-hot, uniform-k)");
}

std::string_view policyShapeName(PolicyShape s) {
  switch (s) {
    case PolicyShape::Natural: return "natural";
    case PolicyShape::OneHot: return "one-hot";
    case PolicyShape::UniformK: return "uniform-k";
  }
  return "natural";
}

StubConfig StubConfig::parse(std::string_view spec) {
  StubConfig c;
  auto toDouble = [](std::string_view v) {
    double d = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("bad number '" + std::string(v) + "'");
    return d;
  };
  auto toBool = [](std::string_view v) { return v == "1" || v == "true" || v == "yes" || v == "on"; };
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view() : spec.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("stub option '" + std::string(item) + "' needs key=value");
    const std::string_view key = item.substr(0, eq), val = item.substr(eq + 1);
    if (key == "seed") c.seed = static_cast<std::uint64_t>(toDouble(val));
    else if (key == "shape") c.shape = parsePolicyShape(val);
    else if (key == "k") c.uniformK = static_cast<int>(toDouble(val));
    else if (key == "candidates") c.maxCandidates = static_cast<int>(toDouble(val));
    else if (key == "blur") c.policyBlur = toDouble(val);
    else if (key == "noise") c.seededNoise = toBool(val);
    else if (key == "disagree") c.forceDisagree = toBool(val);
    else if (key == "safe") c.safePlayThreshold = toDouble(val);
    else if (key == "safeloss") c.safePlayLoss = toDouble(val);
    else if (key == "lead") c.initialLead = toDouble(val);
    else throw std::invalid_argument("unknown stub option '" + std::string(key) + "'");
  }
  if (c.maxCandidates < 1 || c.uniformK < 1) throw std::invalid_argument("stub candidate counts must be >= 1");
  if (c.policyBlur < 0.0 || c.policyBlur > 1.0) throw std::invalid_argument("stub blur must be in [0,1]");
  return c;
}

StubModel::StubModel(StubConfig config) : config_(std::move(config)) {}

std::uint64_t StubModel::rootKey(int boardSize, const std::vector<AnalysisQuery::Placement>& setup) const {
  std::uint64_t k = mix(config_.seed, static_cast<std::uint64_t>(boardSize));
  for (const auto& s : setup) k = mix(k, hashText((s.color == Color::Black ? "B" : "W") + s.coord));
  return k;
}

std::uint64_t StubModel::childKey(std::uint64_t parent, const Move& move) {
  const std::uint64_t m = move.point ? static_cast<std::uint64_t>(move.point->y * 32 + move.point->x + 1) : 0;
  return mix(parent, (m << 1) | (move.color == Color::White ? 1 : 0));
}

double StubModel::winrateFor(double latent, int turn) {
  const double scale = std::max(1.5, 8.0 * (1.0 - turn / 250.0));
  return 1.0 / (1.0 + std::exp(-latent / scale));
}

StubPosition StubModel::evaluate(const BoardState& board, std::uint64_t key, double latent, int turn, int maxVisits,
                                 std::string_view noiseKey) const {
  const int size = board.size();
  StubPosition pos;
  pos.turn = turn;
  pos.toMove = board.toMove();
  pos.latent = latent;
  pos.winrate = winrateFor(latent, turn);
  const double moverWinrate = pos.toMove == Color::Black ? pos.winrate : 1.0 - pos.winrate;

  std::vector<Point> legal;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (board.isLegal({x, y})) legal.push_back({x, y});

  const std::uint64_t posSeed = mix(config_.seed, key);
  Rng rng(posSeed);
  std::vector<double> weight(legal.size());
  for (auto& w : weight) w = std::pow(-std::log(rng.uniform()), 3.0);

  std::vector<std::size_t> byWeight(legal.size());
  std::iota(byWeight.begin(), byWeight.end(), 0);
  std::stable_sort(byWeight.begin(), byWeight.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });

  std::size_t count = 0;
  switch (config_.shape) {
    case PolicyShape::Natural: count = static_cast<std::size_t>(config_.maxCandidates); break;
    case PolicyShape::OneHot: count = 1; break;
    case PolicyShape::UniformK: count = static_cast<std::size_t>(config_.uniformK); break;
  }
  if (config_.forceDisagree) count = std::max<std::size_t>(count, 2);
  count = std::min(count, legal.size());
  std::vector<std::size_t> cand(byWeight.begin(), byWeight.begin() + static_cast<std::ptrdiff_t>(count));

  // True losses: one candidate is the best move, the rest cost something.
  std::vector<double> loss(count, 0.0);
  std::size_t best = 0;
  if (count > 0) {
    double total = 0.0;
    for (std::size_t c : cand) total += weight[c];
    double pick = rng.uniform() * total;
    for (std::size_t i = 0; i < count; ++i) {
      pick -= weight[cand[i]];
      if (pick <= 0.0 || i + 1 == count) {
        best = i;
        break;
      }
    }
    for (std::size_t i = 0; i < count; ++i)
      if (i != best) loss[i] = 0.5 + rng.exponential(1.5);
  }

  // Engine preference used for visits; differs from the true loss in safe mode.
  std::vector<double> pref = loss;
  pos.safeMode = moverWinrate >= config_.safePlayThreshold && config_.safePlayLoss > 0.0 && count >= 2;
  if (pos.safeMode) {
    const std::size_t safe = best == 0 ? 1 : 0;
    loss[safe] = config_.safePlayLoss;
    pref[safe] = 0.0;
    pref[best] = config_.safePlayLoss;
  }

  auto nonCandidateLoss = [posSeed, size](std::optional<Point> p) {
    Rng r(mix(posSeed, static_cast<std::uint64_t>(policyIndex(p, size)) + 1));
    return 1.5 + r.exponential(2.0);
  };

  // Raw policy.
  const std::size_t passIdx = static_cast<std::size_t>(size * size);
  std::vector<double> policy(passIdx + 1, kIllegalPolicy);
  std::vector<double> prefByLegal(legal.size());
  {
    std::vector<int> candSlot(legal.size(), -1);
    for (std::size_t i = 0; i < count; ++i) candSlot[cand[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < legal.size(); ++i)
      prefByLegal[i] = candSlot[i] >= 0 ? pref[static_cast<std::size_t>(candSlot[i])] : nonCandidateLoss(legal[i]);
  }
  if (config_.shape == PolicyShape::Natural) {
    const double passTarget = std::exp(-3.0 * nonCandidateLoss(std::nullopt));
    double targetSum = passTarget, weightSum = 0.0;
    for (std::size_t i = 0; i < legal.size(); ++i) {
      targetSum += std::exp(-3.0 * prefByLegal[i]);
      weightSum += weight[i];
    }
    const double blur = config_.policyBlur;
    for (std::size_t i = 0; i < legal.size(); ++i) {
      const double target = std::exp(-3.0 * prefByLegal[i]) / targetSum;
      const double noise = weightSum > 0 ? weight[i] / weightSum : 0.0;
      policy[static_cast<std::size_t>(policyIndex(legal[i], size))] = (1.0 - blur) * target + blur * noise;
    }
    policy[passIdx] = (1.0 - blur) * passTarget / targetSum + (legal.empty() ? blur : 0.0);
  } else {
    for (const Point& p : legal) policy[static_cast<std::size_t>(policyIndex(p, size))] = 0.0;
    policy[passIdx] = legal.empty() ? 1.0 : 0.0;
    for (std::size_t i = 0; i < count; ++i)
      policy[static_cast<std::size_t>(policyIndex(legal[cand[i]], size))] = 1.0 / static_cast<double>(count);
    if (config_.shape == PolicyShape::OneHot && count > 0) {
      for (std::size_t i = 0; i < count; ++i) policy[static_cast<std::size_t>(policyIndex(legal[cand[i]], size))] = 0.0;
      policy[static_cast<std::size_t>(policyIndex(legal[cand[0]], size))] = 1.0;
    }
  }
  for (auto& p : policy)
    if (p >= 0.0) p = roundTo(p, 1e12);

  // Visits.
  std::vector<double> share(count, 1.0);
  const double rho = std::clamp(std::log10(std::max(1, maxVisits)) / 4.0, 0.0, 1.0);
  if (config_.shape != PolicyShape::UniformK) {
    double wsum = 0.0;
    for (std::size_t c : cand) wsum += weight[c];
    for (std::size_t i = 0; i < count; ++i)
      share[i] = std::pow(weight[cand[i]] / wsum, 1.0 - rho) * std::exp(-3.0 * rho * pref[i]);
  }
  if (config_.seededNoise) {
    Rng noise(mix(posSeed, hashText(noiseKey)));
    for (auto& s : share) s *= std::exp(0.35 * noise.gaussian());
  }
  std::vector<std::size_t> visitOrder(count);
  std::iota(visitOrder.begin(), visitOrder.end(), 0);
  std::stable_sort(visitOrder.begin(), visitOrder.end(), [&](std::size_t a, std::size_t b) { return share[a] > share[b]; });
  const std::size_t kept = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, maxVisits)));
  visitOrder.resize(kept);
  std::vector<double> keptShares;
  for (std::size_t i : visitOrder) keptShares.push_back(share[i]);
  const std::vector<int> visits = apportion(keptShares, std::max(1, maxVisits));

  for (std::size_t j = 0; j < kept; ++j) {
    const std::size_t i = visitOrder[j];
    const Point p = legal[cand[i]];
    pos.candidates.push_back({p, visits[j], loss[i], std::max(0.0, policy[static_cast<std::size_t>(policyIndex(p, size))])});
  }
  std::stable_sort(pos.candidates.begin(), pos.candidates.end(),
                   [](const StubCandidate& a, const StubCandidate& b) { return a.visits > b.visits; });

  if (config_.forceDisagree && pos.candidates.size() >= 2) {
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < policy.size(); ++i)
      if (policy[i] > policy[argmax]) argmax = i;
    if (static_cast<std::size_t>(policyIndex(pos.candidates[0].point, size)) == argmax) {
      std::swap(pos.candidates[0].visits, pos.candidates[1].visits);
      std::swap(pos.candidates[0], pos.candidates[1]);
    }
  }

  if (legal.empty()) {
    // Only pass remains; report it as the single, free candidate.
    pos.candidates.clear();
  }
  pos.policy = std::move(policy);

  std::vector<std::pair<Point, double>> candLoss;
  for (std::size_t i = 0; i < count; ++i) candLoss.emplace_back(legal[cand[i]], loss[i]);
  pos.lossOf = [board, candLoss, nonCandidateLoss, legalEmpty = legal.empty()](std::optional<Point> p) {
    if (!p) return legalEmpty ? 0.0 : nonCandidateLoss(p);
    for (const auto& [q, l] : candLoss)
      if (q == *p) return l;
    if (!board.isLegal(*p)) (void)board.applyMove(Move::play(board.toMove(), *p));
    return nonCandidateLoss(p);
  };
  return pos;
}

StubResponder::StubResponder(StubConfig config) : model_(std::move(config)) {}

std::vector<std::string> StubResponder::respond(std::string_view queryLine) const {
  json probe;
  try {
    probe = json::parse(queryLine);
  } catch (const std::exception& e) {
    json err;
    err["error"] = std::string("Could not parse json: ") + e.what();
    return {err.dump()};
  }
  const std::string id = probe.is_object() && probe.contains("id") && probe["id"].is_string() ? probe["id"].get<std::string>() : "";
  auto errorLine = [&](const std::string& message, const std::string& field) {
    json err;
    err["id"] = id;
    err["error"] = message;
    if (!field.empty()) err["field"] = field;
    return std::vector<std::string>{err.dump()};
  };
  if (probe.is_object() && probe.contains("action")) {
    json r;
    r["id"] = id;
    r["action"] = probe["action"];
    r["version"] = model_.config().version;
    r["git_hash"] = "stub";
    return {r.dump()};
  }

  AnalysisQuery q;
  try {
    q = decodeQuery(queryLine);
  } catch (const ProtocolError& e) {
    return errorLine(e.what(), "");
  }
  if (q.boardSize < kMinBoardSize || q.boardSize > kMaxBoardSize) return errorLine("unsupported board size", "boardXSize");
  if (q.maxVisits < 1) return errorLine("maxVisits must be >= 1", "maxVisits");
  const int n = static_cast<int>(q.moves.size());
  std::set<int> wanted;
  for (int t : q.analyzeTurns) {
    if (t < 0 || t > n) return errorLine("analyzeTurns entry out of range", "analyzeTurns");
    wanted.insert(t);
  }
  if (wanted.empty()) return {};

  BoardState board(q.boardSize);
  try {
    for (const auto& s : q.initialStones) {
      const auto p = fromEngineCoord(s.coord, q.boardSize);
      if (!p) return errorLine("pass in initialStones", "initialStones");
      board.placeSetupStone(s.color, *p);
    }
  } catch (const Error& e) {
    return errorLine(e.what(), "initialStones");
  }
  board.setToMove(q.initialPlayer.value_or(Color::Black));

  std::uint64_t key = model_.rootKey(q.boardSize, q.initialStones);
  double latent = model_.config().initialLead;
  const int lastTurn = *wanted.rbegin();
  std::vector<std::string> out;
  for (int t = 0; t <= lastTurn; ++t) {
    const StubPosition pos = model_.evaluate(board, key, latent, t, q.maxVisits, q.id);
    if (wanted.count(t)) {
      const double sign = pos.toMove == Color::Black ? 1.0 : -1.0;
      json r;
      r["id"] = q.id;
      r["isDuringSearch"] = false;
      json infos = json::array();
      int order = 0;
      for (const auto& c : pos.candidates) {
        const double blackScore = latent - sign * c.loss;
        const double blackWin = StubModel::winrateFor(blackScore, t + 1);
        const double lead = sign * blackScore;
        json mi;
        mi["move"] = toEngineCoord(c.point, q.boardSize);
        mi["order"] = order++;
        mi["prior"] = c.prior;
        mi["pv"] = json::array({toEngineCoord(c.point, q.boardSize)});
        mi["scoreLead"] = lead;
        mi["scoreMean"] = lead * 1.05;
        mi["visits"] = c.visits;
        mi["winrate"] = pos.toMove == Color::Black ? blackWin : 1.0 - blackWin;
        infos.push_back(std::move(mi));
      }
      if (pos.candidates.empty()) {
        json mi;
        mi["move"] = "pass";
        mi["order"] = 0;
        mi["prior"] = 1.0;
        mi["pv"] = json::array({"pass"});
        mi["scoreLead"] = sign * latent;
        mi["scoreMean"] = sign * latent * 1.05;
        mi["visits"] = q.maxVisits;
        mi["winrate"] = pos.toMove == Color::Black ? pos.winrate : 1.0 - pos.winrate;
        infos.push_back(std::move(mi));
      }
      r["moveInfos"] = std::move(infos);
      if (q.includePolicy) r["policy"] = pos.policy;
      json root;
      root["currentPlayer"] = pos.toMove == Color::Black ? "B" : "W";
      root["scoreLead"] = sign * latent;
      root["scoreMean"] = sign * latent * 1.05;
      root["visits"] = q.maxVisits;
      root["winrate"] = pos.toMove == Color::Black ? pos.winrate : 1.0 - pos.winrate;
      r["rootInfo"] = std::move(root);
      r["turnNumber"] = t;
      out.push_back(r.dump());
    }
    if (t == n) break;
    const auto& pl = q.moves[static_cast<std::size_t>(t)];
    std::optional<Point> pt;
    try {
      pt = fromEngineCoord(pl.coord, q.boardSize);
    } catch (const MalformedCoordinate& e) {
      return errorLine(e.what(), "moves");
    }
    const Move m{pl.color, pt};
    double l = 1.5;
    try {
      if (pl.color == pos.toMove) l = pos.lossOf(pt);
      if (board.toMove() != pl.color) board.setToMove(pl.color);
      board = board.applyMove(m, Leniency::lenient());
    } catch (const IllegalMove& e) {
      return errorLine("Illegal move " + std::to_string(t) + ": " + pl.coord + " (" + std::string(reasonName(e.reason())) + ")", "moves");
    }
    latent -= (pl.color == Color::Black ? 1.0 : -1.0) * l;
    key = StubModel::childKey(key, m);
  }
  return out;
}

namespace {

class StubTransport final : public Transport {
 public:
  StubTransport(StubConfig config, StubTransportOptions opts)
      : responder_(std::move(config)), opts_(opts), shuffleRng_(opts.shuffleSeed) {}

  void writeLine(const std::string& line) override {
    std::vector<std::string> lines = responder_.respond(line);
    std::lock_guard lock(mutex_);
    if (closed_) throw EngineCrashed("stub engine stopped");
    if (line.find("\"action\"") != std::string::npos) {
      // Control queries are answered immediately, outside the shuffle window.
      for (auto& l : lines) queue_.push_back(std::move(l));
      ready_.notify_all();
      return;
    }
    held_.insert(held_.end(), lines.begin(), lines.end());
    if (++heldQueries_ >= std::max<std::size_t>(1, opts_.shuffleWindow)) release();
  }

  std::optional<std::string> readLine() override {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    std::string line = std::move(queue_.front());
    queue_.pop_front();
    return line;
  }

  void closeInput() override {
    std::lock_guard lock(mutex_);
    release();
    closed_ = true;
    ready_.notify_all();
  }

  void terminate() override {
    std::lock_guard lock(mutex_);
    queue_.clear();
    closed_ = true;
    ready_.notify_all();
  }

 private:
  void release() {
    if (opts_.shuffle || opts_.shuffleWindow > 1) {
      for (std::size_t i = held_.size(); i > 1; --i) std::swap(held_[i - 1], held_[shuffleRng_.below(i)]);
    }
    for (auto& l : held_) queue_.push_back(std::move(l));
    held_.clear();
    heldQueries_ = 0;
    ready_.notify_all();
  }

  StubResponder responder_;
  StubTransportOptions opts_;
  Rng shuffleRng_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> queue_;
  std::vector<std::string> held_;
  std::size_t heldQueries_ = 0;
  bool closed_ = false;
};

// Plays back recorded engine output once the expected queries have arrived,
// then behaves like an engine that exited.
class TranscriptTransport final : public Transport {
 public:
  TranscriptTransport(std::vector<std::string> lines, std::size_t expectQueries, std::string version)
      : lines_(std::move(lines)), expect_(expectQueries), version_(std::move(version)) {
    if (expect_ == 0) playBack();
  }

  void writeLine(const std::string& line) override {
    std::lock_guard lock(mutex_);
    if (stopped_) throw EngineCrashed("transcript engine stopped");
    if (line.find("\"action\"") != std::string::npos) {
      json r;
      try {
        const json q = json::parse(line);
        r["id"] = q.value("id", "");
        r["action"] = q.value("action", "");
      } catch (const std::exception&) {
      }
      r["version"] = version_;
      queue_.push_back(r.dump());
      ready_.notify_all();
      return;
    }
    if (++received_ == expect_) playBack();
  }

  std::optional<std::string> readLine() override {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !queue_.empty() || finished_ || stopped_; });
    if (queue_.empty()) return std::nullopt;
    std::string line = std::move(queue_.front());
    queue_.pop_front();
    return line;
  }

  void closeInput() override {
    std::lock_guard lock(mutex_);
    finished_ = true;
    ready_.notify_all();
  }

  void terminate() override {
    std::lock_guard lock(mutex_);
    queue_.clear();
    stopped_ = true;
    ready_.notify_all();
  }

 private:
  void playBack() {
    for (auto& l : lines_) queue_.push_back(std::move(l));
    lines_.clear();
    finished_ = true;
    ready_.notify_all();
  }

  std::vector<std::string> lines_;
  std::size_t expect_;
  std::string version_;
  std::size_t received_ = 0;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> queue_;
  bool finished_ = false;
  bool stopped_ = false;
};

}  // namespace

std::vector<std::string> recordTranscript(const StubConfig& config, const std::vector<std::string>& queryLines) {
  const StubResponder responder(config);
  std::vector<std::string> out;
  for (const auto& q : queryLines) {
    auto lines = responder.respond(q);
    out.insert(out.end(), std::make_move_iterator(lines.begin()), std::make_move_iterator(lines.end()));
  }
  return out;
}

void shuffleLines(std::vector<std::string>& lines, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = lines.size(); i > 1; --i) std::swap(lines[i - 1], lines[rng.below(i)]);
}

std::unique_ptr<Transport> transcriptTransport(std::vector<std::string> lines, std::size_t expectQueries,
                                               std::string version) {
  return std::make_unique<TranscriptTransport>(std::move(lines), expectQueries, std::move(version));
}

std::unique_ptr<Transport> stubTransport(StubConfig config, StubTransportOptions transportOptions) {
  return std::make_unique<StubTransport>(std::move(config), transportOptions);
}

std::unique_ptr<EngineHandle> stubEngine(StubConfig config, EngineOptions options, StubTransportOptions transportOptions) {
  if (options.engineName == "engine") options.engineName = config.version;
  auto handle = std::make_unique<EngineHandle>(stubTransport(std::move(config), transportOptions), std::move(options));
  handle->probe();
  return handle;
}

}  // namespace kibitz
