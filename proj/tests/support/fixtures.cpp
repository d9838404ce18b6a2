#include "fixtures.hpp"

#include <cmath>
#include <stdexcept>

#include "kibitz/random.hpp"

namespace kibitz::fixtures {

std::optional<Point> engineChoice(const PlayerContext& ctx) {
  if (ctx.position.candidates.empty()) return std::nullopt;
  return ctx.position.candidates.front().point;
}

std::optional<Point> closestToLoss(const PlayerContext& ctx, double target) {
  std::optional<Point> best;
  double bestGap = 0.0;
  const int size = ctx.board.size();
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Point p{x, y};
      if (!ctx.board.isLegal(p)) continue;
      const double gap = std::abs(ctx.position.lossOf(p) - target);
      if (!best || gap < bestGap) {
        best = p;
        bestGap = gap;
      }
    }
  return best;
}

namespace {

struct Trace {
  GameRecord record;
  std::vector<double> latent;  // before each move, then after the last
};

Trace play(const FixtureOptions& opts, const Chooser& black, const Chooser& white) {
  StubModel model(opts.stub);
  Rng rng(opts.seed);
  BoardState board(opts.size);
  std::uint64_t key = model.rootKey(opts.size, {});
  double latent = opts.stub.initialLead;
  Trace tr;
  tr.record.size = opts.size;
  tr.record.komi = opts.komi;
  for (int t = 0; t < opts.moves; ++t) {
    const StubPosition pos = model.evaluate(board, key, latent, t, opts.maxVisits, "");
    tr.latent.push_back(latent);
    const PlayerContext ctx{board, pos, rng};
    const Color c = board.toMove();
    const std::optional<Point> p = c == Color::Black ? black(ctx) : white(ctx);
    const Move m{c, p};
    latent -= (c == Color::Black ? 1.0 : -1.0) * pos.lossOf(p);
    board = board.applyMove(m);
    key = StubModel::childKey(key, m);
    tr.record.moves.push_back(m);
  }
  tr.latent.push_back(latent);
  tr.record.result = latent > 0 ? "B+" + std::to_string(static_cast<int>(std::round(latent))) + ".5"
                                : "W+" + std::to_string(static_cast<int>(std::round(-latent))) + ".5";
  return tr;
}

int signChanges(const std::vector<double>& xs) {
  int changes = 0, last = 0;
  for (double x : xs) {
    const int s = x > 0 ? 1 : x < 0 ? -1 : 0;
    if (s != 0 && last != 0 && s != last) ++changes;
    if (s != 0) last = s;
  }
  return changes;
}

double averageLoss(const Trace& tr, Color c) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < tr.record.moves.size(); ++i) {
    if (tr.record.moves[i].color != c) continue;
    const double d = tr.latent[i + 1] - tr.latent[i];
    sum += c == Color::Black ? -d : d;
    ++n;
  }
  return n ? sum / n : 0.0;
}

// Picks the best move about half the time, otherwise something costing
// roughly half a point or more.
Chooser modestHuman() {
  return [](const PlayerContext& ctx) {
    if (ctx.rng.uniform() < 0.3) return closestToLoss(ctx, 0.0);
    return closestToLoss(ctx, 0.5 + ctx.rng.exponential(0.6));
  };
}

Chooser noisyHuman(Color self) {
  return [self](const PlayerContext& ctx) {
    const double lead = (self == Color::Black ? 1.0 : -1.0) * ctx.position.latent;
    if (lead > 2.0 && ctx.rng.uniform() < 0.12) return closestToLoss(ctx, lead + 2.0 + ctx.rng.exponential(2.0));
    if (ctx.rng.uniform() < 0.3) return closestToLoss(ctx, 0.0);
    return closestToLoss(ctx, 0.4 + ctx.rng.exponential(0.6));
  };
}

}  // namespace

GameRecord playGame(const FixtureOptions& opts, const Chooser& black, const Chooser& white) {
  return play(opts, black, white).record;
}

GameRecord perfectPlayerGame(const FixtureOptions& opts) {
  Trace tr = play(opts, modestHuman(), engineChoice);
  tr.record.blackName = "Human";
  tr.record.whiteName = "Perfect";
  return tr.record;
}

GameRecord noisyHumanGame(const FixtureOptions& opts) {
  FixtureOptions o = opts;
  for (int attempt = 0; attempt < 200; ++attempt, ++o.seed) {
    Trace tr = play(o, noisyHuman(Color::Black), noisyHuman(Color::White));
    const double b = averageLoss(tr, Color::Black), w = averageLoss(tr, Color::White);
    if (signChanges(tr.latent) >= 3 && b > 0.6 && b < 1.2 && w > 0.6 && w < 1.2) {
      tr.record.blackName = "Alice";
      tr.record.whiteName = "Bob";
      return tr.record;
    }
  }
  throw std::runtime_error("no noisy-human fixture satisfied its constraints");
}

int leadChanges(const GameRecord& record, const FixtureOptions& opts) {
  auto replayWith = [&record](const PlayerContext& ctx) -> std::optional<Point> {
    return record.moves[static_cast<std::size_t>(ctx.position.turn)].point;
  };
  FixtureOptions o = opts;
  o.moves = static_cast<int>(record.moves.size());
  return signChanges(play(o, replayWith, replayWith).latent);
}

}  // namespace kibitz::fixtures
