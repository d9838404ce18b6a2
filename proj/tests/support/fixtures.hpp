#pragma once

// Synthetic games played against the stub model. Because the stub is
// deterministic, analyzing these records with the same StubConfig and visit
// count reproduces exactly the losses the simulated players chose.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "kibitz/random.hpp"
#include "kibitz/sgf.hpp"
#include "kibitz/stub_engine.hpp"

namespace kibitz::fixtures {

struct FixtureOptions {
  StubConfig stub;
  int maxVisits = 1600;
  int moves = 140;
  int size = 19;
  double komi = 7.5;
  std::uint64_t seed = 11;
};

struct PlayerContext {
  const BoardState& board;
  const StubPosition& position;
  Rng& rng;
};
using Chooser = std::function<std::optional<Point>(const PlayerContext&)>;

// Most visited candidate.
std::optional<Point> engineChoice(const PlayerContext& ctx);
// Legal move whose loss is closest to the target.
std::optional<Point> closestToLoss(const PlayerContext& ctx, double target);

GameRecord playGame(const FixtureOptions& opts, const Chooser& black, const Chooser& white);

// White always plays the engine's top choice; Black is a modest human losing
// about half a point per move.
GameRecord perfectPlayerGame(const FixtureOptions& opts = {});

// Two humans losing close to a point per move, with blunders that change the
// lead at least three times.
GameRecord noisyHumanGame(const FixtureOptions& opts = {});

// Number of sign changes of the Black-perspective latent score.
int leadChanges(const GameRecord& record, const FixtureOptions& opts);

}  // namespace kibitz::fixtures
