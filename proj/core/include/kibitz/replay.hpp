#pragma once

#include <string>
#include <vector>

#include "kibitz/board.hpp"
#include "kibitz/sgf.hpp"

namespace kibitz {

struct ReplayOptions {
  // Downgrade suicide/ko to warnings, and skip moves onto occupied points.
  bool lenient = false;
};

struct Replay {
  // states[0] is the position after setup stones; states[i] follows moves[i-1].
  std::vector<BoardState> states;
  // The moves that were actually applied (skipped ones removed when lenient).
  std::vector<Move> moves;
  // Index into record.moves for every applied move.
  std::vector<std::size_t> sourceIndex;
  std::vector<std::string> warnings;
};

// Throws IllegalMove carrying the offending turn index.
Replay replay(const GameRecord& record, ReplayOptions options = {});

// Position after setup stones, with the side to move set from the first move
// (White when the record has handicap stones and no moves).
BoardState initialState(const GameRecord& record);

}  // namespace kibitz
