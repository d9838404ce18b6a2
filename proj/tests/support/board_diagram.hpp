#pragma once

#include <initializer_list>
#include <string_view>

#include "kibitz/board.hpp"

namespace kibitz::testing {

// Rows from the top; 'x' Black, 'O' White, anything else empty. Missing rows
// and columns are empty.
inline BoardState diagram(std::initializer_list<std::string_view> rows, int size, Color toMove) {
  BoardState b(size);
  int y = 0;
  for (std::string_view row : rows) {
    for (int x = 0; x < static_cast<int>(row.size()) && x < size; ++x) {
      if (row[x] == 'x') b.placeSetupStone(Color::Black, {x, y});
      if (row[x] == 'O') b.placeSetupStone(Color::White, {x, y});
    }
    ++y;
  }
  b.setToMove(toMove);
  return b;
}

}  // namespace kibitz::testing
