#include <doctest.h>

#include <string>
#include <vector>

#include "board_diagram.hpp"
#include "kibitz/board.hpp"

using namespace kibitz;
using kibitz::testing::diagram;

namespace {

Move B(int x, int y) { return Move::play(Color::Black, {x, y}); }
Move W(int x, int y) { return Move::play(Color::White, {x, y}); }

IllegalMove::Reason reasonOf(const BoardState& b, const Move& m, Leniency l = Leniency::strict()) {
  try {
    (void)b.applyMove(m, l);
  } catch (const IllegalMove& e) {
    return e.reason();
  }
  FAIL("move was accepted");
  return IllegalMove::Reason::OffBoard;
}

}  // namespace

TEST_CASE("corner capture") {
  // White A19 in atari, Black takes the last liberty.
  auto b = diagram({
      "Ox.......",
      ".........",
  }, 9, Color::Black);
  CHECK(b.liberties({0, 0}) == 1);
  b = b.applyMove(B(0, 1));
  CHECK(b.at({0, 0}) == Stone::Empty);
  CHECK(b.captures(Color::Black) == 1);
  CHECK(b.captures(Color::White) == 0);
  CHECK(b.countStones(Stone::Black) == 2);
  CHECK(b.countStones(Stone::White) == 0);
  CHECK(b.toMove() == Color::White);
  CHECK(b.turnIndex() == 1);
}

TEST_CASE("multi-stone capture along the edge") {
  auto b = diagram({
      "xOOOx....",
      ".xx......",
  }, 9, Color::Black);
  CHECK(b.liberties({1, 0}) == 1);
  b = b.applyMove(B(3, 1));
  for (int x = 1; x <= 3; ++x) CHECK(b.at({x, 0}) == Stone::Empty);
  CHECK(b.captures(Color::Black) == 3);
  CHECK(b.countStones(Stone::White) == 0);
  // No ko after capturing more than one stone.
  CHECK_FALSE(b.koPoint().has_value());
}

TEST_CASE("capture of two separate groups with one move") {
  auto b = diagram({
      "O.Ox.....",
      "xOx......",
  }, 9, Color::Black);
  // B19 is the last liberty of both A19 and C19.
  b = b.applyMove(B(1, 0));
  CHECK(b.at({0, 0}) == Stone::Empty);
  CHECK(b.at({2, 0}) == Stone::Empty);
  CHECK(b.at({1, 1}) == Stone::White);
  CHECK(b.captures(Color::Black) == 2);
}

TEST_CASE("single-stone suicide is illegal") {
  auto b = diagram({
      ".O.......",
      "O........",
  }, 9, Color::Black);
  CHECK_FALSE(b.isLegal({0, 0}));
  CHECK(reasonOf(b, B(0, 0)) == IllegalMove::Reason::Suicide);
}

TEST_CASE("multi-stone suicide is illegal and lenient mode removes the group") {
  auto b = diagram({
      "x.O......",
      "OO.......",
  }, 9, Color::Black);
  CHECK(reasonOf(b, B(1, 0)) == IllegalMove::Reason::Suicide);
  const auto after = b.applyMove(B(1, 0), Leniency::lenient());
  CHECK(after.at({0, 0}) == Stone::Empty);
  CHECK(after.at({1, 0}) == Stone::Empty);
  CHECK(after.captures(Color::White) == 2);
}

TEST_CASE("filling the last liberty is legal when it captures") {
  auto b = diagram({
      ".Ox......",
      "Ox.......",
      "x........",
  }, 9, Color::Black);
  CHECK(b.isLegal({0, 0}));
  b = b.applyMove(B(0, 0));
  CHECK(b.at({1, 0}) == Stone::Empty);
  CHECK(b.at({0, 1}) == Stone::Empty);
  CHECK(b.at({0, 0}) == Stone::Black);
  CHECK(b.captures(Color::Black) == 2);
}

TEST_CASE("simple ko") {
  // Black takes at E18 (4,1); White may not retake at D18 (3,1) immediately.
  auto b = diagram({
      "...xO....",
      "..xO.O...",
      "...xO....",
  }, 9, Color::Black);
  b = b.applyMove(B(4, 1));
  CHECK(b.at({3, 1}) == Stone::Empty);
  REQUIRE(b.koPoint().has_value());
  CHECK(*b.koPoint() == Point{3, 1});
  CHECK_FALSE(b.isLegal({3, 1}));
  CHECK(reasonOf(b, W(3, 1)) == IllegalMove::Reason::KoViolation);

  // A ko threat exchange elsewhere lifts the ban.
  b = b.applyMove(W(8, 8));
  CHECK_FALSE(b.koPoint().has_value());
  b = b.applyMove(B(0, 8));
  CHECK(b.isLegal({3, 1}));
  b = b.applyMove(W(3, 1));
  CHECK(b.at({4, 1}) == Stone::Empty);
  CHECK(b.captures(Color::White) == 1);
  REQUIRE(b.koPoint().has_value());
  CHECK(*b.koPoint() == Point{4, 1});
}

TEST_CASE("ko violation is tolerated in lenient mode") {
  auto b = diagram({
      "...xO....",
      "..xO.O...",
      "...xO....",
  }, 9, Color::Black);
  b = b.applyMove(B(4, 1));
  const auto retaken = b.applyMove(W(3, 1), Leniency::lenient());
  CHECK(retaken.at({4, 1}) == Stone::Empty);
}

TEST_CASE("a pass clears the ko ban") {
  auto b = diagram({
      "...xO....",
      "..xO.O...",
      "...xO....",
  }, 9, Color::Black);
  b = b.applyMove(B(4, 1));
  b = b.applyMove(Move::pass(Color::White));
  CHECK_FALSE(b.koPoint().has_value());
}

TEST_CASE("pass-pass ends the game") {
  BoardState b(9);
  b = b.applyMove(B(4, 4));
  CHECK_FALSE(b.gameOver());
  b = b.applyMove(Move::pass(Color::White));
  CHECK(b.consecutivePasses() == 1);
  CHECK_FALSE(b.gameOver());
  b = b.applyMove(B(2, 2));
  CHECK(b.consecutivePasses() == 0);
  b = b.applyMove(Move::pass(Color::White));
  b = b.applyMove(Move::pass(Color::Black));
  CHECK(b.gameOver());
  CHECK(b.turnIndex() == 5);
}

TEST_CASE("occupied, off-board and wrong color") {
  BoardState b(9);
  b = b.applyMove(B(4, 4));
  CHECK(reasonOf(b, W(4, 4)) == IllegalMove::Reason::Occupied);
  CHECK(reasonOf(b, W(9, 0)) == IllegalMove::Reason::OffBoard);
  CHECK(reasonOf(b, W(-1, 3)) == IllegalMove::Reason::OffBoard);
  CHECK_THROWS_AS((void)b.applyMove(B(0, 0)), std::invalid_argument);
}

TEST_CASE("illegal move leaves the board untouched") {
  auto b = diagram({
      ".O.......",
      "O........",
  }, 9, Color::Black);
  const auto before = b;
  CHECK_THROWS_AS((void)b.applyMove(B(0, 0)), IllegalMove);
  CHECK(b == before);
}

TEST_CASE("liberties count shared points once") {
  auto b = diagram({
      ".........",
      ".xx......",
      ".x.......",
  }, 9, Color::Black);
  // Group B18 C18 B17: liberties A18 B19 C19 D18 C17 A17 B16.
  CHECK(b.liberties({1, 1}) == 7);
  CHECK(b.liberties({2, 1}) == 7);
}

TEST_CASE("engine coordinates skip I") {
  CHECK(toEngineCoord(Point{0, 0}, 19) == "A19");
  CHECK(toEngineCoord(Point{7, 18}, 19) == "H1");
  CHECK(toEngineCoord(Point{8, 18}, 19) == "J1");
  CHECK(toEngineCoord(Point{18, 0}, 19) == "T19");
  CHECK(toEngineCoord(Point{4, 4}, 9) == "E5");
  CHECK(toEngineCoord(std::nullopt, 19) == "pass");
  CHECK(fromEngineCoord("J1", 19) == Point{8, 18});
  CHECK(fromEngineCoord("q16", 19) == Point{15, 3});
  CHECK(fromEngineCoord("PASS", 19) == std::nullopt);
  CHECK_THROWS_AS(fromEngineCoord("I5", 19), MalformedCoordinate);
  CHECK_THROWS_AS(fromEngineCoord("A20", 19), MalformedCoordinate);
  CHECK_THROWS_AS(fromEngineCoord("K5", 9), MalformedCoordinate);
  CHECK_THROWS_AS(fromEngineCoord("A0", 9), MalformedCoordinate);
  CHECK_THROWS_AS(fromEngineCoord("", 9), MalformedCoordinate);
}

TEST_CASE("sgf coordinates") {
  CHECK(toSgfCoord(Point{0, 0}) == "aa");
  CHECK(toSgfCoord(Point{15, 3}) == "pd");
  CHECK(toSgfCoord(std::nullopt).empty());
  CHECK(fromSgfCoord("pd", 19) == Point{15, 3});
  CHECK(fromSgfCoord("tt", 19) == std::nullopt);
  CHECK(fromSgfCoord("", 13) == std::nullopt);
  CHECK_THROWS_AS(fromSgfCoord("ka", 9), MalformedCoordinate);
  CHECK_THROWS_AS(fromSgfCoord("A1", 9), MalformedCoordinate);
  CHECK(policyIndex(Point{2, 1}, 9) == 11);
  CHECK(policyIndex(std::nullopt, 9) == 81);
}

TEST_CASE("coordinate round trip over every point") {
  for (int size : {9, 13, 19}) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const Point p{x, y};
        CHECK(fromEngineCoord(toEngineCoord(p, size), size) == p);
        CHECK(fromSgfCoord(toSgfCoord(p), size) == p);
      }
    }
  }
}
