#pragma once

// Minimal Go rules: enough to replay recorded games (captures, suicide,
// simple ko) and to convert between SGF and engine coordinates.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kibitz/errors.hpp"

namespace kibitz {

enum class Color : std::uint8_t { Black, White };
enum class Stone : std::uint8_t { Empty, Black, White };

constexpr Color opponent(Color c) { return c == Color::Black ? Color::White : Color::Black; }
constexpr Stone stoneOf(Color c) { return c == Color::Black ? Stone::Black : Stone::White; }
std::string_view colorName(Color c);

inline constexpr int kMinBoardSize = 9;
inline constexpr int kMaxBoardSize = 19;

// x counts columns from the left, y counts rows from the top (SGF convention).
struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct Move {
  Color color = Color::Black;
  std::optional<Point> point;  // empty means pass

  static Move play(Color c, Point p) { return Move{c, p}; }
  static Move pass(Color c) { return Move{c, std::nullopt}; }
  bool isPass() const { return !point.has_value(); }
  friend bool operator==(const Move&, const Move&) = default;
};

class IllegalMove : public Error {
 public:
  enum class Reason { Occupied, Suicide, KoViolation, OffBoard };

  IllegalMove(Reason reason, Move move, int turnIndex = -1);

  Reason reason() const noexcept { return reason_; }
  const Move& move() const noexcept { return move_; }
  // Turn index (0-based move number) when raised from replay, -1 otherwise.
  int turnIndex() const noexcept { return turnIndex_; }

 private:
  Reason reason_;
  Move move_;
  int turnIndex_;
};

std::string_view reasonName(IllegalMove::Reason r);

// Which rule violations applyMove tolerates instead of throwing.
struct Leniency {
  bool allowSuicide = false;
  bool allowKoViolation = false;

  static Leniency strict() { return {}; }
  static Leniency lenient() { return {true, true}; }
};

class BoardState {
 public:
  explicit BoardState(int size = 19);

  int size() const noexcept { return size_; }
  Stone at(Point p) const { return grid_[index(p)]; }
  Color toMove() const noexcept { return toMove_; }
  const std::optional<Point>& koPoint() const noexcept { return koPoint_; }
  int captures(Color c) const noexcept { return captures_[static_cast<int>(c)]; }
  int turnIndex() const noexcept { return turnIndex_; }
  int consecutivePasses() const noexcept { return consecutivePasses_; }
  bool gameOver() const noexcept { return consecutivePasses_ >= 2; }

  bool onBoard(Point p) const { return p.x >= 0 && p.y >= 0 && p.x < size_ && p.y < size_; }
  int countStones(Stone s) const;
  int liberties(Point p) const;

  // Returns the successor position; throws IllegalMove and leaves *this alone.
  // Precondition: move.color == toMove() (std::invalid_argument otherwise).
  BoardState applyMove(const Move& move, Leniency leniency = Leniency::strict()) const;

  // Whether Play(p) by toMove() would be accepted under strict rules.
  bool isLegal(Point p) const;

  // Setup stones (handicap, AB/AW). Does not count as a move.
  void placeSetupStone(Color c, Point p);
  void setToMove(Color c) { toMove_ = c; }

  friend bool operator==(const BoardState&, const BoardState&) = default;

 private:
  int index(Point p) const { return p.y * size_ + p.x; }
  // Removes the group containing p if it has no liberties; returns count removed.
  int removeIfDead(Point p);
  void collectGroup(Point p, std::vector<int>& group, int& libs) const;

  int size_;
  std::vector<Stone> grid_;
  Color toMove_ = Color::Black;
  std::optional<Point> koPoint_;
  std::array<int, 2> captures_{0, 0};
  int turnIndex_ = 0;
  int consecutivePasses_ = 0;
};

// Engine coordinates: column letter A..T with I skipped, row 1 at the bottom.
std::string toEngineCoord(std::optional<Point> p, int size);
std::optional<Point> fromEngineCoord(std::string_view text, int size);

// SGF coordinates: two lowercase letters, column then row from the top.
// Pass is the empty string (and "tt" on boards up to 19x19 when parsing).
std::string toSgfCoord(std::optional<Point> p);
std::optional<Point> fromSgfCoord(std::string_view text, int size);

// Index into a row-major policy vector; pass maps to size*size.
int policyIndex(std::optional<Point> p, int size);

}  // namespace kibitz
