#include "kibitz/board.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace kibitz {

namespace {

constexpr std::string_view kEngineColumns = "ABCDEFGHJKLMNOPQRSTUVWXYZ";

std::string describe(const Move& m) {
  std::string s(colorName(m.color));
  s += ' ';
  s += m.point ? toSgfCoord(m.point) : std::string("pass");
  return s;
}

std::string illegalMessage(IllegalMove::Reason r, const Move& m, int turn) {
  std::string msg = "illegal move (";
  msg += reasonName(r);
  msg += "): ";
  msg += describe(m);
  if (turn >= 0) msg += " at turn " + std::to_string(turn);
  return msg;
}

}  // namespace

std::string_view colorName(Color c) { return c == Color::Black ? "black" : "white"; }

std::string_view reasonName(IllegalMove::Reason r) {
  switch (r) {
    case IllegalMove::Reason::Occupied: return "occupied";
    case IllegalMove::Reason::Suicide: return "suicide";
    case IllegalMove::Reason::KoViolation: return "ko";
    case IllegalMove::Reason::OffBoard: return "off-board";
  }
  return "unknown";
}

IllegalMove::IllegalMove(Reason reason, Move move, int turnIndex)
    : Error(illegalMessage(reason, move, turnIndex)), reason_(reason), move_(move), turnIndex_(turnIndex) {}

BoardState::BoardState(int size) : size_(size) {
  if (size < kMinBoardSize || size > kMaxBoardSize)
    throw std::invalid_argument("board size must be in 9..19, got " + std::to_string(size));
  grid_.assign(static_cast<std::size_t>(size * size), Stone::Empty);
}

int BoardState::countStones(Stone s) const {
  return static_cast<int>(std::count(grid_.begin(), grid_.end(), s));
}

void BoardState::collectGroup(Point start, std::vector<int>& group, int& libs) const {
  const Stone color = at(start);
  std::vector<char> seen(grid_.size(), 0);
  std::vector<char> libSeen(grid_.size(), 0);
  std::vector<int> stack{index(start)};
  seen[stack.back()] = 1;
  libs = 0;
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    group.push_back(cur);
    const int cx = cur % size_, cy = cur / size_;
    const Point nbrs[4] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
    for (const Point& n : nbrs) {
      if (!onBoard(n)) continue;
      const int ni = index(n);
      if (grid_[ni] == Stone::Empty) {
        if (!libSeen[ni]) {
          libSeen[ni] = 1;
          ++libs;
        }
      } else if (grid_[ni] == color && !seen[ni]) {
        seen[ni] = 1;
        stack.push_back(ni);
      }
    }
  }
}

int BoardState::liberties(Point p) const {
  if (!onBoard(p) || at(p) == Stone::Empty) return 0;
  std::vector<int> group;
  int libs = 0;
  collectGroup(p, group, libs);
  return libs;
}

int BoardState::removeIfDead(Point p) {
  std::vector<int> group;
  int libs = 0;
  collectGroup(p, group, libs);
  if (libs > 0) return 0;
  for (int i : group) grid_[i] = Stone::Empty;
  return static_cast<int>(group.size());
}

BoardState BoardState::applyMove(const Move& move, Leniency leniency) const {
  if (move.color != toMove_)
    throw std::invalid_argument("applyMove: " + describe(move) + " but " + std::string(colorName(toMove_)) +
                                " is to move");

  BoardState next = *this;
  next.turnIndex_ = turnIndex_ + 1;
  next.toMove_ = opponent(move.color);

  if (move.isPass()) {
    next.koPoint_.reset();
    next.consecutivePasses_ = consecutivePasses_ + 1;
    return next;
  }

  const Point p = *move.point;
  if (!onBoard(p)) throw IllegalMove(IllegalMove::Reason::OffBoard, move);
  if (at(p) != Stone::Empty) throw IllegalMove(IllegalMove::Reason::Occupied, move);
  if (koPoint_ && *koPoint_ == p && !leniency.allowKoViolation)
    throw IllegalMove(IllegalMove::Reason::KoViolation, move);

  const Stone mine = stoneOf(move.color);
  const Stone theirs = stoneOf(opponent(move.color));
  next.grid_[index(p)] = mine;
  next.consecutivePasses_ = 0;

  int captured = 0;
  std::optional<Point> lastCaptured;
  const Point nbrs[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
  for (const Point& n : nbrs) {
    if (!onBoard(n) || next.at(n) != theirs) continue;
    const int removed = next.removeIfDead(n);
    if (removed > 0) {
      captured += removed;
      lastCaptured = n;
    }
  }

  std::vector<int> ownGroup;
  int ownLibs = 0;
  next.collectGroup(p, ownGroup, ownLibs);
  if (ownLibs == 0) {
    if (!leniency.allowSuicide) throw IllegalMove(IllegalMove::Reason::Suicide, move);
    for (int i : ownGroup) next.grid_[i] = Stone::Empty;
    next.captures_[static_cast<int>(opponent(move.color))] += static_cast<int>(ownGroup.size());
  }

  next.captures_[static_cast<int>(move.color)] += captured;

  // Single stone capturing a single stone and left in atari: the captured
  // point becomes the ko point for exactly one turn.
  next.koPoint_.reset();
  if (captured == 1 && ownGroup.size() == 1 && ownLibs == 1) next.koPoint_ = lastCaptured;
  return next;
}

bool BoardState::isLegal(Point p) const {
  if (!onBoard(p) || at(p) != Stone::Empty) return false;
  if (koPoint_ && *koPoint_ == p) return false;
  // Quick accept: any empty neighbour.
  const Point nbrs[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
  for (const Point& n : nbrs)
    if (onBoard(n) && at(n) == Stone::Empty) return true;
  try {
    (void)applyMove(Move::play(toMove_, p));
    return true;
  } catch (const IllegalMove&) {
    return false;
  }
}

void BoardState::placeSetupStone(Color c, Point p) {
  if (!onBoard(p)) throw IllegalMove(IllegalMove::Reason::OffBoard, Move::play(c, p));
  grid_[index(p)] = stoneOf(c);
}

std::string toEngineCoord(std::optional<Point> p, int size) {
  if (!p) return "pass";
  if (p->x < 0 || p->y < 0 || p->x >= size || p->y >= size)
    throw MalformedCoordinate("point (" + std::to_string(p->x) + "," + std::to_string(p->y) +
                              ") is off a " + std::to_string(size) + "x" + std::to_string(size) + " board");
  std::string s(1, kEngineColumns[static_cast<std::size_t>(p->x)]);
  s += std::to_string(size - p->y);
  return s;
}

std::optional<Point> fromEngineCoord(std::string_view text, int size) {
  std::string lower;
  for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "pass") return std::nullopt;
  if (text.size() < 2 || text.size() > 3) throw MalformedCoordinate("bad engine coordinate '" + std::string(text) + "'");
  const char col = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  const auto pos = kEngineColumns.find(col);
  int row = 0;
  const auto* first = text.data() + 1;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, row);
  if (pos == std::string_view::npos || ec != std::errc() || ptr != last)
    throw MalformedCoordinate("bad engine coordinate '" + std::string(text) + "'");
  const Point p{static_cast<int>(pos), size - row};
  if (p.x >= size || row < 1 || row > size)
    throw MalformedCoordinate("engine coordinate '" + std::string(text) + "' is off the board");
  return p;
}

std::string toSgfCoord(std::optional<Point> p) {
  if (!p) return {};
  std::string s;
  s += static_cast<char>('a' + p->x);
  s += static_cast<char>('a' + p->y);
  return s;
}

std::optional<Point> fromSgfCoord(std::string_view text, int size) {
  if (text.empty() || (text == "tt" && size <= 19)) return std::nullopt;
  if (text.size() != 2 || text[0] < 'a' || text[0] > 'z' || text[1] < 'a' || text[1] > 'z')
    throw MalformedCoordinate("bad SGF coordinate '" + std::string(text) + "'");
  const Point p{text[0] - 'a', text[1] - 'a'};
  if (p.x >= size || p.y >= size)
    throw MalformedCoordinate("SGF coordinate '" + std::string(text) + "' is off the board");
  return p;
}

int policyIndex(std::optional<Point> p, int size) { return p ? p->y * size + p->x : size * size; }

}  // namespace kibitz
