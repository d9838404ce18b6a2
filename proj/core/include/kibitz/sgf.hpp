#pragma once

// SGF FF[4] reader/writer.
//
//   Collection := GameTree+
//   GameTree   := "(" Node+ GameTree* ")"
//   Node       := ";" Property*
//   Property   := Ident ("[" Value "]")+
//
// Property values are stored unescaped. Only the main line (first child at
// every branch) is interpreted; everything else is kept in the raw tree and
// written back unchanged.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kibitz/board.hpp"

namespace kibitz {

struct SgfProperty {
  std::string ident;
  std::vector<std::string> values;
  friend bool operator==(const SgfProperty&, const SgfProperty&) = default;
};

struct SgfNode {
  std::vector<SgfProperty> properties;

  const SgfProperty* find(std::string_view ident) const;
  SgfProperty* find(std::string_view ident);
  friend bool operator==(const SgfNode&, const SgfNode&) = default;
};

struct SgfTree {
  std::vector<SgfNode> nodes;
  std::vector<SgfTree> children;
  friend bool operator==(const SgfTree&, const SgfTree&) = default;
};

struct SetupStone {
  Color color;
  Point point;
  friend bool operator==(const SetupStone&, const SetupStone&) = default;
};

struct GameRecord {
  int size = 19;
  double komi = 0.0;
  int handicap = 0;
  std::vector<SetupStone> setupStones;
  std::vector<Move> moves;
  std::string blackName;
  std::string whiteName;
  std::optional<std::string> result;
  // One entry per move: the C[] text on the node that carries the move.
  std::vector<std::optional<std::string>> comments;
  // Time left after each move (BL/WL), when the record carries it.
  std::vector<std::optional<double>> timeLeft;
  // Everything that was parsed, including variations and unknown properties.
  std::vector<SgfTree> rawTrees;

  const std::string& playerName(Color c) const { return c == Color::Black ? blackName : whiteName; }
  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

struct ParsedGame {
  GameRecord record;
  std::vector<std::string> warnings;
};

// Throws ParseError (with byte offset) on structurally invalid input and on
// values the record cannot represent (bad coordinates, unsupported sizes).
ParsedGame parseSgf(std::string_view bytes);

// Serializes rawTrees with the main-line comments taken from record.comments.
// Records built in code (no rawTrees) get a minimal tree from their fields.
std::string writeSgf(const GameRecord& record);

// Appends text to the comment of the node holding move moveIndex.
void annotateMove(GameRecord& record, std::size_t moveIndex, std::string_view text);

// Escapes ']' and '\' for use inside a property value.
std::string escapeSgfValue(std::string_view raw);

}  // namespace kibitz
