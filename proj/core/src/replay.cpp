#include "kibitz/replay.hpp"

namespace kibitz {

BoardState initialState(const GameRecord& record) {
  BoardState s(record.size);
  for (const auto& st : record.setupStones) s.placeSetupStone(st.color, st.point);
  if (!record.moves.empty())
    s.setToMove(record.moves.front().color);
  else if (record.handicap > 1 || !record.setupStones.empty())
    s.setToMove(Color::White);
  return s;
}

Replay replay(const GameRecord& record, ReplayOptions options) {
  Replay out;
  out.states.push_back(initialState(record));
  const Leniency leniency = options.lenient ? Leniency::lenient() : Leniency::strict();

  for (std::size_t i = 0; i < record.moves.size(); ++i) {
    const Move& m = record.moves[i];
    BoardState cur = out.states.back();
    if (cur.toMove() != m.color) {
      out.warnings.push_back("move " + std::to_string(i + 1) + ": " + std::string(colorName(m.color)) + " plays out of turn");
      cur.setToMove(m.color);
    }
    try {
      BoardState next = cur.applyMove(m, Leniency::strict());
      out.states.push_back(std::move(next));
    } catch (const IllegalMove& e) {
      const int turn = static_cast<int>(i);
      if (!options.lenient) throw IllegalMove(e.reason(), m, turn);
      if (e.reason() == IllegalMove::Reason::Occupied || e.reason() == IllegalMove::Reason::OffBoard) {
        out.warnings.push_back(std::string(IllegalMove(e.reason(), m, turn).what()) + "; move skipped");
        continue;
      }
      out.warnings.push_back(std::string(IllegalMove(e.reason(), m, turn).what()) + "; accepted (lenient)");
      out.states.push_back(cur.applyMove(m, leniency));
    }
    out.moves.push_back(m);
    out.sourceIndex.push_back(i);
  }
  return out;
}

}  // namespace kibitz
