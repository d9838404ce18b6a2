#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kibitz/analysis.hpp"

namespace kibitz::testing {

struct Cand {
  std::string move;
  int visits = 1;
  double scoreMean = 0.0;
  double winrate = 0.5;
};

inline TurnAnalysis turn(int index, double rootScore, std::vector<Cand> cands = {}, int size = 9,
                         double rootWinrate = 0.5) {
  TurnAnalysis a;
  a.turnIndex = index;
  a.boardSize = size;
  a.rootScoreMean = rootScore;
  a.rootWinrate = rootWinrate;
  for (const auto& c : cands) {
    a.candidates.push_back({c.move, c.visits, c.winrate, c.scoreMean, 0.0, {}});
    a.totalVisits += c.visits;
  }
  return a;
}

// Policy over size*size+1 slots with the given (slot, value) pairs; the rest
// of the mass is spread evenly over the remaining slots.
inline std::vector<double> policyWith(int size, std::vector<std::pair<int, double>> fixed, bool withPass = true) {
  const std::size_t n = static_cast<std::size_t>(size * size) + (withPass ? 1 : 0);
  std::vector<double> p(n, 0.0);
  std::vector<bool> isFixed(n, false);
  double used = 0.0;
  for (const auto& [slot, v] : fixed) {
    p[static_cast<std::size_t>(slot)] = v;
    isFixed[static_cast<std::size_t>(slot)] = true;
    if (v > 0.0) used += v;
  }
  const std::size_t rest = n - fixed.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!isFixed[i]) p[i] = rest ? (1.0 - used) / static_cast<double>(rest) : 0.0;
  return p;
}

}  // namespace kibitz::testing
