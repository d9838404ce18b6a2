#pragma once

// Deterministic stand-in for a neural-network analysis engine.
//
// Every position gets a latent score L(s) (Black-positive points). Each legal
// move a has a fixed loss l(a) >= 0 for the mover, so L after the move is
// L(s) - l(a) for Black and L(s) + l(a) for White. Candidate sets, losses and
// policies are derived from a seeded hash of the move sequence, so the same
// seed and the same query always produce the same bytes, and the losses do not
// depend on the visit budget.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kibitz/analysis.hpp"
#include "kibitz/board.hpp"
#include "kibitz/engine.hpp"

namespace kibitz {

enum class PolicyShape { Natural, OneHot, UniformK };
PolicyShape parsePolicyShape(std::string_view s);
std::string_view policyShapeName(PolicyShape s);

struct StubConfig {
  std::uint64_t seed = 1;
  PolicyShape shape = PolicyShape::Natural;
  int uniformK = 5;
  int maxCandidates = 8;
  // Weight of the network's private noise in the raw policy. 0 means the raw
  // policy already equals the converged search distribution.
  double policyBlur = 0.9;
  // Jitter visit shares per query id (repeated runs differ).
  bool seededNoise = false;
  // Make the most visited candidate differ from the raw-policy argmax.
  bool forceDisagree = false;
  // Mover win rate above which the engine prefers a safe move costing safePlayLoss.
  double safePlayThreshold = 0.98;
  double safePlayLoss = 0.5;
  double initialLead = 0.0;
  std::string version = "kibitz-stub-1";

  // "key=value,key=value" with keys seed, shape, k, candidates, blur, noise,
  // disagree, safe, safeloss, lead.
  static StubConfig parse(std::string_view spec);
};

struct StubCandidate {
  Point point;
  int visits = 0;
  double loss = 0.0;   // points the mover gives up by playing it
  double prior = 0.0;  // raw policy value
};

struct StubPosition {
  int turn = 0;
  Color toMove = Color::Black;
  double latent = 0.0;   // L(s), Black-positive
  double winrate = 0.5;  // Black perspective
  std::vector<StubCandidate> candidates;  // most visited first
  std::vector<double> policy;             // size*size+1, kIllegalPolicy for illegal
  bool safeMode = false;
  // Loss of any move (candidates or not). Throws IllegalMove for illegal moves.
  std::function<double(std::optional<Point>)> lossOf;
};

class StubModel {
 public:
  explicit StubModel(StubConfig config);

  const StubConfig& config() const noexcept { return config_; }

  // Key of the empty/setup position for a game.
  std::uint64_t rootKey(int boardSize, const std::vector<AnalysisQuery::Placement>& setup) const;
  static std::uint64_t childKey(std::uint64_t parent, const Move& move);

  StubPosition evaluate(const BoardState& board, std::uint64_t key, double latent, int turn, int maxVisits,
                        std::string_view noiseKey) const;

  // Black-perspective win rate for a latent score at a given turn.
  static double winrateFor(double latent, int turn);

 private:
  StubConfig config_;
};

// Answers one query line with zero or more response lines (KataGo schema,
// side-to-move perspective). Pure function of (config, line).
class StubResponder {
 public:
  explicit StubResponder(StubConfig config);
  std::vector<std::string> respond(std::string_view queryLine) const;
  const StubModel& model() const noexcept { return model_; }

 private:
  StubModel model_;
};

struct StubTransportOptions {
  // Buffer responses of this many queries and release them in a seeded
  // shuffled order (1 = in order per query unless shuffle is set).
  std::size_t shuffleWindow = 1;
  bool shuffle = false;
  std::uint64_t shuffleSeed = 7;
};

// In-process transport backed by StubResponder.
std::unique_ptr<Transport> stubTransport(StubConfig config, StubTransportOptions transportOptions = {});

// Stub output for a sequence of queries, in order.
std::vector<std::string> recordTranscript(const StubConfig& config, const std::vector<std::string>& queryLines);
// Seeded Fisher-Yates shuffle.
void shuffleLines(std::vector<std::string>& lines, std::uint64_t seed);

// Answers version probes, and once `expectQueries` analysis queries have been
// written emits the recorded lines verbatim and closes its output.
std::unique_ptr<Transport> transcriptTransport(std::vector<std::string> lines, std::size_t expectQueries,
                                               std::string version = "kibitz-transcript");

std::unique_ptr<EngineHandle> stubEngine(StubConfig config, EngineOptions options = {},
                                         StubTransportOptions transportOptions = {});

}  // namespace kibitz
