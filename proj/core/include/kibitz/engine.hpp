#pragma once

// Client side of a line-delimited JSON analysis engine.
//
// One writer thread owns the engine's input, one reader thread owns its
// output, and responses are routed back to callers by query id. Responses
// may arrive in any order and interleaved across queries.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "kibitz/analysis.hpp"

namespace kibitz {

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws EngineCrashed if the engine can no longer accept input.
  virtual void writeLine(const std::string& line) = 0;
  // Blocks for the next output line; nullopt once the engine's output is closed.
  virtual std::optional<std::string> readLine() = 0;
  // No more input will follow; the engine is expected to finish and exit.
  virtual void closeInput() = 0;
  // Forcefully stop the engine so readLine returns.
  virtual void terminate() = 0;
};

struct EngineOptions {
  std::string engineName = "engine";
  std::string networkLabel = "default";
  ScoreField scoreField = ScoreField::ScoreLead;
  std::size_t maxPending = 8;
  std::chrono::milliseconds handshakeTimeout{10000};
  // Zero waits indefinitely.
  std::chrono::milliseconds responseTimeout{0};
};

// Result of one query. `turns` holds whatever arrived (side-to-move
// perspective, sorted by turn); `error` is set when the query did not complete.
struct QueryOutcome {
  std::vector<TurnAnalysis> turns;
  std::exception_ptr error;
};

class EngineHandle {
 public:
  EngineHandle(std::unique_ptr<Transport> transport, EngineOptions options);
  ~EngineHandle();
  EngineHandle(const EngineHandle&) = delete;
  EngineHandle& operator=(const EngineHandle&) = delete;

  // Blocks while maxPending queries are in flight. Query ids must be unique
  // among in-flight queries.
  std::future<QueryOutcome> submit(AnalysisQuery query);

  // submit() and wait, honouring responseTimeout.
  QueryOutcome run(AnalysisQuery query);

  // Sends a version query and waits up to handshakeTimeout for the answer.
  void probe();

  const EngineOptions& options() const noexcept { return options_; }
  std::uint64_t queriesSent() const noexcept { return queriesSent_.load(); }
  std::size_t peakInFlight() const;
  // Every line the engine wrote that could not be decoded or routed.
  std::vector<ProtocolError> protocolErrors() const;

 private:
  struct Pending {
    AnalysisQuery query;
    std::size_t expected = 0;
    std::map<int, TurnAnalysis> received;
    std::promise<QueryOutcome> promise;
    std::size_t protocolErrorsAtSubmit = 0;
    bool isAction = false;
  };

  std::future<QueryOutcome> enqueue(AnalysisQuery query, std::string line, std::size_t expected, bool isAction);
  void writerLoop();
  void readerLoop();
  void handleLine(const std::string& line);
  void finish(std::map<std::string, Pending>::iterator it, std::exception_ptr error);
  std::optional<std::size_t> errorFor(const Pending& p) const;
  std::exception_ptr failureFor(const Pending& p, const char* what) const;
  void abandon(const std::string& id);

  std::unique_ptr<Transport> transport_;
  EngineOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable slotFree_;
  std::condition_variable outgoingReady_;
  std::map<std::string, Pending> pending_;
  std::deque<std::string> outgoing_;
  std::vector<ProtocolError> protocolErrors_;
  // Query id a protocol error was attributed to, empty when unattributed.
  std::vector<std::string> errorOwners_;
  // Queries that ended in an error; late lines for them are dropped.
  std::set<std::string> retired_;
  std::size_t peakInFlight_ = 0;
  bool stopping_ = false;
  bool outputClosed_ = false;
  std::atomic<std::uint64_t> queriesSent_{0};
  std::uint64_t probeCounter_ = 0;

  std::thread writer_;
  std::thread reader_;
};

// Spawns `argv` (argv[0] looked up on PATH) and performs the probe handshake.
// Throws SpawnFailure or HandshakeTimeout.
std::unique_ptr<EngineHandle> startEngine(const std::vector<std::string>& argv, EngineOptions options);

// Transport over a child process's stdin/stdout.
std::unique_ptr<Transport> spawnProcessTransport(const std::vector<std::string>& argv);

}  // namespace kibitz
