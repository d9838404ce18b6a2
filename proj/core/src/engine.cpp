#include "kibitz/engine.hpp"

#include <csignal>
#include <cstring>
#include <iostream>
#include <set>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace kibitz {

ProtocolError::ProtocolError(std::string message, std::string rawLine)
    : Error(std::move(message)), rawLine_(std::move(rawLine)) {}

namespace {

class ProcessTransport final : public Transport {
 public:
  explicit ProcessTransport(const std::vector<std::string>& argv) {
    if (argv.empty()) throw SpawnFailure("empty engine command line");
    std::signal(SIGPIPE, SIG_IGN);
    int in[2], out[2];
    if (::pipe2(in, O_CLOEXEC) != 0) throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out, O_CLOEXEC) != 0) {
      ::close(in[0]);
      ::close(in[1]);
      throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in[0]);
    ::close(out[1]);
    if (rc != 0) {
      ::close(in[1]);
      ::close(out[0]);
      throw SpawnFailure("cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    writeFd_ = in[1];
    readFd_ = out[0];
  }

  ~ProcessTransport() override {
    closeInput();
    if (readFd_ >= 0) ::close(readFd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void writeLine(const std::string& line) override {
    std::string buf = line;
    buf += '\n';
    std::size_t off = 0;
    while (off < buf.size()) {
      if (writeFd_ < 0) throw EngineCrashed("engine input already closed");
      const ssize_t n = ::write(writeFd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EngineCrashed(std::string("writing to engine failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> readLine() override {
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[65536];
      const ssize_t n = ::read(readFd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buffer_.empty()) return std::nullopt;
        std::string rest = std::move(buffer_);
        buffer_.clear();
        return rest;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void closeInput() override {
    std::lock_guard lock(closeMutex_);
    if (writeFd_ >= 0) {
      ::close(writeFd_);
      writeFd_ = -1;
    }
  }

  void terminate() override {
    if (pid_ > 0) ::kill(pid_, SIGKILL);
  }

 private:
  pid_t pid_ = -1;
  int writeFd_ = -1;
  int readFd_ = -1;
  std::string buffer_;
  std::mutex closeMutex_;
};

// The id of a line that starts like a response object, even if it is cut short.
std::optional<std::string> leadingId(const std::string& line) {
  static constexpr std::string_view key = R"({"id":")";
  const auto start = line.find_first_not_of(" \t");
  if (start == std::string::npos || line.compare(start, key.size(), key) != 0) return std::nullopt;
  const auto from = start + key.size();
  const auto end = line.find('"', from);
  if (end == std::string::npos || end == from) return std::nullopt;
  return line.substr(from, end - from);
}

QueryOutcome readyOutcome(std::exception_ptr error) {
  QueryOutcome o;
  o.error = std::move(error);
  return o;
}

}  // namespace

std::unique_ptr<Transport> spawnProcessTransport(const std::vector<std::string>& argv) {
  return std::make_unique<ProcessTransport>(argv);
}

EngineHandle::EngineHandle(std::unique_ptr<Transport> transport, EngineOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {
  if (options_.maxPending == 0) options_.maxPending = 1;
  writer_ = std::thread([this] { writerLoop(); });
  reader_ = std::thread([this] { readerLoop(); });
}

EngineHandle::~EngineHandle() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  outgoingReady_.notify_all();
  slotFree_.notify_all();
  writer_.join();
  {
    std::unique_lock lock(mutex_);
    if (!slotFree_.wait_for(lock, std::chrono::seconds(5), [this] { return outputClosed_; })) {
      lock.unlock();
      transport_->terminate();
    }
  }
  reader_.join();
}

std::future<QueryOutcome> EngineHandle::submit(AnalysisQuery query) {
  std::string line = encodeQuery(query);
  const std::size_t expected = std::set<int>(query.analyzeTurns.begin(), query.analyzeTurns.end()).size();
  queriesSent_.fetch_add(1);
  return enqueue(std::move(query), std::move(line), expected, false);
}

std::future<QueryOutcome> EngineHandle::enqueue(AnalysisQuery query, std::string line, std::size_t expected,
                                                bool isAction) {
  std::unique_lock lock(mutex_);
  slotFree_.wait(lock, [this] { return pending_.size() < options_.maxPending || stopping_ || outputClosed_; });
  if (outputClosed_ || stopping_) {
    std::promise<QueryOutcome> p;
    p.set_value(readyOutcome(std::make_exception_ptr(EngineCrashed("engine is not running"))));
    return p.get_future();
  }
  const std::string id = query.id;
  if (pending_.count(id)) throw std::invalid_argument("query id '" + id + "' is already in flight");
  if (expected == 0) {
    std::promise<QueryOutcome> p;
    p.set_value(QueryOutcome{});
    return p.get_future();
  }
  retired_.erase(id);
  Pending& p = pending_[id];
  p.query = std::move(query);
  p.expected = expected;
  p.isAction = isAction;
  p.protocolErrorsAtSubmit = protocolErrors_.size();
  auto fut = p.promise.get_future();
  peakInFlight_ = std::max(peakInFlight_, pending_.size());
  outgoing_.push_back(std::move(line));
  lock.unlock();
  outgoingReady_.notify_one();
  return fut;
}

QueryOutcome EngineHandle::run(AnalysisQuery query) {
  const std::string id = query.id;
  auto fut = submit(std::move(query));
  if (options_.responseTimeout.count() > 0 && fut.wait_for(options_.responseTimeout) == std::future_status::timeout)
    abandon(id);
  return fut.get();
}

void EngineHandle::probe() {
  AnalysisQuery q;
  {
    std::lock_guard lock(mutex_);
    q.id = "kibitz-probe-" + std::to_string(++probeCounter_);
  }
  const std::string line = R"({"id":")" + q.id + R"(","action":"query_version"})";
  const std::string id = q.id;
  auto fut = enqueue(std::move(q), line, 1, true);
  if (fut.wait_for(options_.handshakeTimeout) == std::future_status::timeout) {
    abandon(id);
    throw HandshakeTimeout("engine did not answer the version probe within " +
                           std::to_string(options_.handshakeTimeout.count()) + " ms");
  }
  QueryOutcome o = fut.get();
  if (o.error) std::rethrow_exception(o.error);
}

std::size_t EngineHandle::peakInFlight() const {
  std::lock_guard lock(mutex_);
  return peakInFlight_;
}

std::vector<ProtocolError> EngineHandle::protocolErrors() const {
  std::lock_guard lock(mutex_);
  return protocolErrors_;
}

void EngineHandle::writerLoop() {
  while (true) {
    std::unique_lock lock(mutex_);
    outgoingReady_.wait(lock, [this] { return !outgoing_.empty() || stopping_; });
    if (outgoing_.empty()) break;
    std::string line = std::move(outgoing_.front());
    outgoing_.pop_front();
    lock.unlock();
    try {
      transport_->writeLine(line);
    } catch (const EngineCrashed&) {
      // The reader sees EOF and fails everything still pending.
    }
  }
  transport_->closeInput();
}

void EngineHandle::readerLoop() {
  while (auto line = transport_->readLine()) handleLine(*line);
  std::lock_guard lock(mutex_);
  outputClosed_ = true;
  while (!pending_.empty()) {
    auto it = pending_.begin();
    finish(it, failureFor(it->second, "engine closed its output before answering"));
  }
  slotFree_.notify_all();
}

void EngineHandle::handleLine(const std::string& line) {
  if (line.find_first_not_of(" \t\r") == std::string::npos) return;
  std::lock_guard lock(mutex_);
  ResponseLine decoded;
  try {
    decoded = decodeResponse(line, options_.scoreField, 0);
  } catch (const ProtocolError& e) {
    protocolErrors_.push_back(e);
    errorOwners_.emplace_back();
    // A damaged line that still names its query fails that query now.
    if (const auto id = leadingId(line)) {
      auto it = pending_.find(*id);
      if (it != pending_.end() && !it->second.isAction) {
        errorOwners_.back() = *id;
        finish(it, failureFor(it->second, ""));
      }
    }
    return;
  }

  if (auto* r = std::get_if<AnalysisResponse>(&decoded)) {
    auto it = pending_.find(r->id);
    if (it == pending_.end() && retired_.count(r->id)) return;
    if (it == pending_.end() || it->second.isAction) {
      protocolErrors_.emplace_back("response for unknown query id '" + r->id + "'", line);
      errorOwners_.emplace_back();
      return;
    }
    r->analysis.boardSize = it->second.query.boardSize;
    it->second.received[r->turnNumber] = std::move(r->analysis);
    if (it->second.received.size() >= it->second.expected) finish(it, nullptr);
  } else if (auto* e = std::get_if<ErrorResponse>(&decoded)) {
    auto it = pending_.find(e->id);
    ProtocolError err("engine rejected query '" + e->id + "': " + e->message, line);
    if (it == pending_.end() && retired_.count(e->id)) return;
    if (it == pending_.end()) {
      protocolErrors_.push_back(err);
      errorOwners_.emplace_back();
      return;
    }
    finish(it, std::make_exception_ptr(err));
  } else if (auto* a = std::get_if<ActionResponse>(&decoded)) {
    auto it = pending_.find(a->id);
    if (it != pending_.end() && it->second.isAction) finish(it, nullptr);
  }
  // Warnings carry no state we need.
}

void EngineHandle::finish(std::map<std::string, Pending>::iterator it, std::exception_ptr error) {
  QueryOutcome out;
  for (auto& [turn, a] : it->second.received) out.turns.push_back(std::move(a));
  if (error) retired_.insert(it->first);
  out.error = std::move(error);
  it->second.promise.set_value(std::move(out));
  pending_.erase(it);
  slotFree_.notify_all();
}

std::optional<std::size_t> EngineHandle::errorFor(const Pending& p) const {
  for (std::size_t i = p.protocolErrorsAtSubmit; i < protocolErrors_.size(); ++i)
    if (errorOwners_[i].empty() || errorOwners_[i] == p.query.id) return i;
  return std::nullopt;
}

std::exception_ptr EngineHandle::failureFor(const Pending& p, const char* what) const {
  if (const auto i = errorFor(p)) {
    const ProtocolError& first = protocolErrors_[*i];
    return std::make_exception_ptr(ProtocolError("query '" + p.query.id + "' incomplete (" +
                                                     std::to_string(p.received.size()) + "/" +
                                                     std::to_string(p.expected) + " turns): " + first.what(),
                                                 first.rawLine()));
  }
  return std::make_exception_ptr(EngineCrashed("query '" + p.query.id + "': " + what + " (" +
                                               std::to_string(p.received.size()) + "/" +
                                               std::to_string(p.expected) + " turns received)"));
}

void EngineHandle::abandon(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = pending_.find(id);
  if (it == pending_.end()) return;
  std::exception_ptr err = failureFor(it->second, "");
  if (!errorFor(it->second))
    err = std::make_exception_ptr(ResponseTimeout("query '" + id + "' timed out"));
  finish(it, err);
}

std::unique_ptr<EngineHandle> startEngine(const std::vector<std::string>& argv, EngineOptions options) {
  auto handle = std::make_unique<EngineHandle>(spawnProcessTransport(argv), std::move(options));
  handle->probe();
  return handle;
}

}  // namespace kibitz
