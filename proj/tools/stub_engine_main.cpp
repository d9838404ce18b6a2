// Line-oriented stand-in for a KataGo-style analysis engine, backed by the
// deterministic stub model. Used for subprocess and protocol tests.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kibitz/random.hpp"
#include "kibitz/stub_engine.hpp"

namespace {

struct Output {
  long injectAt = 0;  // 1-based index of the analysis line to corrupt
  long exitAfter = 0;
  long written = 0;

  void analysisLine(const std::string& line) {
    ++written;
    if (written == injectAt) {
      std::cout << line.substr(0, line.size() / 2) << "\n";
    } else {
      std::cout << line << "\n";
    }
    std::cout.flush();
    if (exitAfter > 0 && written >= exitAfter) std::_Exit(3);
  }
};

bool isAction(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return j.is_object() && j.contains("action");
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kibitz-stub-engine: deterministic analysis engine speaking line-delimited JSON"};
  std::string configText;
  std::size_t window = 1;
  std::uint64_t shuffleSeed = 7;
  std::string transcript;
  std::size_t expect = 1;
  Output out;
  app.add_option("--config", configText, "Stub options k=v,... (seed, shape, k, candidates, blur, noise, disagree, safe, safeloss, lead)");
  app.add_option("--shuffle-window", window, "Release responses of this many queries in shuffled order");
  app.add_option("--shuffle-seed", shuffleSeed, "Seed of the response shuffle");
  app.add_option("--inject-malformed", out.injectAt, "Truncate the Nth analysis output line (1-based)");
  app.add_option("--exit-after", out.exitAfter, "Exit abruptly after writing N analysis lines");
  app.add_option("--transcript", transcript, "Replay the response lines of this file instead of computing them");
  app.add_option("--expect", expect, "Queries to wait for before replaying the transcript");
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  kibitz::StubConfig config;
  try {
    config = kibitz::StubConfig::parse(configText);
  } catch (const std::exception& e) {
    std::cerr << "kibitz-stub-engine: " << e.what() << "\n";
    return 1;
  }
  const kibitz::StubResponder responder(config);

  std::vector<std::string> recorded;
  if (!transcript.empty()) {
    std::ifstream in(transcript, std::ios::binary);
    if (!in) {
      std::cerr << "kibitz-stub-engine: cannot read " << transcript << "\n";
      return 1;
    }
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) recorded.push_back(l);
  }

  kibitz::Rng shuffle(shuffleSeed);
  std::vector<std::string> held;
  std::size_t heldQueries = 0, received = 0;
  auto release = [&] {
    for (std::size_t i = held.size(); window > 1 && i > 1; --i) std::swap(held[i - 1], held[shuffle.below(i)]);
    for (const auto& l : held) out.analysisLine(l);
    held.clear();
    heldQueries = 0;
  };

  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    if (isAction(line)) {
      for (const auto& l : responder.respond(line)) std::cout << l << "\n";
      std::cout.flush();
      continue;
    }
    if (!transcript.empty()) {
      if (++received == expect) {
        for (const auto& l : recorded) out.analysisLine(l);
        return 0;
      }
      continue;
    }
    auto lines = responder.respond(line);
    held.insert(held.end(), lines.begin(), lines.end());
    if (++heldQueries >= std::max<std::size_t>(1, window)) release();
  }
  release();
  return 0;
}
