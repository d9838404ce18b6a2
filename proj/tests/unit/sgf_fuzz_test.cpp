#include <doctest.h>

#include <chrono>
#include <string>
#include <vector>

#include "kibitz/random.hpp"
#include "kibitz/sgf.hpp"
#include "test_util.hpp"

using namespace kibitz;
namespace kt = kibitz::testing;

namespace {

enum class Outcome { Parsed, ParseError, Other };

Outcome attempt(const std::string& bytes) {
  try {
    (void)parseSgf(bytes);
    return Outcome::Parsed;
  } catch (const ParseError&) {
    return Outcome::ParseError;
  } catch (...) {
    return Outcome::Other;
  }
}

std::string randomBytes(Rng& rng) {
  static const std::string alphabet = "();[]\\:ABCWZLaekst \n09";
  const std::size_t len = rng.below(200);
  std::string s;
  s.reserve(len);
  const bool sgfish = rng.below(2) == 0;
  for (std::size_t i = 0; i < len; ++i)
    s += sgfish ? alphabet[rng.below(alphabet.size())] : static_cast<char>(rng.below(256));
  return s;
}

std::string mutate(const std::string& base, Rng& rng) {
  std::string s = base;
  const int edits = 1 + static_cast<int>(rng.below(8));
  for (int e = 0; e < edits && !s.empty(); ++e) {
    const std::size_t at = rng.below(s.size());
    switch (rng.below(4)) {
      case 0: s[at] = static_cast<char>(rng.below(256)); break;
      case 1: s.erase(at, 1 + rng.below(16)); break;
      case 2: s.insert(at, 1, "()[];\\"[rng.below(6)]); break;
      default: s.resize(at); break;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("fuzz: random and mutated inputs only parse or raise ParseError") {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> seeds;
  for (const auto& f : kt::corpusFiles()) seeds.push_back(kt::readFile(f));
  REQUIRE_FALSE(seeds.empty());

  Rng rng(0x5eed);
  int parsed = 0, rejected = 0, other = 0;
  constexpr int kCases = 12000;
  for (int i = 0; i < kCases; ++i) {
    const std::string input = i % 2 == 0 ? randomBytes(rng) : mutate(seeds[rng.below(seeds.size())], rng);
    switch (attempt(input)) {
      case Outcome::Parsed: ++parsed; break;
      case Outcome::ParseError: ++rejected; break;
      case Outcome::Other:
        ++other;
        FAIL_CHECK("unexpected exception type for input #" << i);
        break;
    }
  }
  MESSAGE("parsed " << parsed << ", rejected " << rejected);
  CHECK(other == 0);
  CHECK(parsed + rejected == kCases);
  CHECK(parsed > 0);
  CHECK(rejected > 0);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(30));
}
