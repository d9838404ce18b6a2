#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kibitz/analysis.hpp"
#include "kibitz/errors.hpp"

namespace kibitz::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int toInt(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int x = 0;
  try {
    x = std::stoi(v, &used);
  } catch (const std::exception&) {
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument(key + ": '" + v + "' is not an integer");
  return x;
}

bool toBool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument(key + ": '" + v + "' is not a boolean");
}

}  // namespace

std::vector<std::string> splitCommand(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  bool inWord = false;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < text.size()) {
        cur += text[++i];
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      inWord = true;
    } else if (c == '\\' && i + 1 < text.size()) {
      cur += text[++i];
      inWord = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (inWord) out.push_back(std::move(cur));
      cur.clear();
      inWord = false;
    } else {
      cur += c;
      inWord = true;
    }
  }
  if (quote) throw std::invalid_argument("unterminated quote in command line");
  if (inWord) out.push_back(std::move(cur));
  return out;
}

void applyConfigValue(Config& c, const std::string& key, const std::string& value) {
  if (key == "engine") {
    c.engineCommand = splitCommand(value);
  } else if (key == "network-label") {
    c.networkLabel = value;
  } else if (key == "rules") {
    c.rules = value;
  } else if (key == "visits") {
    c.visits = toInt(key, value);
  } else if (key == "komi-override") {
    std::size_t used = 0;
    double k = 0;
    try {
      k = std::stod(value, &used);
    } catch (const std::exception&) {
    }
    if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": '" + value + "' is not a number");
    c.komiOverride = k;
  } else if (key == "cache-dir") {
    c.cacheDir = value;
  } else if (key == "out") {
    c.outDir = value;
  } else if (key == "seed") {
    std::size_t used = 0;
    try {
      c.seed = std::stoull(value, &used);
    } catch (const std::exception&) {
    }
    if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": '" + value + "' is not a seed");
  } else if (key == "stub") {
    c.stub = value;
  } else if (key == "thresholds") {
    c.thresholdsFile = value;
  } else if (key == "leniency") {
    c.lenient = toBool(key, value);
  } else if (key == "jobs") {
    c.jobs = toInt(key, value);
  } else if (key == "score-field") {
    (void)parseScoreField(value);
    c.scoreField = value;
  } else if (key == "analyze-final") {
    c.analyzeFinal = toBool(key, value);
  } else if (key == "timeout") {
    c.timeoutSeconds = toInt(key, value);
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

void applyConfigText(Config& config, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineNo) + ": expected key = value");
    try {
      applyConfigValue(config, trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

void applyConfigFile(Config& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  applyConfigText(config, s.str());
}

void validate(const Config& c) {
  if (c.visits < 1) throw std::invalid_argument("visits must be at least 1");
  if (c.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (c.timeoutSeconds < 0) throw std::invalid_argument("timeout must not be negative");
}

}  // namespace kibitz::cli
