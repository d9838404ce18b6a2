#include "kibitz/cache.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kibitz {

using json = nlohmann::ordered_json;

namespace {

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty()) out = "default";
  return out;
}

}  // namespace

std::string encodeCacheMetadata(const CacheMetadata& m) {
  json j;
  j["kind"] = "kibitz-analysis";
  j["schema"] = m.schema;
  j["game"] = m.gameHash;
  j["engine"] = m.engine;
  j["network"] = m.network;
  j["visits"] = m.visits;
  j["scoreField"] = m.scoreField;
  j["complete"] = m.complete;
  if (!m.error.empty()) j["error"] = m.error;
  return j.dump();
}

CacheMetadata decodeCacheMetadata(std::string_view line) {
  try {
    const json j = json::parse(line);
    if (j.at("kind") != "kibitz-analysis") throw ProtocolError("not an analysis cache file");
    CacheMetadata m;
    m.schema = j.at("schema").get<int>();
    if (m.schema != kCacheSchemaVersion)
      throw ProtocolError("cache schema " + std::to_string(m.schema) + " is not supported");
    m.gameHash = j.at("game").get<std::string>();
    m.engine = j.at("engine").get<std::string>();
    m.network = j.at("network").get<std::string>();
    m.visits = j.at("visits").get<int>();
    m.scoreField = j.at("scoreField").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.error = j.value("error", std::string());
    return m;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("bad cache metadata: ") + e.what(), std::string(line));
  }
}

AnalysisCache::AnalysisCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path AnalysisCache::pathFor(const CacheKey& key) const {
  const std::string prefix = key.gameHash.size() >= 2 ? key.gameHash.substr(0, 2) : "00";
  return root_ / prefix / (key.gameHash + "." + slug(key.network) + ".v" + std::to_string(key.maxVisits) + ".jsonl");
}

void AnalysisCache::store(const CacheKey& key, const CacheMetadata& metadata,
                          const std::vector<TurnAnalysis>& turns) const {
  const auto path = pathFor(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create cache directory " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << encodeCacheMetadata(metadata) << '\n';
    for (const auto& t : turns) out << encodeTurnAnalysis(t) << '\n';
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::optional<CacheEntry> AnalysisCache::loadEntry(const CacheKey& key) const {
  std::ifstream in(pathFor(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  CacheEntry e;
  e.metadata = decodeCacheMetadata(line);
  while (std::getline(in, line))
    if (!line.empty()) e.turns.push_back(decodeTurnAnalysis(line));
  return e;
}

std::optional<std::vector<TurnAnalysis>> AnalysisCache::load(const CacheKey& key) const {
  auto e = loadEntry(key);
  if (!e || !e->metadata.complete) return std::nullopt;
  return std::move(e->turns);
}

}  // namespace kibitz
