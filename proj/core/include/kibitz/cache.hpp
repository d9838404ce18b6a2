#pragma once

// On-disk analysis cache: one JSON-lines sidecar per (game, network, visits).
// The first line is metadata, every following line one TurnAnalysis.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kibitz/analysis.hpp"

namespace kibitz {

inline constexpr int kCacheSchemaVersion = 1;

struct CacheKey {
  std::string gameHash;
  std::string network;
  int maxVisits = 0;
};

struct CacheMetadata {
  int schema = kCacheSchemaVersion;
  std::string gameHash;
  std::string engine;
  std::string network;
  int visits = 0;
  std::string scoreField = "scoreLead";
  bool complete = true;
  // Set on partial entries: why the analysis stopped.
  std::string error;
  friend bool operator==(const CacheMetadata&, const CacheMetadata&) = default;
};

struct CacheEntry {
  CacheMetadata metadata;
  std::vector<TurnAnalysis> turns;
};

class AnalysisCache {
 public:
  explicit AnalysisCache(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path pathFor(const CacheKey& key) const;

  // Writes atomically (temp file + rename). Throws IoError.
  void store(const CacheKey& key, const CacheMetadata& metadata, const std::vector<TurnAnalysis>& turns) const;

  // Complete entries only.
  std::optional<std::vector<TurnAnalysis>> load(const CacheKey& key) const;
  // Any entry, partial ones included. Throws ProtocolError on a corrupt file.
  std::optional<CacheEntry> loadEntry(const CacheKey& key) const;

 private:
  std::filesystem::path root_;
};

std::string encodeCacheMetadata(const CacheMetadata& m);
CacheMetadata decodeCacheMetadata(std::string_view line);

}  // namespace kibitz
