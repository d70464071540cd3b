#pragma once

// Experience memory: previously decided (requirement, scenarios) pairs,
// retrieved by lexical Jaccard similarity between requirements.
//
// Store format (memory_pool.store): UTF-8 JSON Lines, one object per item,
//   {"id":1,"feature_text":"...","scenarios":["...","..."],"created_at":1700000000000}
// appended in id order. created_at is milliseconds since the Unix epoch.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "storyloop/clock.hpp"

namespace storyloop::memory {

using TokenSet = std::set<std::string>;

/// Lowercases ASCII, deletes ASCII punctuation, splits on whitespace.
TokenSet tokenize(std::string_view text);

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const TokenSet& a, const TokenSet& b);

struct MemoryItem {
  std::int64_t id = 0;
  std::string feature_text;
  std::vector<std::string> scenarios;
  std::int64_t created_at = 0;

  bool operator==(const MemoryItem&) const = default;
};

struct MatchResult {
  MemoryItem item;
  double score = 0.0;
};

class MemoryPool {
 public:
  /// Opens (or creates on first record) the store at path.
  /// Throws Error(StoreUnreadable) if an existing store cannot be parsed.
  explicit MemoryPool(std::filesystem::path store_path, const Clock& clock = SystemClock::instance());

  /// Pool that lives only in memory.
  explicit MemoryPool(const Clock& clock = SystemClock::instance());

  MemoryPool(const MemoryPool&) = delete;
  MemoryPool& operator=(const MemoryPool&) = delete;

  /// Highest-scoring item with score >= threshold; ties go to the higher id.
  std::optional<MatchResult> best_match(std::string_view nl, double threshold) const;

  /// Persists a new item with the next id. Throws Error(StoreWriteFailed)
  /// (pool unchanged) when the append cannot be made durable.
  MemoryItem record(std::string_view nl, std::vector<std::string> decided_scenarios);

  std::vector<MemoryItem> items() const;
  std::size_t size() const;

  /// CSV dump: id,feature_text,scenario_count
  void write_csv(std::ostream& out) const;

  const std::optional<std::filesystem::path>& store_path() const noexcept { return path_; }

 private:
  struct Entry {
    MemoryItem item;
    TokenSet tokens;
  };
  using Snapshot = std::vector<Entry>;

  std::shared_ptr<const Snapshot> snapshot() const;
  void load();

  std::optional<std::filesystem::path> path_;
  const Clock* clock_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex writer_mutex_;
};

}  // namespace storyloop::memory
