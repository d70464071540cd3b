#include "storyloop/memory_pool.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <ostream>

#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/text.hpp"

namespace storyloop::memory {
namespace {

using json = nlohmann::json;

json to_json(const MemoryItem& item) {
  return json{{"id", item.id},
              {"feature_text", item.feature_text},
              {"scenarios", item.scenarios},
              {"created_at", item.created_at}};
}

MemoryItem from_json(const json& j) {
  MemoryItem item;
  item.id = j.at("id").get<std::int64_t>();
  item.feature_text = j.at("feature_text").get<std::string>();
  item.scenarios = j.at("scenarios").get<std::vector<std::string>>();
  item.created_at = j.at("created_at").get<std::int64_t>();
  return item;
}

void csv_field(std::ostream& out, std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

TokenSet tokenize(std::string_view input) {
  TokenSet tokens;
  std::string current;
  for (char ch : input) {
    auto c = static_cast<unsigned char>(ch);
    if (text::is_space(ch)) {
      if (!current.empty()) tokens.insert(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) tokens.insert(std::move(current));
  return tokens;
}

double jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

MemoryPool::MemoryPool(std::filesystem::path store_path, const Clock& clock)
    : path_(std::move(store_path)), clock_(&clock), snapshot_(std::make_shared<Snapshot>()) {
  load();
}

MemoryPool::MemoryPool(const Clock& clock)
    : clock_(&clock), snapshot_(std::make_shared<Snapshot>()) {}

void MemoryPool::load() {
  std::error_code ec;
  if (!std::filesystem::exists(*path_, ec)) return;
  std::ifstream in(*path_, std::ios::binary);
  if (!in) throw Error(Errc::StoreUnreadable, "cannot open " + path_->string());

  auto loaded = std::make_shared<Snapshot>();
  std::string line;
  std::size_t line_no = 0;
  std::int64_t last_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto item = from_json(json::parse(line));
      if (item.id <= last_id)
        throw Error(Errc::StoreUnreadable, "ids not increasing at line " + std::to_string(line_no));
      last_id = item.id;
      auto tokens = tokenize(item.feature_text);
      loaded->push_back({std::move(item), std::move(tokens)});
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::StoreUnreadable,
                  path_->string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(loaded);
}

std::shared_ptr<const MemoryPool::Snapshot> MemoryPool::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::optional<MatchResult> MemoryPool::best_match(std::string_view nl, double threshold) const {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(Errc::InvalidArgument, "threshold must lie in [0, 1]");
  const auto snap = snapshot();
  const auto query = tokenize(nl);

  const Entry* best = nullptr;
  double best_score = -1.0;
  for (const auto& entry : *snap) {
    double score = jaccard(query, entry.tokens);
    // Entries are in id order, so >= lets the most recent tie win.
    if (score >= best_score) {
      best_score = score;
      best = &entry;
    }
  }
  if (best == nullptr || best_score < threshold) return std::nullopt;
  return MatchResult{best->item, best_score};
}

MemoryItem MemoryPool::record(std::string_view nl, std::vector<std::string> decided_scenarios) {
  if (decided_scenarios.empty())
    throw Error(Errc::InvalidArgument, "a memory item needs at least one scenario");
  if (text::trim(nl).empty()) throw Error(Errc::InvalidArgument, "feature text is empty");

  std::lock_guard writer(writer_mutex_);
  const auto current = snapshot();
  MemoryItem item;
  item.id = current->empty() ? 1 : current->back().item.id + 1;
  item.feature_text = std::string(nl);
  item.scenarios = std::move(decided_scenarios);
  item.created_at = clock_->wall_ms();

  if (path_) {
    std::error_code ec;
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path(), ec);
    if (!fsutil::append_durable(*path_, to_json(item).dump() + "\n"))
      throw Error(Errc::StoreWriteFailed, "cannot append to " + path_->string());
  }

  auto next = std::make_shared<Snapshot>(*current);
  next->push_back({item, tokenize(item.feature_text)});
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
  return item;
}

std::vector<MemoryItem> MemoryPool::items() const {
  std::vector<MemoryItem> out;
  for (const auto& e : *snapshot()) out.push_back(e.item);
  return out;
}

std::size_t MemoryPool::size() const { return snapshot()->size(); }

void MemoryPool::write_csv(std::ostream& out) const {
  out << "id,feature_text,scenario_count\n";
  for (const auto& e : *snapshot()) {
    out << e.item.id << ',';
    csv_field(out, e.item.feature_text);
    out << ',' << e.item.scenarios.size() << '\n';
  }
}

}  // namespace storyloop::memory
