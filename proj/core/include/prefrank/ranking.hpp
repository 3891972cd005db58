#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "prefrank/emotion.hpp"

namespace prefrank::ranking {

using ItemId = int;

struct ComparisonQuery {
  std::int64_t query_id = 0;
  ItemId left_id = 0;
  ItemId right_id = 0;
  Emotion emotion = Emotion::Neutral;
  friend bool operator==(const ComparisonQuery&, const ComparisonQuery&) = default;
};

struct ComparisonAnswer {
  std::int64_t query_id = 0;
  ItemId winner = 0;
};

struct LogEntry {
  ComparisonQuery query;
  ItemId winner = 0;
  std::int64_t timestamp_ms = 0;
  ItemId loser() const { return winner == query.left_id ? query.right_id : query.left_id; }
};

// order[0] is the strongest item.
struct Ranking {
  std::vector<ItemId> order;

  std::size_t size() const { return order.size(); }
  std::unordered_map<ItemId, std::size_t> positions() const;
  friend bool operator==(const Ranking&, const Ranking&) = default;
};

enum class Schedule {
  MergeSort,   // O(n log n) queries, lazily one at a time
  Exhaustive,  // every unordered pair once; ranked by win count
};

std::string to_string(Schedule s);
Schedule parse_schedule(const std::string& name);

// Worst-case comparisons of top-down merge sort: n*ceil(lg n) - 2^ceil(lg n) + 1.
std::size_t merge_sort_worst_case(std::size_t n);
// Queries a session of this schedule issues at most.
std::size_t max_queries(Schedule s, std::size_t n);

struct SessionHeader {
  std::vector<ItemId> items;
  Emotion emotion = Emotion::Neutral;
  std::string annotator_id;
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::MergeSort;
};

// Turns a "which is stronger?" oracle into a total ranking. The whole state
// is a deterministic function of the header and the answer log, so a
// session can be rebuilt by replaying its log. Single writer.
class SortSession {
 public:
  // Throws InvalidItems on an empty item list or duplicate ids.
  explicit SortSession(SessionHeader header);

  // Rebuilds a session by re-submitting every logged answer. Throws
  // FormatError if a logged pair differs from the pair the replay asks.
  static SortSession replay(SessionHeader header, std::span<const LogEntry> log);

  const SessionHeader& header() const { return header_; }
  // Items after the seeded shuffle.
  const std::vector<ItemId>& shuffled() const { return shuffled_; }

  // The pending query, or the final ranking. Idempotent until answered.
  std::variant<ComparisonQuery, Ranking> next_query() const;
  std::optional<ComparisonQuery> pending() const;

  // Throws StaleAnswer when the query id is not the pending one (or the
  // session is complete) and InvalidWinner when the winner is not in the pair.
  void submit(const ComparisonAnswer& answer, std::int64_t timestamp_ms = 0);

  bool completed() const { return result_.has_value(); }
  const std::optional<Ranking>& result() const { return result_; }
  const std::vector<LogEntry>& log() const { return log_; }
  std::size_t answered() const { return log_.size(); }

 private:
  struct MergeTask {
    std::size_t lo, mid, hi;
  };

  void advance();

  SessionHeader header_;
  std::vector<ItemId> shuffled_;
  std::vector<LogEntry> log_;
  std::optional<Ranking> result_;

  // merge-sort continuation
  std::vector<ItemId> work_;
  std::vector<MergeTask> tasks_;
  std::size_t task_ = 0;
  std::size_t left_ = 0;
  std::size_t right_ = 0;
  std::vector<ItemId> merged_;

  // exhaustive schedule
  std::vector<std::pair<std::size_t, std::size_t>> all_pairs_;
  std::unordered_map<ItemId, std::size_t> wins_;
};

// Returns the winner of (a, b).
using Oracle = std::function<ItemId(ItemId a, ItemId b)>;

struct Insertion {
  Ranking ranking;
  std::size_t comparisons = 0;
};

// Binary-search insertion: at most ceil(log2(n + 1)) oracle calls.
// Throws InvalidItems if the item is already ranked.
Insertion insert_item(const Ranking& r, ItemId item, const Oracle& oracle);

// (concordant - discordant) / C(n, 2). Computed by counting inversions with
// a merge pass. Throws IncomparableRankings on different item sets.
// Defined as 1 for fewer than two items.
double kendall_tau(const Ranking& a, const Ranking& b);

// (concordant - discordant) / |log| over the logged pairs; 1 for an empty
// log. Throws IncomparableRankings if a logged item is not ranked.
double consistency_check(const Ranking& r, std::span<const LogEntry> log);

}  // namespace prefrank::ranking
