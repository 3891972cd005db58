#include "prefrank/ranking.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

#include "prefrank/errors.hpp"
#include "prefrank/random.hpp"

namespace prefrank::ranking {

std::unordered_map<ItemId, std::size_t> Ranking::positions() const {
  std::unordered_map<ItemId, std::size_t> pos;
  pos.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos.emplace(order[i], i);
  return pos;
}

std::string to_string(Schedule s) {
  return s == Schedule::MergeSort ? "mergesort" : "exhaustive";
}

Schedule parse_schedule(const std::string& name) {
  if (name == "mergesort") return Schedule::MergeSort;
  if (name == "exhaustive") return Schedule::Exhaustive;
  throw FormatError("unknown schedule '" + name + "'");
}

std::size_t merge_sort_worst_case(std::size_t n) {
  if (n < 2) return 0;
  const auto lg = static_cast<std::size_t>(std::bit_width(n - 1));  // ceil(log2 n)
  return n * lg - (std::size_t{1} << lg) + 1;
}

std::size_t max_queries(Schedule s, std::size_t n) {
  return s == Schedule::MergeSort ? merge_sort_worst_case(n) : n * (n - (n ? 1 : 0)) / 2;
}

namespace {

void push_merge_tasks(std::size_t lo, std::size_t hi, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (hi - lo < 2) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  push_merge_tasks(lo, mid, out);
  push_merge_tasks(mid, hi, out);
  out.emplace_back(lo, hi);
}

}  // namespace

SortSession::SortSession(SessionHeader header) : header_(std::move(header)) {
  if (header_.items.empty()) throw InvalidItems("session needs at least one item");
  std::unordered_set<ItemId> seen;
  for (auto id : header_.items)
    if (!seen.insert(id).second) throw InvalidItems("duplicate item id " + std::to_string(id));

  shuffled_ = header_.items;
  Rng rng(header_.seed);
  rng.shuffle(shuffled_);

  if (header_.schedule == Schedule::MergeSort) {
    work_ = shuffled_;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    push_merge_tasks(0, work_.size(), spans);
    for (auto [lo, hi] : spans) tasks_.push_back({lo, lo + (hi - lo) / 2, hi});
    if (!tasks_.empty()) {
      left_ = tasks_[0].lo;
      right_ = tasks_[0].mid;
    }
  } else {
    for (std::size_t i = 0; i < shuffled_.size(); ++i)
      for (std::size_t j = i + 1; j < shuffled_.size(); ++j) all_pairs_.emplace_back(i, j);
  }
  advance();
}

SortSession SortSession::replay(SessionHeader header, std::span<const LogEntry> log) {
  SortSession s(std::move(header));
  for (const auto& entry : log) {
    const auto q = s.pending();
    if (!q || q->query_id != entry.query.query_id || q->left_id != entry.query.left_id ||
        q->right_id != entry.query.right_id)
      throw FormatError("log entry " + std::to_string(entry.query.query_id) +
                        " does not match the replayed schedule");
    s.submit({entry.query.query_id, entry.winner}, entry.timestamp_ms);
  }
  return s;
}

void SortSession::advance() {
  if (header_.schedule == Schedule::Exhaustive) {
    if (log_.size() < all_pairs_.size()) return;
    std::vector<ItemId> order = shuffled_;
    std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
      return wins_[a] > wins_[b];
    });
    result_ = Ranking{std::move(order)};
    return;
  }
  while (task_ < tasks_.size()) {
    const auto& t = tasks_[task_];
    if (left_ < t.mid && right_ < t.hi) return;  // needs an answer
    merged_.insert(merged_.end(), work_.begin() + static_cast<std::ptrdiff_t>(left_),
                   work_.begin() + static_cast<std::ptrdiff_t>(t.mid));
    merged_.insert(merged_.end(), work_.begin() + static_cast<std::ptrdiff_t>(right_),
                   work_.begin() + static_cast<std::ptrdiff_t>(t.hi));
    std::copy(merged_.begin(), merged_.end(), work_.begin() + static_cast<std::ptrdiff_t>(t.lo));
    merged_.clear();
    if (++task_ < tasks_.size()) {
      left_ = tasks_[task_].lo;
      right_ = tasks_[task_].mid;
    }
  }
  result_ = Ranking{work_};
}

std::optional<ComparisonQuery> SortSession::pending() const {
  if (result_) return std::nullopt;
  ComparisonQuery q;
  q.query_id = static_cast<std::int64_t>(log_.size());
  q.emotion = header_.emotion;
  if (header_.schedule == Schedule::Exhaustive) {
    const auto [i, j] = all_pairs_[log_.size()];
    q.left_id = shuffled_[i];
    q.right_id = shuffled_[j];
  } else {
    q.left_id = work_[left_];
    q.right_id = work_[right_];
  }
  return q;
}

std::variant<ComparisonQuery, Ranking> SortSession::next_query() const {
  if (result_) return *result_;
  return *pending();
}

void SortSession::submit(const ComparisonAnswer& answer, std::int64_t timestamp_ms) {
  const auto q = pending();
  if (!q) throw StaleAnswer("session already completed");
  if (answer.query_id != q->query_id)
    throw StaleAnswer("answer for query " + std::to_string(answer.query_id) +
                      " but pending query is " + std::to_string(q->query_id));
  if (answer.winner != q->left_id && answer.winner != q->right_id)
    throw InvalidWinner("winner " + std::to_string(answer.winner) + " is not in the pair (" +
                        std::to_string(q->left_id) + ", " + std::to_string(q->right_id) + ")");
  log_.push_back({*q, answer.winner, timestamp_ms});
  if (header_.schedule == Schedule::Exhaustive) {
    ++wins_[answer.winner];
  } else {
    // Left run wins keep the merge stable.
    if (answer.winner == q->left_id)
      merged_.push_back(work_[left_++]);
    else
      merged_.push_back(work_[right_++]);
  }
  advance();
}

Insertion insert_item(const Ranking& r, ItemId item, const Oracle& oracle) {
  if (std::find(r.order.begin(), r.order.end(), item) != r.order.end())
    throw InvalidItems("item " + std::to_string(item) + " is already ranked");
  std::size_t lo = 0, hi = r.order.size(), calls = 0;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    ++calls;
    if (oracle(item, r.order[mid]) == item)
      hi = mid;
    else
      lo = mid + 1;
  }
  Insertion out{r, calls};
  out.ranking.order.insert(out.ranking.order.begin() + static_cast<std::ptrdiff_t>(lo), item);
  return out;
}

namespace {

std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& buf,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[k++] = v[i++];
    } else {
      inv += mid - i;
      buf[k++] = v[j++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

double kendall_tau(const Ranking& a, const Ranking& b) {
  if (a.size() != b.size()) throw IncomparableRankings("rankings differ in size");
  const auto pos_b = b.positions();
  if (pos_b.size() != b.size()) throw IncomparableRankings("duplicate item in ranking");
  std::vector<std::size_t> seq;
  seq.reserve(a.size());
  std::unordered_set<ItemId> seen;
  for (auto id : a.order) {
    const auto it = pos_b.find(id);
    if (it == pos_b.end() || !seen.insert(id).second)
      throw IncomparableRankings("item sets differ (item " + std::to_string(id) + ")");
    seq.push_back(it->second);
  }
  const std::size_t n = seq.size();
  if (n < 2) return 1.0;
  std::vector<std::size_t> buf(n);
  const auto discordant = static_cast<double>(count_inversions(seq, buf, 0, n));
  const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return (total - 2.0 * discordant) / total;
}

double consistency_check(const Ranking& r, std::span<const LogEntry> log) {
  if (log.empty()) return 1.0;
  const auto pos = r.positions();
  long long score = 0;
  for (const auto& e : log) {
    const auto w = pos.find(e.winner);
    const auto l = pos.find(e.loser());
    if (w == pos.end() || l == pos.end())
      throw IncomparableRankings("logged pair references an unranked item");
    score += w->second < l->second ? 1 : -1;
  }
  return static_cast<double>(score) / static_cast<double>(log.size());
}

}  // namespace prefrank::ranking
