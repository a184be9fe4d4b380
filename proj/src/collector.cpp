#include "spotvista/collector.hpp"

#include <algorithm>
#include <optional>

#include "spotvista/error.hpp"

namespace spotvista::collector {

void CollectorConfig::validate() const {
  if (interval <= Minutes{0}) throw InvalidArgument("interval must be positive");
  if (t_min < 1 || t_min > t_max || t_max > kMaxNodeCount) {
    throw InvalidArgument("need 1 <= t_min <= t_max <= 50");
  }
  if (step < 1 || step > t_max - t_min + 1) {
    throw InvalidArgument("need 1 <= step <= t_max - t_min + 1");
  }
  if (early_stop < 1) throw InvalidArgument("early_stop must be >= 1");
}

std::vector<int> make_usqs_grid(int t_min, int step, int t_max,
                                bool include_single_node) {
  if (t_min < 1 || t_min > t_max || t_max > kMaxNodeCount || step < 1) {
    throw InvalidArgument("invalid USQS grid parameters");
  }
  std::vector<int> grid;
  if (include_single_node && t_min > 1) grid.push_back(1);
  for (int n = t_min; n <= t_max; n += step) grid.push_back(n);
  return grid;
}

Minutes requery_delay(std::size_t grid_size, Minutes interval) {
  return interval * static_cast<Minutes::rep>(grid_size);
}

UsqsState::UsqsState(std::vector<int> grid) : grid_(std::move(grid)) {
  if (grid_.empty()) throw InvalidArgument("USQS grid must not be empty");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (grid_[i] < 1 || grid_[i] > kMaxNodeCount ||
        (i > 0 && grid_[i] <= grid_[i - 1])) {
      throw InvalidArgument("USQS grid must be strictly increasing within [1, 50]");
    }
  }
}

UsqsState UsqsState::from_config(const CollectorConfig& config) {
  return UsqsState(make_usqs_grid(config.t_min, config.step, config.t_max,
                                  config.include_single_node));
}

void UsqsState::record(int node_count, SpsValue sps, Timestamp ts) {
  auto& slot = last_known_[node_count];
  if (slot.timestamp <= ts) slot = {sps, ts};
}

int usqs_next_target(UsqsState& state) {
  const int target = state.peek();
  state.advance();
  return target;
}

namespace {

int estimate_threshold(const UsqsState& state, int t_max, int level) {
  if (state.last_known().empty()) {
    throw EmptyInput("no USQS samples recorded yet");
  }
  int best = 0;
  int ceiling = 3;
  for (const auto& [count, sample] : state.last_known()) {
    if (count > t_max) break;
    ceiling = std::min(ceiling, sample.sps.value());
    if (ceiling >= level) best = count;
  }
  return best;
}

// Answers memoized for one search cycle; every new answer is checked
// against the ones already seen.
class ProfileProbe {
 public:
  explicit ProfileProbe(const QueryFn& query) : query_(query) {}

  int at(int n) {
    auto it = answers_.find(n);
    if (it != answers_.end()) return it->second;
    const int v = query_(n).value();
    ++queries_;
    for (const auto& [m, w] : answers_) {
      if ((m < n && w < v) || (m > n && w > v)) {
        throw InconsistentProfile("SPS increased with node count: f(" +
                                  std::to_string(m) + ")=" + std::to_string(w) +
                                  ", f(" + std::to_string(n) + ")=" +
                                  std::to_string(v));
      }
    }
    answers_.emplace(n, v);
    return v;
  }

  // Largest probed count with value >= level, else `fallback`.
  int confirmed(int level, int fallback) const {
    int best = fallback;
    for (const auto& [n, v] : answers_) {
      if (v >= level) best = std::max(best, n);
    }
    return best;
  }

  // Smallest probed count with value < level, else `fallback`.
  int refuted(int level, int fallback) const {
    for (const auto& [n, v] : answers_) {
      if (v < level) return n;
    }
    return fallback;
  }

  int queries() const { return queries_; }

 private:
  const QueryFn& query_;
  std::map<int, int> answers_;
  int queries_ = 0;
};

// Largest n in [t_min, t_max] with f(n) >= level, or t_min - 1 when none is
// confirmed. `low` is always a confirmed count (or the sentinel) and the
// answer lies in [low, high].
int search_threshold(ProfileProbe& probe, int level, int t_min, int t_max,
                     std::optional<int> hint, int early_stop) {
  int low = probe.confirmed(level, t_min - 1);
  int high = probe.refuted(level, t_max + 1) - 1;

  if (hint && high - low >= early_stop) {
    const int start = std::clamp(*hint, low + 1, high);
    if (probe.at(start) >= level) {
      low = start;
      for (int step = early_stop; high - low >= early_stop; step *= 2) {
        const int p = std::min(high, low + step);
        if (probe.at(p) >= level) {
          low = p;
        } else {
          high = p - 1;
          break;
        }
      }
    } else {
      high = start - 1;
      for (int step = early_stop; high - low >= early_stop; step *= 2) {
        const int p = std::max(low + 1, high - step + 1);
        if (probe.at(p) >= level) {
          low = p;
          break;
        }
        high = p - 1;
      }
    }
  }

  while (high - low >= early_stop) {
    const int mid = low + (high - low + 1) / 2;
    if (probe.at(mid) >= level) {
      low = mid;
    } else {
      high = mid - 1;
    }
  }
  return low;
}

void check_range(int t_min, int t_max) {
  if (t_min < 1 || t_min > t_max || t_max > kMaxNodeCount) {
    throw InvalidArgument("need 1 <= t_min <= t_max <= 50");
  }
}

}  // namespace

int estimate_t3_from_samples(const UsqsState& state, int t_max) {
  return estimate_threshold(state, t_max, 3);
}

int estimate_t2_from_samples(const UsqsState& state, int t_max) {
  return estimate_threshold(state, t_max, 2);
}

SpsObservation run_usqs_cycle(UsqsState& state, cloudsim::Simulator& sim,
                              const std::string& account, const PoolKey& key) {
  const int target = state.peek();
  const SpsValue sps = sim.query_sps(account, key, target);
  state.advance();
  state.record(target, sps, sim.now());
  return {sim.now(), key, target, sps, account, Strategy::kUsqs};
}

const TstpCacheEntry* TstpCache::find(const PoolKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void TstpCache::put(const PoolKey& key, TstpCacheEntry entry) {
  if (entry.t3 < 0 || entry.t2 > kMaxNodeCount || entry.t3 > entry.t2) {
    throw InvalidArgument("cached transition values out of range");
  }
  entries_[key] = entry;
}

TransitionRecord tstp_find_transitions(const QueryFn& query, const PoolKey& key,
                                       int t_min, int t_max, TstpCache* cache,
                                       int early_stop, Timestamp now,
                                       Strategy tag) {
  check_range(t_min, t_max);
  if (early_stop < 1) throw InvalidArgument("early_stop must be >= 1");

  std::optional<int> hint3;
  std::optional<int> hint2;
  if (cache) {
    if (const TstpCacheEntry* prev = cache->find(key)) {
      hint3 = std::max(prev->t3, t_min);
      hint2 = std::max(prev->t2, t_min);
    }
  }

  ProfileProbe probe(query);
  const int low3 = search_threshold(probe, 3, t_min, t_max, hint3, early_stop);
  const int low2 = search_threshold(probe, 2, t_min, t_max, hint2, early_stop);

  TransitionRecord rec;
  rec.key = key;
  rec.timestamp = now;
  rec.t3 = low3 < t_min ? 0 : low3;
  rec.t2 = low2 < t_min ? 0 : low2;
  rec.method = tag;
  rec.queries_used = probe.queries();
  if (cache) cache->put(key, {rec.t3, rec.t2, now});
  return rec;
}

FullScanResult full_scan(const QueryFn& query, const PoolKey& key, int t_min,
                         int t_max, Timestamp now) {
  check_range(t_min, t_max);
  FullScanResult out;
  out.profile.reserve(static_cast<std::size_t>(t_max - t_min + 1));
  ProfileProbe probe(query);
  for (int n = t_min; n <= t_max; ++n) {
    out.profile.push_back(SpsValue::from_int(probe.at(n)));
  }
  out.record.key = key;
  out.record.timestamp = now;
  const int t3 = probe.confirmed(3, t_min - 1);
  const int t2 = probe.confirmed(2, t_min - 1);
  out.record.t3 = t3 < t_min ? 0 : t3;
  out.record.t2 = t2 < t_min ? 0 : t2;
  out.record.method = Strategy::kFullScan;
  out.record.queries_used = probe.queries();
  return out;
}

QueryBudget plan_query_budget(std::uint64_t n_instance_types,
                              std::uint64_t counts_per_type,
                              std::uint64_t per_account_limit) {
  if (n_instance_types == 0 || counts_per_type == 0 || per_account_limit == 0) {
    throw InvalidArgument("query budget inputs must be positive");
  }
  QueryBudget b;
  b.total_queries = n_instance_types * counts_per_type;
  b.accounts_needed = (b.total_queries + per_account_limit - 1) / per_account_limit;
  return b;
}

// ---------------------------------------------------------------------------

Collector::Collector(CollectorConfig config, std::vector<PoolKey> pools,
                     std::string account_prefix)
    : config_(config), pools_(std::move(pools)) {
  config_.validate();
  const std::size_t grid_size =
      make_usqs_grid(config_.t_min, config_.step, config_.t_max,
                     config_.include_single_node).size();
  const std::size_t counts_per_pool =
      config_.strategy == Strategy::kUsqs
          ? grid_size
          : static_cast<std::size_t>(config_.t_max - config_.t_min + 1);
  const std::size_t pools_per_account =
      std::max<std::size_t>(1, cloudsim::QuotaLedger::kDefaultLimit / counts_per_pool);

  accounts_.reserve(pools_.size());
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    accounts_.push_back(account_prefix + "-" + std::to_string(i / pools_per_account));
    if (config_.strategy == Strategy::kUsqs) {
      usqs_.push_back(UsqsState::from_config(config_));
    }
  }
  distinct_accounts_ = accounts_;
  distinct_accounts_.erase(
      std::unique(distinct_accounts_.begin(), distinct_accounts_.end()),
      distinct_accounts_.end());
}

const std::string& Collector::account_for(std::size_t pool_index) const {
  return accounts_.at(pool_index);
}

CycleOutput Collector::run_cycle(cloudsim::Simulator& sim) {
  CycleOutput out;
  const Timestamp now = sim.now();
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    const PoolKey& key = pools_[i];
    const std::string& account = accounts_[i];

    if (config_.strategy == Strategy::kUsqs) {
      UsqsState& state = usqs_[i];
      try {
        out.observations.push_back(run_usqs_cycle(state, sim, account, key));
      } catch (const QuotaExceeded&) {
        ++out.skipped;
        continue;
      }
      TransitionRecord rec;
      rec.key = key;
      rec.timestamp = now;
      rec.t3 = estimate_t3_from_samples(state, config_.t_max);
      rec.t2 = std::max(rec.t3, estimate_t2_from_samples(state, config_.t_max));
      rec.method = Strategy::kUsqs;
      rec.queries_used = 1;
      out.transitions.push_back(rec);
      continue;
    }

    const QueryFn query = [&](int n) {
      const SpsValue v = sim.query_sps(account, key, n);
      out.observations.push_back({now, key, n, v, account, config_.strategy});
      return v;
    };
    try {
      switch (config_.strategy) {
        case Strategy::kFullScan:
          out.transitions.push_back(
              full_scan(query, key, config_.t_min, config_.t_max, now).record);
          break;
        case Strategy::kBinarySearch:
          out.transitions.push_back(tstp_find_transitions(
              query, key, config_.t_min, config_.t_max, nullptr, 1, now,
              Strategy::kBinarySearch));
          break;
        case Strategy::kTstp:
          out.transitions.push_back(tstp_find_transitions(
              query, key, config_.t_min, config_.t_max, &cache_,
              config_.early_stop, now, Strategy::kTstp));
          break;
        case Strategy::kUsqs:
          break;
      }
    } catch (const QuotaExceeded&) {
      ++out.skipped;
    }
  }
  return out;
}

void Collector::run(cloudsim::Simulator& sim, Minutes duration, const Sink& sink) {
  if (duration <= Minutes{0}) throw InvalidArgument("duration must be positive");
  for (Minutes t{0}; t < duration; t += config_.interval) {
    CycleOutput out = run_cycle(sim);
    if (sink) sink(out);
    sim.advance_time(config_.interval);
  }
}

}  // namespace spotvista::collector
