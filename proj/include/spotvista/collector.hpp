#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "spotvista/cloudsim.hpp"
#include "spotvista/records.hpp"
#include "spotvista/time.hpp"
#include "spotvista/types.hpp"

namespace spotvista::collector {

struct CollectorConfig {
  Minutes interval{10};
  int step = 5;
  int t_min = 5;
  int t_max = 50;
  int early_stop = 4;
  bool include_single_node = true;
  Strategy strategy = Strategy::kUsqs;

  void validate() const;  // throws InvalidArgument
};

// Node counts probed round-robin by USQS: t_min, t_min + step, ... <= t_max,
// optionally preceded by 1.
std::vector<int> make_usqs_grid(int t_min, int step, int t_max,
                                bool include_single_node);

// Time between two probes of the same grid count.
Minutes requery_delay(std::size_t grid_size, Minutes interval);

struct UsqsSample {
  SpsValue sps = SpsValue::low();
  Timestamp timestamp;
};

class UsqsState {
 public:
  explicit UsqsState(std::vector<int> grid);
  static UsqsState from_config(const CollectorConfig& config);

  int peek() const { return grid_[cursor_]; }
  void advance() { cursor_ = (cursor_ + 1) % grid_.size(); }
  void record(int node_count, SpsValue sps, Timestamp ts);

  const std::vector<int>& grid() const { return grid_; }
  std::size_t cursor() const { return cursor_; }
  const std::map<int, UsqsSample>& last_known() const { return last_known_; }

 private:
  std::vector<int> grid_;
  std::size_t cursor_ = 0;
  std::map<int, UsqsSample> last_known_;
};

// Returns the current grid count and moves the cursor (wrapping).
int usqs_next_target(UsqsState& state);

// Reconstructs T3 from the newest sample of every grid count: values are
// clipped so they never increase with the node count, then the largest
// count still at SPS 3 is returned (0 if none). Throws EmptyInput.
int estimate_t3_from_samples(const UsqsState& state, int t_max = kMaxNodeCount);
// Same reconstruction for the SPS >= 2 threshold.
int estimate_t2_from_samples(const UsqsState& state, int t_max = kMaxNodeCount);

// One USQS cycle against the simulator: exactly one metered query. On
// QuotaExceeded the cursor stays put and the exception propagates.
SpsObservation run_usqs_cycle(UsqsState& state, cloudsim::Simulator& sim,
                              const std::string& account, const PoolKey& key);

using QueryFn = std::function<SpsValue(int node_count)>;

struct TstpCacheEntry {
  int t3 = 0;
  int t2 = 0;
  Timestamp timestamp;
};

class TstpCache {
 public:
  const TstpCacheEntry* find(const PoolKey& key) const;
  void put(const PoolKey& key, TstpCacheEntry entry);
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<PoolKey, TstpCacheEntry, PoolKeyHash> entries_;
};

// Binary searches for T3 then T2 over [t_min, t_max]. With a cache entry the
// first probe of each search lands on the cached value and the bracket is
// widened outward from there. Each search stops once high - low < e and
// reports the largest count confirmed at the target score, so the result
// never overestimates and is exact for e == 1. Pass cache == nullptr for
// plain binary search. Throws InconsistentProfile on non-monotone answers.
TransitionRecord tstp_find_transitions(const QueryFn& query,
                                       const PoolKey& key, int t_min,
                                       int t_max, TstpCache* cache,
                                       int early_stop, Timestamp now,
                                       Strategy tag = Strategy::kTstp);

struct FullScanResult {
  std::vector<SpsValue> profile;  // profile[i] is the SPS of t_min + i
  TransitionRecord record;
};

FullScanResult full_scan(const QueryFn& query, const PoolKey& key, int t_min,
                         int t_max, Timestamp now);

struct QueryBudget {
  std::uint64_t total_queries = 0;
  std::uint64_t accounts_needed = 0;
  bool operator==(const QueryBudget&) const = default;
};

QueryBudget plan_query_budget(std::uint64_t n_instance_types,
                              std::uint64_t counts_per_type,
                              std::uint64_t per_account_limit = 50);

struct CycleOutput {
  std::vector<SpsObservation> observations;
  std::vector<TransitionRecord> transitions;
  std::size_t skipped = 0;  // pools whose cycle hit QuotaExceeded
};

// Drives one strategy over a set of pools. Pools are spread over accounts so
// that a pool's worst-case distinct scenarios fit one account's quota.
class Collector {
 public:
  Collector(CollectorConfig config, std::vector<PoolKey> pools,
            std::string account_prefix = "acct");

  // All queries for one cycle at the simulator's current time.
  CycleOutput run_cycle(cloudsim::Simulator& sim);

  using Sink = std::function<void(const CycleOutput&)>;
  // Runs cycles every config.interval until `duration` has elapsed,
  // advancing the simulator after each cycle.
  void run(cloudsim::Simulator& sim, Minutes duration, const Sink& sink);

  const CollectorConfig& config() const { return config_; }
  const std::string& account_for(std::size_t pool_index) const;
  std::size_t account_count() const { return distinct_accounts_.size(); }
  const UsqsState& usqs_state(std::size_t pool_index) const {
    return usqs_.at(pool_index);
  }

 private:
  CollectorConfig config_;
  std::vector<PoolKey> pools_;
  std::vector<std::string> accounts_;        // one per pool
  std::vector<std::string> distinct_accounts_;
  std::vector<UsqsState> usqs_;
  TstpCache cache_;
};

}  // namespace spotvista::collector
