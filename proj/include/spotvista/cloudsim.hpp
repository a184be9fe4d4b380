#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "spotvista/time.hpp"
#include "spotvista/types.hpp"

// Synthetic spot provider: per-pool latent capacity, SPS queries under a
// per-account scenario quota, and probe/hold spot requests with
// interruptions. Time is virtual and only moves through advance_time().
namespace spotvista::cloudsim {

// Piecewise-constant alternative to the sinusoid: `high` for the first
// high_fraction of every period, `low` for the rest.
struct SquareWave {
  double high = 0.0;
  double low = 0.0;
  Minutes period{60};
  double high_fraction = 0.5;
};

struct CapacityModel {
  double base = 0.0;
  double daily_amplitude = 0.0;
  double weekly_amplitude = 0.0;
  double phase = 0.0;        // radians
  double noise_sigma = 0.0;  // stationary stdev of the mean-reverting noise
  double noise_decay = 1.0;  // reversion rate per hour
  int c_max = 50;
  double t3_fraction = 1.0;
  double t2_fraction = 1.0;
  std::optional<SquareWave> square_wave;

  void validate() const;  // throws InvalidArgument
};

struct PoolSpec {
  InstanceCandidate candidate;
  CapacityModel capacity;
};

struct FamilySpec {
  std::string name;
  std::string category;
  double memory_per_vcpu = 4.0;
  double price_per_vcpu = 0.02;
};

// Random catalog + capacity models. All draws come from the scenario seed.
struct CatalogGenerator {
  std::size_t n_types = 0;
  std::vector<std::string> regions{"us-east-1", "us-west-2", "eu-west-2",
                                   "ap-northeast-1"};
  int azs_per_region = 3;
  std::vector<FamilySpec> families;  // empty -> built-in default families
  std::vector<int> vcpu_choices{2, 4, 8, 16, 32, 64};
  double price_jitter = 0.3;
  double base_min = 0.0;
  double base_max = 120.0;
  double daily_amplitude_max = 0.5;   // fraction of base
  double weekly_amplitude_max = 0.1;  // fraction of base
  double noise_sigma_max = 4.0;
  double t3_fraction_min = 0.3;
  double t3_fraction_max = 0.9;
};

std::vector<FamilySpec> default_families();

struct ScenarioConfig {
  std::uint64_t seed = 0;
  Timestamp start = make_timestamp(2025, 8, 4);
  std::vector<PoolSpec> pools;
  std::optional<CatalogGenerator> generator;
};

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Capacity and the thresholds the provider would report right now.
struct LatentState {
  double capacity = 0.0;
  int t3 = 0;
  int t2 = 0;
};

// Closed-form thresholds for a capacity value.
LatentState thresholds_for(const CapacityModel& model, double capacity);

// Tracks distinct (pool, node count) scenarios per account over a rolling
// window. Thread-safe.
class QuotaLedger {
 public:
  static constexpr std::size_t kDefaultLimit = 50;

  explicit QuotaLedger(std::size_t scenario_limit = kDefaultLimit,
                       Minutes window = kDay);

  // Registers the scenario for `account` at `now`. A scenario already seen
  // in the window costs nothing. Throws QuotaExceeded when a new scenario
  // would exceed the limit.
  void charge(const std::string& account, std::size_t pool_index,
              int node_count, Timestamp now);

  std::size_t used(const std::string& account, Timestamp now) const;
  std::size_t limit() const { return limit_; }
  Minutes window() const { return window_; }

 private:
  struct Entry {
    std::size_t pool_index;
    int node_count;
    Timestamp first_seen;
  };
  void expire(std::vector<Entry>& entries, Timestamp now) const;

  std::size_t limit_;
  Minutes window_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<Entry>> accounts_;
};

enum class RequestMode {
  kProbe,  // record success only
  kHold,   // keep the instances running until interrupted
};

struct InterruptionEvent {
  std::uint64_t instance_id = 0;
  PoolKey key;
  Timestamp launched;
  Timestamp interrupted;
};

struct RunningInstance {
  std::uint64_t instance_id = 0;
  PoolKey key;
  Timestamp launched;
};

class Simulator {
 public:
  explicit Simulator(ScenarioConfig config);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  Timestamp now() const { return config_.start + elapsed_; }
  Minutes elapsed() const { return elapsed_; }
  const ScenarioConfig& config() const { return config_; }

  // Advances the virtual clock minute by minute, re-evaluating every pool
  // and interrupting held instances (oldest first) whenever the running
  // count exceeds capacity. Requires exclusive access.
  void advance_time(Minutes duration);

  // Throws InvalidArgument (count outside 1..50), UnknownPool, or
  // QuotaExceeded.
  SpsValue query_sps(const std::string& account, const PoolKey& key,
                     int node_count);

  // Quota-exempt query for ground-truth scans in evaluations.
  SpsValue query_sps_unmetered(const PoolKey& key, int node_count) const;

  LatentState latent(const PoolKey& key) const;

  bool request_spot(const PoolKey& key, int count,
                    RequestMode mode = RequestMode::kProbe);
  int running(const PoolKey& key) const;
  std::vector<RunningInstance> running_instances() const;
  std::vector<InterruptionEvent> drain_interruptions();

  const std::vector<InstanceCandidate>& catalog() const { return catalog_; }
  const CapacityModel& capacity_model(const PoolKey& key) const;
  const QuotaLedger& quota() const { return quota_; }

 private:
  struct Pool {
    PoolSpec spec;
    std::mt19937_64 rng;
    double noise = 0.0;
    LatentState state;
    std::deque<RunningInstance> running;
  };

  std::size_t index_of(const PoolKey& key) const;
  void step_pool(Pool& pool, Minutes t);
  double capacity_at(const Pool& pool, Minutes t) const;

  ScenarioConfig config_;
  Minutes elapsed_{0};
  std::vector<Pool> pools_;
  std::vector<InstanceCandidate> catalog_;
  std::unordered_map<PoolKey, std::size_t, PoolKeyHash> index_;
  QuotaLedger quota_;
  std::uint64_t next_instance_id_ = 1;
  std::vector<InterruptionEvent> interruptions_;
};

}  // namespace spotvista::cloudsim
