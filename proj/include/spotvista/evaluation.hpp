#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spotvista/cloudsim.hpp"
#include "spotvista/recommender.hpp"
#include "spotvista/store.hpp"
#include "spotvista/types.hpp"

// Desk-scale evaluations on the simulator: probing, survival analysis,
// strategy and step-size comparisons, score validation.
namespace spotvista::evaluation {

struct ProbeOutcome {
  Timestamp timestamp;
  bool fulfilled = false;
};

struct ProbeLog {
  PoolKey key;
  int probe_count = 0;
  Minutes period{10};
  std::vector<ProbeOutcome> outcomes;
};

struct ProbeTarget {
  PoolKey key;
  int count = 50;
};

// One probe-mode request per period, then the clock advances by period.
// Nothing is held. Throws UnknownPool, InvalidArgument.
ProbeLog probe_campaign(cloudsim::Simulator& sim, const PoolKey& key, int count = 50,
                        Minutes period = Minutes{10}, Minutes duration = kDay);

// Same, probing every target at each step.
std::vector<ProbeLog> probe_campaigns(cloudsim::Simulator& sim,
                                      std::span<const ProbeTarget> targets,
                                      Minutes period = Minutes{10},
                                      Minutes duration = kDay);

// 100 * fulfilled / total. Throws EmptyInput.
double real_availability_score(const ProbeLog& log);

enum class AvailabilityBin { kLow, kMid, kHigh };

std::string to_string(AvailabilityBin bin);

// Low below 20, Mid on [20, 70], High above 70. Throws InvalidArgument
// outside [0, 100].
AvailabilityBin bin_scores(double score);

struct Lifetime {
  double duration = 0.0;
  bool event_observed = false;
};

struct SurvivalCurve {
  std::vector<double> event_times;  // increasing, events only
  std::vector<double> survival;     // S(t) just after each event time
  std::vector<int> at_risk;
  std::vector<int> died;

  // Step function with S(t) = 1 before the first event.
  double at(double t) const;
};

// Product-limit estimate. Subjects censored at an event time count as at
// risk there. Throws EmptyInput, InvalidArgument (non-positive duration).
SurvivalCurve kaplan_meier(std::span<const Lifetime> lifetimes);

// Sample correlation. Throws InvalidArgument (length), ZeroVariance.
double pearson(std::span<const double> a, std::span<const double> b);

// Mean absolute difference. Throws InvalidArgument on length mismatch or
// empty input.
double mae(std::span<const double> estimated, std::span<const double> truth);

struct StrategySpec {
  Strategy strategy = Strategy::kUsqs;
  int early_stop = 1;
  std::string label;
};

std::vector<StrategySpec> default_strategies();

struct StrategyReportConfig {
  cloudsim::ScenarioConfig scenario;
  Minutes duration{72 * 60};
  Minutes interval{10};
  std::vector<StrategySpec> strategies = default_strategies();
  std::optional<std::size_t> max_pools;
  int usqs_t_min = 5;
  int usqs_step = 5;
  bool include_single_node = true;
};

struct StrategyRow {
  std::string label;
  Strategy strategy = Strategy::kUsqs;
  int early_stop = 1;
  double queries_per_cycle = 0.0;  // per pool
  double t3_mae = 0.0;
  std::size_t cycles = 0;          // evaluated cycles
  std::size_t pools = 0;
};

// Runs every strategy on its own simulator built from the same scenario,
// so all of them see identical capacity traces. Ground truth per cycle is a
// quota-exempt full scan. The first USQS grid pass is a warm-up for every
// strategy and is excluded from both metrics.
std::vector<StrategyRow> strategy_report(const StrategyReportConfig& config);

std::string format_strategy_csv(std::span<const StrategyRow> rows);

struct SweepConfig {
  cloudsim::ScenarioConfig scenario;
  Minutes duration{72 * 60};
  Minutes interval{10};
  std::vector<int> steps;  // empty -> 1..50
  bool include_single_node = true;
  std::optional<std::size_t> max_pools;
};

struct SweepRow {
  int step = 1;
  std::size_t grid_size = 0;
  Minutes requery_delay{0};
  double t3_mae = 0.0;
};

// Records one ground-truth threshold trace, then replays USQS over it for
// every step size. The grid for step s is {1} plus the multiples of s up to
// 50. Metrics start after the longest grid's first pass.
std::vector<SweepRow> step_size_sweep(const SweepConfig& config);

std::string format_sweep_csv(std::span<const SweepRow> rows);

// Row with the smallest MAE (first on ties). Throws EmptyInput.
const SweepRow& best_step(std::span<const SweepRow> rows);

// Availability score of every key with a usable series in [from, to),
// MinMax-scaled over that set.
std::map<PoolKey, double> availability_by_pool(const store::Store& store,
                                               std::span<const PoolKey> keys,
                                               Timestamp from, Timestamp to,
                                               double lambda = scoring::kDefaultLambda);

struct HistoryConfig {
  Minutes duration{72 * 60};
  Minutes interval{10};
  Strategy strategy = Strategy::kTstp;
  int early_stop = 4;
};

// Collects transitions for every catalog pool into `store` and leaves the
// simulator at the end of the history.
void collect_history(cloudsim::Simulator& sim, store::Store& store,
                     const HistoryConfig& config);

struct SurvivalConfig {
  cloudsim::ScenarioConfig scenario;
  HistoryConfig history;
  Minutes campaign{kDay};
  int instances_per_pool = 10;
};

struct SurvivalReport {
  std::map<AvailabilityBin, SurvivalCurve> curves;
  std::map<AvailabilityBin, std::vector<Lifetime>> lifetimes;
  std::map<PoolKey, double> as_scores;
};

// Scores pools from a collected history, then holds single instances in
// every pool for the campaign and estimates survival per score bin.
// Instances still running at the end are censored.
SurvivalReport survival_campaign(const SurvivalConfig& config);

std::string format_survival_csv(const SurvivalReport& report);

struct ValidationConfig {
  cloudsim::ScenarioConfig scenario;
  HistoryConfig history;
  Minutes probe_duration{kDay};
  Minutes probe_period{10};
  int probe_count = 50;
};

struct ValidationRow {
  PoolKey key;
  double as_score = 0.0;
  AvailabilityBin bin = AvailabilityBin::kLow;
  double real_availability = 0.0;
  std::optional<double> t3_t2_correlation;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  std::map<AvailabilityBin, double> mean_real_availability;
};

// Predicted availability score against the real availability measured by
// probing over the following period.
ValidationReport validation_report(const ValidationConfig& config);

std::string format_validation_csv(const ValidationReport& report);

struct TradeoffConfig {
  cloudsim::ScenarioConfig scenario;
  HistoryConfig history;
  recommender::ResourceRequest request;  // weight is overridden per row
  std::vector<double> weights{0.0, 0.5, 1.0};
  Minutes probe_duration{kDay};
  Minutes probe_period{10};
};

struct TradeoffRow {
  double weight = 0.0;
  recommender::PoolRecommendation recommendation;
  double probe_success = 0.0;  // percent over all probes of the pool
  double cost_per_hour = 0.0;
};

// Recommends a pool per weight from the same history, then probes every
// selected type at its allocated count over the same following period.
std::vector<TradeoffRow> weight_tradeoff(const TradeoffConfig& config);

std::string format_tradeoff_csv(std::span<const TradeoffRow> rows);

}  // namespace spotvista::evaluation
