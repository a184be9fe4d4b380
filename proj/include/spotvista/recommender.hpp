#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spotvista/scoring.hpp"
#include "spotvista/store.hpp"
#include "spotvista/types.hpp"

namespace spotvista::recommender {

enum class Dimension { kVcpu, kMemoryGb };

std::string to_string(Dimension d);
Dimension dimension_from_string(const std::string& s);

struct Filters {
  std::set<std::string> families;
  std::set<std::string> categories;
  std::set<std::string> regions;
  std::set<std::string> instance_types;

  // Empty sets match everything.
  bool matches(const InstanceCandidate& c) const;
};

struct ResourceRequest {
  Dimension dimension = Dimension::kVcpu;
  double amount = 0.0;
  Filters filters;
  double weight = 0.5;
  std::optional<int> max_types;
  int window_days = 7;
  double lambda = scoring::kDefaultLambda;
  // End of the scoring window (exclusive). Defaults to just after the newest
  // stored record.
  std::optional<Timestamp> as_of;

  void validate() const;  // throws InvalidArgument
};

double capacity_of(const InstanceCandidate& c, Dimension d);

struct CandidateSeries {
  InstanceCandidate candidate;
  store::SeriesWindow series;
};

struct FilterResult {
  std::vector<CandidateSeries> candidates;  // ordered by pool key
  std::vector<std::string> diagnostics;
};

using SeriesLookup = std::function<store::SeriesWindow(const PoolKey&)>;

// Keeps catalog entries that pass the filters and have at least two T3
// samples in the window. Throws NoCandidates when nothing survives.
FilterResult filter_candidates(std::span<const InstanceCandidate> catalog,
                               const ResourceRequest& request,
                               const SeriesLookup& series_lookup);

struct ScoreBreakdown {
  InstanceCandidate candidate;
  scoring::AvailabilityComponents components;
  double a3 = 0.0;
  double as_score = 0.0;
  int n_required = 0;
  double pool_cost = 0.0;
  double cs_score = 0.0;
  double total = 0.0;
};

// Cost, availability and total scores over one candidate context.
// Candidates whose series fail validation are dropped with a diagnostic.
std::vector<ScoreBreakdown> score_candidates(
    const std::vector<CandidateSeries>& candidates,
    const ResourceRequest& request, std::vector<std::string>* diagnostics);

// Input to pool formation: a pool with its final score and per-node
// capacity in the requested dimension.
struct PoolCandidate {
  PoolKey key;
  double score = 0.0;
  double capacity = 1.0;
  double pool_cost = 0.0;  // tie-break only
};

// Candidates sorted by score descending, then pool cost ascending, then key.
class RankedCandidates {
 public:
  explicit RankedCandidates(std::vector<PoolCandidate> candidates);
  const std::vector<PoolCandidate>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  void truncate(std::size_t n);

 private:
  std::vector<PoolCandidate> items_;
};

using Allocation = std::map<PoolKey, int>;

struct GreedyOptions {
  // Per-type node ceiling used only to reject requests no allocation could
  // satisfy.
  std::optional<int> node_bound;
};

struct GreedyResult {
  Allocation allocation;
  std::vector<int> top_counts;  // top-ranked node count per committed step
  std::size_t explored = 0;     // candidates examined
};

// Score-proportional heterogeneous pool formation. Each step adds the next
// ranked type, splits r_req in proportion to score and rounds node counts
// up; it stops (keeping the previous allocation) once the top type's count
// no longer drops or the newest type gets zero nodes.
// Throws NoPositiveScoreCandidate, Infeasible, InvalidArgument.
GreedyResult form_pool_greedy(const RankedCandidates& ranked, double r_req,
                              const GreedyOptions& options = {});
GreedyResult form_pool_greedy(std::vector<PoolCandidate> candidates, double r_req,
                              const GreedyOptions& options = {});

struct IlpConfig {
  double gamma = 1.0;
  int upper_slack = 1;
  std::size_t max_types = 12;
};

struct ExactResult {
  Allocation allocation;
  double objective = 0.0;
  std::uint64_t nodes_visited = 0;
};

// sum(score * capacity * x) + gamma * |{x > 0}|
double pool_objective(std::span<const PoolCandidate> candidates,
                      const Allocation& allocation, double gamma);

// Exact maximum of the objective above subject to
// r_req <= sum(capacity * x) <= r_req + slack, via depth-first branch and
// bound over x_i from 0 to the largest count fitting under the upper bound. Ties go to
// fewer total nodes, then to the lexicographically smallest count vector in
// pool-key order. Throws Infeasible, TooManyCandidates, InvalidArgument.
ExactResult form_pool_exact(std::span<const PoolCandidate> candidates,
                            double r_req, const IlpConfig& config = {});

struct AllocationLine {
  ScoreBreakdown breakdown;
  int count = 0;
};

struct PoolRecommendation {
  std::vector<AllocationLine> allocations;  // in rank order
  Dimension dimension = Dimension::kVcpu;
  double requested = 0.0;
  double total_resource = 0.0;
  double total_cost = 0.0;      // per hour
  double aggregate_score = 0.0;  // sum of S over selected types
  double objective = 0.0;        // pool_objective with the configured gamma
  double weight = 0.5;
  double lambda = scoring::kDefaultLambda;
  Timestamp window_from;
  Timestamp window_to;
  std::string method;
  std::vector<std::string> diagnostics;
};

struct RecommendOptions {
  bool exact = false;
  IlpConfig ilp;
};

// filter -> score -> rank -> (truncate to max_types) -> form pool.
PoolRecommendation recommend(const ResourceRequest& request,
                             const store::Store& store,
                             std::span<const InstanceCandidate> catalog,
                             const RecommendOptions& options = {});

}  // namespace spotvista::recommender
