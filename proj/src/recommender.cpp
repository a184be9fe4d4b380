#include "spotvista/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spotvista/error.hpp"

namespace spotvista::recommender {

namespace {

bool in_filter(const std::set<std::string>& allowed, const std::string& value) {
  return allowed.empty() || allowed.contains(value);
}

// ceil() with the same representation guard as required_nodes, but zero for
// a zero share.
int ceil_nodes(double ratio) {
  if (!(ratio > 0.0)) return 0;
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio))));
}

void check_candidates(std::span<const PoolCandidate> candidates) {
  for (const auto& c : candidates) {
    if (!(c.capacity > 0.0) || !std::isfinite(c.capacity)) {
      throw InvalidArgument("candidate capacity must be positive: " + c.key.to_string());
    }
    if (!std::isfinite(c.score) || c.score < 0.0) {
      throw InvalidArgument("candidate score must be finite and non-negative: " +
                            c.key.to_string());
    }
  }
}

void check_request_amount(double r_req) {
  if (!(r_req > 0.0) || !std::isfinite(r_req)) {
    throw InvalidArgument("requested amount must be positive and finite");
  }
}

}  // namespace

std::string to_string(Dimension d) {
  return d == Dimension::kVcpu ? "vcpu" : "memory_gb";
}

Dimension dimension_from_string(const std::string& s) {
  if (s == "vcpu") return Dimension::kVcpu;
  if (s == "memory_gb" || s == "memory") return Dimension::kMemoryGb;
  throw InvalidArgument("unknown dimension: " + s);
}

bool Filters::matches(const InstanceCandidate& c) const {
  return in_filter(families, c.family) && in_filter(categories, c.category) &&
         in_filter(regions, c.pool.region) &&
         in_filter(instance_types, c.pool.instance_type);
}

void ResourceRequest::validate() const {
  if (!(amount > 0.0) || !std::isfinite(amount)) {
    throw InvalidArgument("amount must be positive");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw InvalidArgument("weight must lie in [0, 1]");
  }
  if (max_types && *max_types < 1) throw InvalidArgument("max_types must be >= 1");
  if (window_days < 1) throw InvalidArgument("window_days must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be non-negative");
  }
}

double capacity_of(const InstanceCandidate& c, Dimension d) {
  return d == Dimension::kVcpu ? static_cast<double>(c.vcpu) : c.memory_gb;
}

FilterResult filter_candidates(std::span<const InstanceCandidate> catalog,
                               const ResourceRequest& request,
                               const SeriesLookup& series_lookup) {
  FilterResult out;
  std::size_t matched = 0;
  for (const auto& c : catalog) {
    if (!request.filters.matches(c)) continue;
    if (!(capacity_of(c, request.dimension) > 0.0)) {
      out.diagnostics.push_back(c.pool.to_string() + ": no capacity in " +
                                to_string(request.dimension));
      continue;
    }
    ++matched;
    store::SeriesWindow series = series_lookup(c.pool);
    if (series.samples.size() < 2) {
      out.diagnostics.push_back(c.pool.to_string() + ": " +
                                std::to_string(series.samples.size()) +
                                " sample(s) in window");
      continue;
    }
    out.candidates.push_back({c, std::move(series)});
  }
  if (out.candidates.empty()) {
    throw NoCandidates(matched == 0
                           ? std::string("no catalog entry matches the filters")
                           : "none of " + std::to_string(matched) +
                                 " matching pools has enough samples in the window");
  }
  std::sort(out.candidates.begin(), out.candidates.end(),
            [](const CandidateSeries& a, const CandidateSeries& b) {
              return a.candidate.pool < b.candidate.pool;
            });
  return out;
}

std::vector<ScoreBreakdown> score_candidates(const std::vector<CandidateSeries>& candidates,
                                             const ResourceRequest& request,
                                             std::vector<std::string>* diagnostics) {
  std::vector<ScoreBreakdown> out;
  std::vector<scoring::AvailabilityComponents> comps;
  for (const auto& cs : candidates) {
    try {
      auto comp = scoring::availability_components(cs.series);
      ScoreBreakdown b;
      b.candidate = cs.candidate;
      b.components = comp;
      b.n_required = scoring::required_nodes(request.amount,
                                             capacity_of(cs.candidate, request.dimension));
      b.pool_cost = cs.candidate.spot_price * b.n_required;
      if (!(b.pool_cost > 0.0)) {
        throw InvalidArgument("non-positive price for " + cs.candidate.pool.to_string());
      }
      out.push_back(std::move(b));
      comps.push_back(comp);
    } catch (const InvalidArgument& e) {
      if (diagnostics) diagnostics->push_back(e.what());
    }
  }
  if (out.empty()) return out;

  const auto as = scoring::availability_scores(comps, request.lambda);
  std::vector<double> costs;
  costs.reserve(out.size());
  for (const auto& b : out) costs.push_back(b.pool_cost);
  const auto cs = scoring::cost_scores(costs);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].a3 = as[i].a3;
    out[i].as_score = as[i].as_score;
    out[i].cs_score = cs[i];
    out[i].total = scoring::total_score(as[i].as_score, cs[i], request.weight);
  }
  return out;
}

RankedCandidates::RankedCandidates(std::vector<PoolCandidate> candidates)
    : items_(std::move(candidates)) {
  std::sort(items_.begin(), items_.end(),
            [](const PoolCandidate& a, const PoolCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.pool_cost != b.pool_cost) return a.pool_cost < b.pool_cost;
              return a.key < b.key;
            });
}

void RankedCandidates::truncate(std::size_t n) {
  if (items_.size() > n) items_.resize(n);
}

GreedyResult form_pool_greedy(const RankedCandidates& ranked, double r_req,
                              const GreedyOptions& options) {
  check_request_amount(r_req);
  const auto& items = ranked.items();
  check_candidates(items);
  if (items.empty() || !(items.front().score > 0.0)) {
    throw NoPositiveScoreCandidate("no candidate has a positive score");
  }
  if (options.node_bound) {
    if (*options.node_bound < 1) throw InvalidArgument("node_bound must be >= 1");
    double reachable = 0.0;
    for (const auto& c : items) reachable += c.capacity * *options.node_bound;
    if (reachable < r_req) {
      throw Infeasible("request exceeds the capacity reachable under the node bound");
    }
  }

  GreedyResult result;
  std::vector<int> current;
  int prev_top = std::numeric_limits<int>::max();
  double score_total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    result.explored = i + 1;
    score_total += items[i].score;
    current.assign(i + 1, 0);
    for (std::size_t j = 0; j <= i; ++j) {
      const double share = items[j].score / score_total * r_req;
      current[j] = ceil_nodes(share / items[j].capacity);
    }
    if (current[0] >= prev_top || current[i] == 0) break;
    prev_top = current[0];
    result.top_counts.push_back(current[0]);
    result.allocation.clear();
    for (std::size_t j = 0; j <= i; ++j) {
      if (current[j] > 0) result.allocation[items[j].key] = current[j];
    }
  }
  return result;
}

GreedyResult form_pool_greedy(std::vector<PoolCandidate> candidates, double r_req,
                              const GreedyOptions& options) {
  return form_pool_greedy(RankedCandidates(std::move(candidates)), r_req, options);
}

double pool_objective(std::span<const PoolCandidate> candidates,
                      const Allocation& allocation, double gamma) {
  double total = 0.0;
  for (const auto& c : candidates) {
    auto it = allocation.find(c.key);
    if (it == allocation.end() || it->second <= 0) continue;
    total += c.score * c.capacity * it->second + gamma;
  }
  return total;
}

namespace {

struct ExactSearch {
  std::vector<PoolCandidate> items;  // search order: score descending
  std::vector<std::size_t> canon;    // search index -> pool-key rank
  std::vector<int> max_count;
  std::vector<double> suffix_cap;
  std::vector<double> suffix_rate;
  double lower = 0.0;
  double upper = 0.0;
  double eps = 0.0;
  double gamma = 0.0;

  std::vector<int> counts;
  bool found = false;
  double best_value = -std::numeric_limits<double>::infinity();
  long best_nodes = 0;
  std::vector<int> best_canon;
  std::uint64_t visited = 0;

  double tol(double v) const { return 1e-9 * std::max(1.0, std::abs(v)); }

  void consider(double value, long nodes) {
    std::vector<int> by_key(items.size(), 0);
    for (std::size_t i = 0; i < items.size(); ++i) by_key[canon[i]] = counts[i];
    bool better = !found;
    if (found) {
      const double t = tol(best_value);
      if (value > best_value + t) {
        better = true;
      } else if (value >= best_value - t) {
        if (nodes != best_nodes) {
          better = nodes < best_nodes;
        } else {
          better = by_key < best_canon;
        }
      }
    }
    if (better) {
      found = true;
      best_value = value;
      best_nodes = nodes;
      best_canon = std::move(by_key);
    }
  }

  void dfs(std::size_t i, double used, double value, long nodes) {
    ++visited;
    if (i == items.size()) {
      if (used >= lower - eps) consider(value, nodes);
      return;
    }
    if (used + suffix_cap[i] < lower - eps) return;
    if (found) {
      const double bound = value + suffix_rate[i] * std::max(0.0, upper - used) +
                           gamma * static_cast<double>(items.size() - i);
      if (bound < best_value - tol(best_value)) return;
    }
    const auto& c = items[i];
    for (int x = max_count[i]; x >= 0; --x) {
      const double next = used + c.capacity * x;
      if (next > upper + eps) continue;
      counts[i] = x;
      dfs(i + 1, next, value + (x > 0 ? c.score * c.capacity * x + gamma : 0.0),
          nodes + x);
    }
    counts[i] = 0;
  }
};

}  // namespace

ExactResult form_pool_exact(std::span<const PoolCandidate> candidates, double r_req,
                            const IlpConfig& config) {
  check_request_amount(r_req);
  check_candidates(candidates);
  if (config.upper_slack < 0) throw InvalidArgument("upper_slack must be >= 0");
  if (!(config.gamma >= 0.0) || !std::isfinite(config.gamma)) {
    throw InvalidArgument("gamma must be non-negative");
  }
  if (candidates.size() > config.max_types) {
    throw TooManyCandidates(std::to_string(candidates.size()) +
                            " candidates exceed the exact solver limit of " +
                            std::to_string(config.max_types));
  }
  if (candidates.empty()) throw Infeasible("no candidates");

  std::vector<PoolCandidate> by_key(candidates.begin(), candidates.end());
  std::sort(by_key.begin(), by_key.end(),
            [](const PoolCandidate& a, const PoolCandidate& b) { return a.key < b.key; });
  std::vector<std::size_t> order(by_key.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return by_key[a].score > by_key[b].score;
  });

  ExactSearch s;
  s.lower = r_req;
  s.upper = r_req + config.upper_slack;
  s.eps = 1e-9 * std::max(1.0, s.upper);
  s.gamma = config.gamma;
  const std::size_t n = order.size();
  s.items.reserve(n);
  for (std::size_t idx : order) {
    s.items.push_back(by_key[idx]);
    s.canon.push_back(idx);
  }
  s.max_count.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.max_count[i] = static_cast<int>(std::floor((s.upper + s.eps) / s.items[i].capacity));
  }
  s.suffix_cap.assign(n + 1, 0.0);
  s.suffix_rate.assign(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    s.suffix_cap[i] = s.suffix_cap[i + 1] + s.items[i].capacity * s.max_count[i];
    s.suffix_rate[i] = std::max(s.suffix_rate[i + 1], s.items[i].score);
  }
  s.counts.assign(n, 0);
  s.dfs(0, 0.0, 0.0, 0);
  if (!s.found) {
    throw Infeasible("no allocation lands within [" + std::to_string(s.lower) + ", " +
                     std::to_string(s.upper) + "]");
  }

  ExactResult result;
  for (std::size_t k = 0; k < by_key.size(); ++k) {
    if (s.best_canon[k] > 0) result.allocation[by_key[k].key] = s.best_canon[k];
  }
  result.objective = s.best_value;
  result.nodes_visited = s.visited;
  return result;
}

PoolRecommendation recommend(const ResourceRequest& request, const store::Store& store,
                             std::span<const InstanceCandidate> catalog,
                             const RecommendOptions& options) {
  request.validate();
  PoolRecommendation rec;
  rec.dimension = request.dimension;
  rec.requested = request.amount;
  rec.weight = request.weight;
  rec.lambda = request.lambda;

  Timestamp to;
  if (request.as_of) {
    to = *request.as_of;
  } else {
    auto latest = store.latest_timestamp();
    if (!latest) throw NoCandidates("the store holds no records");
    to = *latest + std::chrono::seconds(1);
  }
  const Timestamp from = to - std::chrono::hours(24) * request.window_days;
  rec.window_from = from;
  rec.window_to = to;

  auto filtered = filter_candidates(catalog, request, [&](const PoolKey& key) {
    return store.window(key, from, to);
  });
  rec.diagnostics = std::move(filtered.diagnostics);
  auto scored = score_candidates(filtered.candidates, request, &rec.diagnostics);
  if (scored.empty()) throw NoCandidates("no candidate has a valid series");

  std::map<PoolKey, const ScoreBreakdown*> by_key;
  std::vector<PoolCandidate> pool_candidates;
  for (const auto& b : scored) {
    by_key[b.candidate.pool] = &b;
    pool_candidates.push_back({b.candidate.pool, b.total,
                               capacity_of(b.candidate, request.dimension), b.pool_cost});
  }
  RankedCandidates ranked(std::move(pool_candidates));
  if (request.max_types) ranked.truncate(static_cast<std::size_t>(*request.max_types));

  Allocation allocation;
  if (options.exact) {
    if (ranked.size() > options.ilp.max_types) {
      rec.diagnostics.push_back("exact solver limited to the top " +
                                std::to_string(options.ilp.max_types) + " candidates");
      ranked.truncate(options.ilp.max_types);
    }
    allocation = form_pool_exact(ranked.items(), request.amount, options.ilp).allocation;
    rec.method = "exact";
  } else {
    allocation = form_pool_greedy(ranked, request.amount).allocation;
    rec.method = "greedy";
  }

  for (const auto& c : ranked.items()) {
    auto it = allocation.find(c.key);
    if (it == allocation.end() || it->second <= 0) continue;
    const ScoreBreakdown& b = *by_key.at(c.key);
    rec.allocations.push_back({b, it->second});
    rec.total_resource += c.capacity * it->second;
    rec.total_cost += b.candidate.spot_price * it->second;
    rec.aggregate_score += b.total;
  }
  rec.objective = pool_objective(ranked.items(), allocation, options.ilp.gamma);
  return rec;
}

}  // namespace spotvista::recommender
