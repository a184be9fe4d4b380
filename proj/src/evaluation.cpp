#include "spotvista/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <sstream>

#include "spotvista/collector.hpp"
#include "spotvista/error.hpp"
#include "spotvista/scoring.hpp"

namespace spotvista::evaluation {

namespace {

void check_period(Minutes period, Minutes duration) {
  if (period <= Minutes{0}) throw InvalidArgument("period must be positive");
  if (duration <= Minutes{0}) throw InvalidArgument("duration must be positive");
}

std::vector<PoolKey> catalog_keys(const cloudsim::Simulator& sim,
                                  std::optional<std::size_t> limit) {
  std::vector<PoolKey> keys;
  for (const auto& c : sim.catalog()) keys.push_back(c.pool);
  if (limit && keys.size() > *limit) keys.resize(*limit);
  return keys;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ProbeLog probe_campaign(cloudsim::Simulator& sim, const PoolKey& key, int count,
                        Minutes period, Minutes duration) {
  const ProbeTarget target{key, count};
  return probe_campaigns(sim, std::span(&target, 1), period, duration).front();
}

std::vector<ProbeLog> probe_campaigns(cloudsim::Simulator& sim,
                                      std::span<const ProbeTarget> targets,
                                      Minutes period, Minutes duration) {
  check_period(period, duration);
  std::vector<ProbeLog> logs;
  for (const auto& t : targets) {
    if (t.count < 1) throw InvalidArgument("probe count must be >= 1");
    sim.capacity_model(t.key);  // UnknownPool before any time passes
    logs.push_back({t.key, t.count, period, {}});
  }
  for (Minutes elapsed{0}; elapsed < duration; elapsed += period) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const bool ok =
          sim.request_spot(targets[i].key, targets[i].count, cloudsim::RequestMode::kProbe);
      logs[i].outcomes.push_back({sim.now(), ok});
    }
    sim.advance_time(period);
  }
  return logs;
}

double real_availability_score(const ProbeLog& log) {
  if (log.outcomes.empty()) throw EmptyInput("probe log has no outcomes");
  const auto ok = std::count_if(log.outcomes.begin(), log.outcomes.end(),
                                [](const ProbeOutcome& o) { return o.fulfilled; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(log.outcomes.size());
}

std::string to_string(AvailabilityBin bin) {
  switch (bin) {
    case AvailabilityBin::kLow:
      return "low";
    case AvailabilityBin::kMid:
      return "mid";
    case AvailabilityBin::kHigh:
      return "high";
  }
  return "?";
}

AvailabilityBin bin_scores(double score) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw InvalidArgument("score outside [0, 100]: " + fmt(score));
  }
  if (score < 20.0) return AvailabilityBin::kLow;
  if (score <= 70.0) return AvailabilityBin::kMid;
  return AvailabilityBin::kHigh;
}

double SurvivalCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t i = 0; i < event_times.size() && event_times[i] <= t; ++i) {
    s = survival[i];
  }
  return s;
}

SurvivalCurve kaplan_meier(std::span<const Lifetime> lifetimes) {
  if (lifetimes.empty()) throw EmptyInput("kaplan_meier needs at least one subject");
  std::vector<Lifetime> sorted(lifetimes.begin(), lifetimes.end());
  for (const auto& l : sorted) {
    if (!(l.duration > 0.0) || !std::isfinite(l.duration)) {
      throw InvalidArgument("lifetimes must be positive");
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Lifetime& a, const Lifetime& b) { return a.duration < b.duration; });

  SurvivalCurve curve;
  int at_risk = static_cast<int>(sorted.size());
  double s = 1.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].duration;
    int died = 0;
    int leaving = 0;
    for (; i < sorted.size() && sorted[i].duration == t; ++i) {
      ++leaving;
      if (sorted[i].event_observed) ++died;
    }
    if (died > 0) {
      s *= static_cast<double>(at_risk - died) / static_cast<double>(at_risk);
      curve.event_times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
      curve.died.push_back(died);
    }
    at_risk -= leaving;
  }
  return curve;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("pearson needs two equal-length series of length >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw ZeroVariance("pearson of a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double mae(std::span<const double> estimated, std::span<const double> truth) {
  if (estimated.size() != truth.size()) throw InvalidArgument("mae length mismatch");
  if (estimated.empty()) throw InvalidArgument("mae of empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) sum += std::abs(estimated[i] - truth[i]);
  return sum / static_cast<double>(estimated.size());
}

std::vector<StrategySpec> default_strategies() {
  return {{Strategy::kFullScan, 1, "full_scan"},
          {Strategy::kBinarySearch, 1, "bs"},
          {Strategy::kTstp, 4, "tstp_e4"},
          {Strategy::kUsqs, 1, "usqs"}};
}

std::vector<StrategyRow> strategy_report(const StrategyReportConfig& config) {
  if (config.interval <= Minutes{0} || config.duration < config.interval) {
    throw InvalidArgument("strategy report needs duration >= interval > 0");
  }
  const std::size_t warmup =
      collector::make_usqs_grid(config.usqs_t_min, config.usqs_step, kMaxNodeCount,
                                config.include_single_node)
          .size();
  const auto n_cycles = static_cast<std::size_t>(config.duration / config.interval);
  if (n_cycles <= warmup) throw InvalidArgument("duration shorter than the warm-up pass");

  auto run_one = [&](const StrategySpec& spec) {
    cloudsim::Simulator sim(config.scenario);
    const auto keys = catalog_keys(sim, config.max_pools);
    collector::CollectorConfig cc;
    cc.interval = config.interval;
    cc.strategy = spec.strategy;
    cc.early_stop = spec.early_stop;
    cc.include_single_node = config.include_single_node;
    if (spec.strategy == Strategy::kUsqs) {
      cc.t_min = config.usqs_t_min;
      cc.step = config.usqs_step;
    } else {
      cc.t_min = 1;
      cc.step = 1;
    }
    collector::Collector col(cc, keys, "eval-" + spec.label);

    std::uint64_t queries = 0;
    double abs_err = 0.0;
    std::size_t samples = 0;
    for (std::size_t cycle = 0; cycle < n_cycles; ++cycle) {
      const auto out = col.run_cycle(sim);
      if (cycle >= warmup) {
        if (out.skipped > 0) throw QuotaExceeded("strategy " + spec.label + " hit the quota");
        queries += out.observations.size();
        for (const auto& rec : out.transitions) {
          const auto truth = collector::full_scan(
              [&](int n) { return sim.query_sps_unmetered(rec.key, n); }, rec.key, 1,
              kMaxNodeCount, sim.now());
          abs_err += std::abs(rec.t3 - truth.record.t3);
          ++samples;
        }
      }
      sim.advance_time(config.interval);
    }
    StrategyRow row;
    row.label = spec.label;
    row.strategy = spec.strategy;
    row.early_stop = spec.early_stop;
    row.cycles = n_cycles - warmup;
    row.pools = keys.size();
    row.queries_per_cycle =
        static_cast<double>(queries) / static_cast<double>(row.cycles * keys.size());
    row.t3_mae = samples ? abs_err / static_cast<double>(samples) : 0.0;
    return row;
  };

  std::vector<std::future<StrategyRow>> jobs;
  for (const auto& spec : config.strategies) {
    jobs.push_back(std::async(std::launch::async, run_one, spec));
  }
  std::vector<StrategyRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

std::string format_strategy_csv(std::span<const StrategyRow> rows) {
  std::ostringstream os;
  os << "strategy,queries_per_cycle,t3_mae\n";
  for (const auto& r : rows) {
    os << r.label << ',' << fmt(r.queries_per_cycle) << ',' << fmt(r.t3_mae) << '\n';
  }
  return os.str();
}

std::vector<SweepRow> step_size_sweep(const SweepConfig& config) {
  if (config.interval <= Minutes{0} || config.duration < config.interval) {
    throw InvalidArgument("step sweep needs duration >= interval > 0");
  }
  std::vector<int> steps = config.steps;
  if (steps.empty()) {
    steps.resize(kMaxNodeCount);
    std::iota(steps.begin(), steps.end(), 1);
  }
  std::vector<std::vector<int>> grids;
  std::size_t warmup = 0;
  for (int s : steps) {
    if (s < 1 || s > kMaxNodeCount) throw InvalidArgument("step sizes must lie in [1, 50]");
    grids.push_back(
        collector::make_usqs_grid(s, s, kMaxNodeCount, config.include_single_node));
    warmup = std::max(warmup, grids.back().size());
  }
  const auto n_cycles = static_cast<std::size_t>(config.duration / config.interval);
  if (n_cycles <= warmup) throw InvalidArgument("duration shorter than the warm-up pass");

  // trace[cycle][pool]
  cloudsim::Simulator sim(config.scenario);
  const auto keys = catalog_keys(sim, config.max_pools);
  std::vector<std::vector<cloudsim::LatentState>> trace(n_cycles);
  std::vector<Timestamp> times(n_cycles);
  for (std::size_t c = 0; c < n_cycles; ++c) {
    times[c] = sim.now();
    for (const auto& k : keys) trace[c].push_back(sim.latent(k));
    sim.advance_time(config.interval);
  }

  std::vector<SweepRow> rows;
  for (std::size_t si = 0; si < steps.size(); ++si) {
    double abs_err = 0.0;
    std::size_t samples = 0;
    for (std::size_t p = 0; p < keys.size(); ++p) {
      collector::UsqsState state(grids[si]);
      for (std::size_t c = 0; c < n_cycles; ++c) {
        const auto& truth = trace[c][p];
        const int n = collector::usqs_next_target(state);
        const SpsValue v = n <= truth.t3   ? SpsValue::high()
                           : n <= truth.t2 ? SpsValue::medium()
                                           : SpsValue::low();
        state.record(n, v, times[c]);
        if (c >= warmup) {
          abs_err += std::abs(collector::estimate_t3_from_samples(state) - truth.t3);
          ++samples;
        }
      }
    }
    SweepRow row;
    row.step = steps[si];
    row.grid_size = grids[si].size();
    row.requery_delay = collector::requery_delay(row.grid_size, config.interval);
    row.t3_mae = samples ? abs_err / static_cast<double>(samples) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "step,grid_size,requery_delay_min,t3_mae\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.grid_size << ',' << r.requery_delay.count() << ','
       << fmt(r.t3_mae) << '\n';
  }
  return os.str();
}

const SweepRow& best_step(std::span<const SweepRow> rows) {
  if (rows.empty()) throw EmptyInput("no sweep rows");
  return *std::min_element(rows.begin(), rows.end(),
                           [](const SweepRow& a, const SweepRow& b) {
                             return a.t3_mae < b.t3_mae;
                           });
}

std::map<PoolKey, double> availability_by_pool(const store::Store& store,
                                               std::span<const PoolKey> keys,
                                               Timestamp from, Timestamp to,
                                               double lambda) {
  std::vector<PoolKey> usable;
  std::vector<scoring::AvailabilityComponents> comps;
  for (const auto& k : keys) {
    const auto series = store.window(k, from, to);
    if (series.samples.size() < 2) continue;
    try {
      comps.push_back(scoring::availability_components(series));
      usable.push_back(k);
    } catch (const InvalidArgument&) {
    }
  }
  std::map<PoolKey, double> out;
  if (usable.empty()) return out;
  const auto scores = scoring::availability_scores(comps, lambda);
  for (std::size_t i = 0; i < usable.size(); ++i) out[usable[i]] = scores[i].as_score;
  return out;
}

void collect_history(cloudsim::Simulator& sim, store::Store& store,
                     const HistoryConfig& config) {
  collector::CollectorConfig cc;
  cc.interval = config.interval;
  cc.strategy = config.strategy;
  cc.early_stop = config.early_stop;
  if (config.strategy != Strategy::kUsqs) {
    cc.t_min = 1;
    cc.step = 1;
  }
  collector::Collector col(cc, catalog_keys(sim, std::nullopt), "history");
  col.run(sim, config.duration, [&](const collector::CycleOutput& out) {
    for (const auto& t : out.transitions) store.append(t);
  });
}

SurvivalReport survival_campaign(const SurvivalConfig& config) {
  if (config.instances_per_pool < 1) throw InvalidArgument("instances_per_pool must be >= 1");
  if (config.campaign <= Minutes{0}) throw InvalidArgument("campaign must be positive");
  cloudsim::Simulator sim(config.scenario);
  store::Store store;
  const Timestamp from = sim.now();
  collect_history(sim, store, config.history);
  const auto keys = catalog_keys(sim, std::nullopt);

  SurvivalReport report;
  report.as_scores = availability_by_pool(store, keys, from, sim.now());

  std::map<PoolKey, AvailabilityBin> bins;
  for (const auto& [k, as] : report.as_scores) {
    bins[k] = bin_scores(as);
    for (int i = 0; i < config.instances_per_pool; ++i) {
      sim.request_spot(k, 1, cloudsim::RequestMode::kHold);
    }
  }
  const Timestamp start = sim.now();
  sim.advance_time(config.campaign);
  const Timestamp end = sim.now();

  for (const auto& ev : sim.drain_interruptions()) {
    auto it = bins.find(ev.key);
    if (it == bins.end()) continue;
    report.lifetimes[it->second].push_back({to_hours(ev.interrupted - ev.launched), true});
  }
  for (const auto& inst : sim.running_instances()) {
    auto it = bins.find(inst.key);
    if (it == bins.end() || inst.launched < start) continue;
    report.lifetimes[it->second].push_back({to_hours(end - inst.launched), false});
  }
  for (const auto& [bin, lives] : report.lifetimes) {
    report.curves[bin] = kaplan_meier(lives);
  }
  return report;
}

std::string format_survival_csv(const SurvivalReport& report) {
  std::ostringstream os;
  os << "bin,time_h,survival,at_risk,died\n";
  for (const auto& [bin, curve] : report.curves) {
    os << to_string(bin) << ",0,1,"
       << report.lifetimes.at(bin).size() << ",0\n";
    for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
      os << to_string(bin) << ',' << fmt(curve.event_times[i]) << ','
         << fmt(curve.survival[i]) << ',' << curve.at_risk[i] << ',' << curve.died[i]
         << '\n';
    }
  }
  return os.str();
}

ValidationReport validation_report(const ValidationConfig& config) {
  cloudsim::Simulator sim(config.scenario);
  store::Store store;
  const Timestamp from = sim.now();
  collect_history(sim, store, config.history);
  const Timestamp to = sim.now();
  const auto keys = catalog_keys(sim, std::nullopt);
  const auto as = availability_by_pool(store, keys, from, to);

  std::vector<ProbeTarget> targets;
  for (const auto& [k, score] : as) targets.push_back({k, config.probe_count});
  const auto logs =
      probe_campaigns(sim, targets, config.probe_period, config.probe_duration);

  ValidationReport report;
  std::map<AvailabilityBin, std::pair<double, int>> sums;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ValidationRow row;
    row.key = targets[i].key;
    row.as_score = as.at(row.key);
    row.bin = bin_scores(row.as_score);
    row.real_availability = real_availability_score(logs[i]);
    std::vector<double> t3, t2;
    for (const auto& t : store.transitions(row.key, from, to)) {
      t3.push_back(t.t3);
      t2.push_back(t.t2);
    }
    try {
      row.t3_t2_correlation = pearson(t3, t2);
    } catch (const Error&) {
    }
    auto& [sum, n] = sums[row.bin];
    sum += row.real_availability;
    ++n;
    report.rows.push_back(row);
  }
  for (const auto& [bin, s] : sums) report.mean_real_availability[bin] = s.first / s.second;
  return report;
}

std::string format_validation_csv(const ValidationReport& report) {
  std::ostringstream os;
  os << "instance_type,region,az,as_score,bin,real_availability,t3_t2_pearson\n";
  for (const auto& r : report.rows) {
    os << r.key.instance_type << ',' << r.key.region << ',' << r.key.az << ','
       << fmt(r.as_score) << ',' << to_string(r.bin) << ',' << fmt(r.real_availability)
       << ',' << (r.t3_t2_correlation ? fmt(*r.t3_t2_correlation) : "") << '\n';
  }
  return os.str();
}

std::vector<TradeoffRow> weight_tradeoff(const TradeoffConfig& config) {
  cloudsim::Simulator sim(config.scenario);
  store::Store store;
  collect_history(sim, store, config.history);

  std::vector<TradeoffRow> rows;
  std::vector<ProbeTarget> targets;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // per row: [begin, end)
  for (double w : config.weights) {
    recommender::ResourceRequest req = config.request;
    req.weight = w;
    TradeoffRow row;
    row.weight = w;
    row.recommendation = recommender::recommend(req, store, sim.catalog());
    row.cost_per_hour = row.recommendation.total_cost;
    const std::size_t begin = targets.size();
    for (const auto& line : row.recommendation.allocations) {
      targets.push_back({line.breakdown.candidate.pool, line.count});
    }
    spans.emplace_back(begin, targets.size());
    rows.push_back(std::move(row));
  }
  const auto logs =
      probe_campaigns(sim, targets, config.probe_period, config.probe_duration);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t ok = 0, total = 0;
    for (std::size_t i = spans[r].first; i < spans[r].second; ++i) {
      for (const auto& o : logs[i].outcomes) {
        ok += o.fulfilled ? 1 : 0;
        ++total;
      }
    }
    rows[r].probe_success = total ? 100.0 * static_cast<double>(ok) / total : 0.0;
  }
  return rows;
}

std::string format_tradeoff_csv(std::span<const TradeoffRow> rows) {
  std::ostringstream os;
  os << "weight,types,total_resource,cost_per_hour,probe_success\n";
  for (const auto& r : rows) {
    os << fmt(r.weight) << ',' << r.recommendation.allocations.size() << ','
       << fmt(r.recommendation.total_resource) << ',' << fmt(r.cost_per_hour) << ','
       << fmt(r.probe_success) << '\n';
  }
  return os.str();
}

}  // namespace spotvista::evaluation
