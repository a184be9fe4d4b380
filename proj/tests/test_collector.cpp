#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spotvista/collector.hpp"
#include "spotvista/error.hpp"
#include "spotvista/scoring.hpp"

using namespace spotvista;
using namespace spotvista::collector;

namespace {

const PoolKey kKey{"m5.large", "us-east-1", "us-east-1a"};
const Timestamp kT0 = make_timestamp(2025, 8, 4);

// profile[n - 1] is the SPS at node count n.
std::vector<int> make_profile(int t3, int t2) {
  std::vector<int> p(50);
  for (int n = 1; n <= 50; ++n) p[n - 1] = n <= t3 ? 3 : n <= t2 ? 2 : 1;
  return p;
}

std::pair<int, int> linear_oracle(const std::vector<int>& p) {
  int t3 = 0, t2 = 0;
  for (int n = 1; n <= 50; ++n) {
    if (p[n - 1] >= 3) t3 = n;
    if (p[n - 1] >= 2) t2 = n;
  }
  return {t3, t2};
}

struct CountingQuery {
  const std::vector<int>* profile;
  int calls = 0;
  SpsValue operator()(int n) {
    ++calls;
    return SpsValue::from_int((*profile)[n - 1]);
  }
};

cloudsim::ScenarioConfig constant_pool(double c, double t3f = 1.0, double t2f = 1.0) {
  cloudsim::ScenarioConfig cfg;
  cloudsim::CapacityModel m;
  m.base = c;
  m.c_max = 200;
  m.t3_fraction = t3f;
  m.t2_fraction = t2f;
  cfg.pools.push_back({{kKey, "m5", "general", 2, 8.0, 0.04}, m});
  return cfg;
}

}  // namespace

TEST(Grid, DefaultHasElevenPoints) {
  const auto g = make_usqs_grid(5, 5, 50, true);
  EXPECT_EQ(g, (std::vector<int>{1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50}));
  EXPECT_EQ(make_usqs_grid(5, 5, 50, false).size(), 10u);
  EXPECT_EQ(make_usqs_grid(1, 1, 50, true).size(), 50u);
  EXPECT_THROW(make_usqs_grid(0, 5, 50, true), InvalidArgument);
}

TEST(Grid, ElevenOutcomesMaxEntropy) {
  const auto g = make_usqs_grid(5, 5, 50, true);
  std::vector<std::uint64_t> counts(g.size(), 1);
  EXPECT_NEAR(scoring::entropy_bits(counts), 3.4594, 1e-3);
}

TEST(Grid, RequeryDelay) {
  const auto g = make_usqs_grid(5, 5, 50, false);
  EXPECT_EQ(requery_delay(g.size(), Minutes{10}), Minutes{100});
}

TEST(Usqs, CursorWrapsToMinimum) {
  UsqsState s(make_usqs_grid(5, 5, 50, false));
  for (int i = 0; i < 9; ++i) usqs_next_target(s);
  EXPECT_EQ(s.peek(), 50);
  EXPECT_EQ(usqs_next_target(s), 50);
  EXPECT_EQ(usqs_next_target(s), 5);
}

TEST(Usqs, EveryCountRevisitedAfterGridPass) {
  cloudsim::Simulator sim(constant_pool(17));
  UsqsState s(make_usqs_grid(5, 5, 50, false));
  std::map<int, std::vector<Timestamp>> seen;
  for (int cycle = 0; cycle < 40; ++cycle) {
    const auto obs = run_usqs_cycle(s, sim, "a", kKey);
    seen[obs.node_count].push_back(obs.timestamp);
    sim.advance_time(Minutes{10});
  }
  for (const auto& [n, ts] : seen) {
    for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_EQ(ts[i] - ts[i - 1], Minutes{100});
  }
}

TEST(Usqs, OnePassFillsLastKnown) {
  cloudsim::Simulator sim(constant_pool(17));
  UsqsState s(make_usqs_grid(5, 5, 50, true));
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    run_usqs_cycle(s, sim, "a", kKey);
    sim.advance_time(Minutes{10});
  }
  EXPECT_EQ(s.last_known().size(), s.grid().size());
  EXPECT_EQ(estimate_t3_from_samples(s), 15);
}

TEST(Usqs, TwentyFourHoursIs144Queries) {
  cloudsim::Simulator sim(constant_pool(30));
  CollectorConfig cfg;
  Collector col(cfg, {kKey});
  std::size_t queries = 0;
  col.run(sim, kDay, [&](const CycleOutput& out) { queries += out.observations.size(); });
  EXPECT_EQ(queries, 144u);
}

TEST(Usqs, CeilingCountEstimatesFifty) {
  UsqsState s(make_usqs_grid(5, 5, 50, true));
  for (int n : s.grid()) s.record(n, SpsValue::high(), kT0);
  EXPECT_EQ(estimate_t3_from_samples(s), 50);
}

TEST(Usqs, StaleConflictIsClipped) {
  UsqsState s(make_usqs_grid(5, 5, 50, false));
  s.record(10, SpsValue::high(), kT0);
  s.record(5, SpsValue::low(), kT0 + Minutes{10});
  EXPECT_EQ(estimate_t3_from_samples(s), 0);
}

TEST(Usqs, NothingRecordedIsAnError) {
  UsqsState s(make_usqs_grid(5, 5, 50, false));
  EXPECT_THROW(estimate_t3_from_samples(s), EmptyInput);
}

TEST(Usqs, QuotaExhaustedMidPassKeepsCursor) {
  cloudsim::ScenarioConfig cfg = constant_pool(30);
  const PoolKey other{"c5.large", "us-east-1", "us-east-1a"};
  cloudsim::CapacityModel m;
  m.base = 30;
  cfg.pools.push_back({{other, "c5", "compute", 2, 4.0, 0.03}, m});
  cloudsim::Simulator sim(cfg);
  for (int n = 1; n <= 45; ++n) sim.query_sps("a", other, n);

  UsqsState s(make_usqs_grid(5, 5, 50, true));
  int emitted = 0;
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    try {
      run_usqs_cycle(s, sim, "a", kKey);
      ++emitted;
    } catch (const QuotaExceeded&) {
    }
    sim.advance_time(Minutes{10});
  }
  EXPECT_EQ(emitted, 5);
  EXPECT_EQ(s.cursor(), 5u);
  EXPECT_EQ(s.last_known().size(), 5u);
}

TEST(Usqs, NeverOverestimatesOnStaticProfile) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int t3 = static_cast<int>(rng() % 51);
    const int t2 = t3 + static_cast<int>(rng() % (51 - t3));
    const auto p = make_profile(t3, t2);
    UsqsState s(make_usqs_grid(5, 5, 50, true));
    for (std::size_t i = 0; i < s.grid().size(); ++i) {
      const int n = usqs_next_target(s);
      s.record(n, SpsValue::from_int(p[n - 1]), kT0 + Minutes{10 * static_cast<int>(i)});
    }
    int expected = 0;
    for (int n : s.grid()) {
      if (n <= t3) expected = n;
    }
    EXPECT_EQ(estimate_t3_from_samples(s), expected);
    EXPECT_LE(t3 - estimate_t3_from_samples(s), 4);
  }
}

TEST(Tstp, ExactOnFixture) {
  const auto p = make_profile(17, 33);
  CountingQuery q{&p};
  const auto rec = tstp_find_transitions(std::ref(q), kKey, 1, 50, nullptr, 1, kT0);
  EXPECT_EQ(rec.t3, 17);
  EXPECT_EQ(rec.t2, 33);
  EXPECT_LE(rec.queries_used, 12);
  EXPECT_EQ(rec.queries_used, q.calls);
}

TEST(Tstp, Boundaries) {
  const auto top = make_profile(50, 50);
  const auto bottom = make_profile(0, 0);
  CountingQuery a{&top}, b{&bottom};
  const auto r1 = tstp_find_transitions(std::ref(a), kKey, 1, 50, nullptr, 1, kT0);
  const auto r2 = tstp_find_transitions(std::ref(b), kKey, 1, 50, nullptr, 1, kT0);
  EXPECT_EQ(std::make_pair(r1.t3, r1.t2), std::make_pair(50, 50));
  EXPECT_EQ(std::make_pair(r2.t3, r2.t2), std::make_pair(0, 0));
}

TEST(Tstp, MatchesLinearOracleOnRandomProfiles) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t3 = static_cast<int>(rng() % 51);
    const int t2 = t3 + static_cast<int>(rng() % (51 - t3));
    const auto p = make_profile(t3, t2);
    CountingQuery exact{&p}, coarse{&p};
    const auto r1 = tstp_find_transitions(std::ref(exact), kKey, 1, 50, nullptr, 1, kT0);
    const auto r4 = tstp_find_transitions(std::ref(coarse), kKey, 1, 50, nullptr, 4, kT0);
    const auto [o3, o2] = linear_oracle(p);
    EXPECT_EQ(r1.t3, o3);
    EXPECT_EQ(r1.t2, o2);
    EXPECT_LE(r1.queries_used, 12);
    EXPECT_LE(r4.t3, o3);
    EXPECT_LE(r4.t2, o2);
    EXPECT_LE(o3 - r4.t3, 3);
    EXPECT_LE(o2 - r4.t2, 3);
    EXPECT_LE(r4.queries_used, r1.queries_used);
  }
}

TEST(Tstp, SubRangeSearch) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const int t_min = 1 + static_cast<int>(rng() % 20);
    const int t_max = t_min + static_cast<int>(rng() % (51 - t_min));
    const int t3 = static_cast<int>(rng() % 51);
    const int t2 = t3 + static_cast<int>(rng() % (51 - t3));
    const auto p = make_profile(t3, t2);
    CountingQuery q{&p};
    const auto r = tstp_find_transitions(std::ref(q), kKey, t_min, t_max, nullptr, 1, kT0);
    auto clip = [&](int t) { return t < t_min ? 0 : std::min(t, t_max); };
    EXPECT_EQ(r.t3, clip(t3));
    EXPECT_EQ(r.t2, clip(t2));
    const int width = t_max - t_min + 1;
    EXPECT_LE(r.queries_used, 2 * static_cast<int>(std::ceil(std::log2(width + 1))));
  }
}

TEST(Tstp, CachedSearchNoWorseUnderContinuity) {
  std::mt19937_64 rng(8);
  for (int walk = 0; walk < 200; ++walk) {
    TstpCache exact_cache, es_cache;
    int t3 = static_cast<int>(rng() % 51);
    int t2 = std::min(50, t3 + static_cast<int>(rng() % 10));
    int plain_total = 0, exact_total = 0;
    for (int cycle = 0; cycle < 60; ++cycle) {
      const auto p = make_profile(t3, t2);
      CountingQuery plain{&p}, exact{&p}, es{&p};
      const auto rp = tstp_find_transitions(std::ref(plain), kKey, 1, 50, nullptr, 1, kT0);
      const auto rx = tstp_find_transitions(std::ref(exact), kKey, 1, 50, &exact_cache, 1, kT0);
      const auto re = tstp_find_transitions(std::ref(es), kKey, 1, 50, &es_cache, 4, kT0);
      EXPECT_EQ(rx.t3, t3);
      EXPECT_EQ(rx.t2, t2);
      EXPECT_LE(re.t3, t3);
      EXPECT_GE(re.t3, t3 - 3);
      EXPECT_LE(re.t2, t2);
      EXPECT_GE(re.t2, t2 - 3);
      if (cycle > 0) {
        // Cache + early stop never costs more than plain bisection on a given cycle.
        EXPECT_LE(re.queries_used, rp.queries_used);
        // Cache alone can lose a cycle to a lucky bisection path, but not by much.
        EXPECT_LE(rx.queries_used, rp.queries_used + 2);
        plain_total += rp.queries_used;
        exact_total += rx.queries_used;
      }
      auto wiggle = [&](int v) { return v + static_cast<int>(rng() % 5) - 2; };
      t3 = std::clamp(wiggle(t3), 0, 50);
      t2 = std::clamp(wiggle(t2), t3, 50);
    }
    EXPECT_LT(exact_total, plain_total);
  }
}

TEST(Tstp, RejectsNonMonotoneAnswers) {
  std::vector<int> p = make_profile(10, 20);
  p[39] = 3;  // count 40 reports High above a Low region
  CountingQuery q{&p};
  EXPECT_THROW(
      {
        FullScanResult r = full_scan(std::ref(q), kKey, 1, 50, kT0);
        (void)r;
      },
      InconsistentProfile);
}

TEST(FullScan, ExactWithFiftyQueries) {
  const auto p = make_profile(17, 33);
  CountingQuery q{&p};
  const auto r = full_scan(std::ref(q), kKey, 1, 50, kT0);
  EXPECT_EQ(r.record.t3, 17);
  EXPECT_EQ(r.record.t2, 33);
  EXPECT_EQ(r.record.queries_used, 50);
  EXPECT_EQ(r.profile.size(), 50u);
}

TEST(FullScan, FlatMediumProfile) {
  const auto p = make_profile(0, 50);
  CountingQuery q{&p};
  const auto r = full_scan(std::ref(q), kKey, 1, 50, kT0);
  EXPECT_EQ(r.record.t3, 0);
  EXPECT_EQ(r.record.t2, 50);
}

TEST(FullScan, AgreesWithTstp) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t3 = static_cast<int>(rng() % 51);
    const int t2 = t3 + static_cast<int>(rng() % (51 - t3));
    const auto p = make_profile(t3, t2);
    CountingQuery a{&p}, b{&p};
    const auto f = full_scan(std::ref(a), kKey, 1, 50, kT0).record;
    const auto t = tstp_find_transitions(std::ref(b), kKey, 1, 50, nullptr, 1, kT0);
    EXPECT_EQ(f.t3, t.t3);
    EXPECT_EQ(f.t2, t.t2);
  }
}

TEST(Budget, ReproducesFleetArithmetic) {
  EXPECT_EQ(plan_query_budget(3300, 1), (QueryBudget{3300, 66}));
  EXPECT_EQ(plan_query_budget(3300, 50), (QueryBudget{165000, 3300}));
  EXPECT_EQ(plan_query_budget(1, 1), (QueryBudget{1, 1}));
  EXPECT_THROW(plan_query_budget(0, 1), InvalidArgument);
}

TEST(CollectorRun, StrategiesQueryCounts) {
  auto run = [](Strategy s) {
    cloudsim::Simulator sim(constant_pool(50, 17.0 / 50, 33.0 / 50));
    CollectorConfig cfg;
    cfg.strategy = s;
    cfg.t_min = s == Strategy::kUsqs ? 5 : 1;
    if (s != Strategy::kUsqs) cfg.step = 1;
    Collector col(cfg, {kKey});
    std::vector<CycleOutput> outs;
    for (int i = 0; i < 3; ++i) {
      outs.push_back(col.run_cycle(sim));
      sim.advance_time(Minutes{10});
    }
    return outs;
  };
  const auto full = run(Strategy::kFullScan);
  EXPECT_EQ(full[0].observations.size(), 50u);
  EXPECT_EQ(full[0].transitions[0].t3, 17);
  const auto bs = run(Strategy::kBinarySearch);
  EXPECT_LE(bs[0].observations.size(), 12u);
  EXPECT_EQ(bs[0].transitions[0].t2, 33);
  const auto tstp = run(Strategy::kTstp);
  EXPECT_LT(tstp[2].observations.size(), bs[2].observations.size());
  const auto usqs = run(Strategy::kUsqs);
  for (const auto& o : usqs) EXPECT_EQ(o.observations.size(), 1u);
}

TEST(CollectorRun, AccountsCoverWorstCaseScenarios) {
  std::vector<PoolKey> pools;
  for (int i = 0; i < 9; ++i) pools.push_back({"m5.large", "r", "z" + std::to_string(i)});
  CollectorConfig usqs;
  EXPECT_EQ(Collector(usqs, pools).account_count(), 3u);  // 4 pools x 11 counts each
  CollectorConfig full;
  full.strategy = Strategy::kFullScan;
  full.t_min = 1;
  full.step = 1;
  EXPECT_EQ(Collector(full, pools).account_count(), 9u);
}
