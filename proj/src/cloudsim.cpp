#include "spotvista/cloudsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "spotvista/error.hpp"

namespace spotvista::cloudsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string size_name(int vcpu) {
  switch (vcpu) {
    case 1: return "medium";
    case 2: return "large";
    case 4: return "xlarge";
    default: return std::to_string(vcpu / 4) + "xlarge";
  }
}

std::vector<PoolSpec> generate_pools(const CatalogGenerator& gen,
                                     std::uint64_t seed) {
  std::vector<PoolSpec> out;
  if (gen.n_types == 0) return out;
  const auto families = gen.families.empty() ? default_families() : gen.families;
  if (gen.regions.empty() || gen.azs_per_region < 1 || gen.vcpu_choices.empty()) {
    throw InvalidArgument("catalog generator needs regions, AZs and vcpu choices");
  }
  const std::size_t combos = families.size() * gen.vcpu_choices.size() *
                             gen.regions.size() *
                             static_cast<std::size_t>(gen.azs_per_region);
  if (gen.n_types > combos) {
    throw InvalidArgument("catalog generator asked for " +
                          std::to_string(gen.n_types) + " pools but only " +
                          std::to_string(combos) + " combinations exist");
  }

  std::mt19937_64 rng(splitmix64(seed ^ 0xca7a109ULL));
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  std::set<std::tuple<std::size_t, std::size_t, std::size_t, int>> used;
  while (out.size() < gen.n_types) {
    const std::size_t f = pick(families.size());
    const std::size_t v = pick(gen.vcpu_choices.size());
    const std::size_t r = pick(gen.regions.size());
    const int az = static_cast<int>(pick(static_cast<std::size_t>(gen.azs_per_region)));
    if (!used.emplace(f, v, r, az).second) continue;

    const FamilySpec& fam = families[f];
    const int vcpu = gen.vcpu_choices[v];
    PoolSpec spec;
    spec.candidate.pool.instance_type = fam.name + "." + size_name(vcpu);
    spec.candidate.pool.region = gen.regions[r];
    spec.candidate.pool.az = gen.regions[r] + static_cast<char>('a' + az);
    spec.candidate.family = fam.name;
    spec.candidate.category = fam.category;
    spec.candidate.vcpu = vcpu;
    spec.candidate.memory_gb = std::max(0.5, fam.memory_per_vcpu * vcpu);
    const double jitter = uniform(1.0 - gen.price_jitter, 1.0 + gen.price_jitter);
    spec.candidate.spot_price =
        std::round(fam.price_per_vcpu * vcpu * jitter * 1e5) / 1e5;
    if (spec.candidate.spot_price <= 0.0) spec.candidate.spot_price = 1e-5;

    CapacityModel& cap = spec.capacity;
    cap.base = uniform(gen.base_min, gen.base_max);
    cap.daily_amplitude = cap.base * uniform(0.0, gen.daily_amplitude_max);
    cap.weekly_amplitude = cap.base * uniform(0.0, gen.weekly_amplitude_max);
    cap.phase = uniform(0.0, 2.0 * std::numbers::pi);
    cap.noise_sigma = uniform(0.0, gen.noise_sigma_max);
    cap.noise_decay = uniform(0.5, 2.0);
    cap.c_max = static_cast<int>(std::ceil(2.0 * cap.base)) + 20;
    cap.t3_fraction = uniform(gen.t3_fraction_min, gen.t3_fraction_max);
    cap.t2_fraction = uniform(cap.t3_fraction, 1.0);
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace

std::vector<FamilySpec> default_families() {
  return {
      {"m5", "general", 4.0, 0.0200}, {"m6i", "general", 4.0, 0.0210},
      {"m7g", "general", 4.0, 0.0170}, {"c5", "compute", 2.0, 0.0170},
      {"c6i", "compute", 2.0, 0.0180}, {"c7g", "compute", 2.0, 0.0145},
      {"r5", "memory", 8.0, 0.0260},  {"r6i", "memory", 8.0, 0.0270},
  };
}

void CapacityModel::validate() const {
  if (c_max < 1) throw InvalidArgument("c_max must be >= 1");
  if (!(t3_fraction > 0.0 && t3_fraction <= t2_fraction && t2_fraction <= 1.0)) {
    throw InvalidArgument("capacity fractions must satisfy 0 < t3 <= t2 <= 1");
  }
  if (noise_sigma < 0.0 || noise_decay < 0.0) {
    throw InvalidArgument("noise parameters must be non-negative");
  }
  if (square_wave) {
    if (square_wave->period <= Minutes{0}) {
      throw InvalidArgument("square wave period must be positive");
    }
    if (square_wave->high_fraction < 0.0 || square_wave->high_fraction > 1.0) {
      throw InvalidArgument("square wave high_fraction must lie in [0, 1]");
    }
  }
}

LatentState thresholds_for(const CapacityModel& model, double capacity) {
  LatentState s;
  s.capacity = std::clamp(capacity, 0.0, static_cast<double>(model.c_max));
  s.t3 = std::min(kMaxNodeCount,
                  static_cast<int>(std::floor(model.t3_fraction * s.capacity)));
  s.t2 = std::min(kMaxNodeCount,
                  static_cast<int>(std::floor(model.t2_fraction * s.capacity)));
  return s;
}

// ---------------------------------------------------------------------------

QuotaLedger::QuotaLedger(std::size_t scenario_limit, Minutes window)
    : limit_(scenario_limit), window_(window) {}

void QuotaLedger::expire(std::vector<Entry>& entries, Timestamp now) const {
  std::erase_if(entries, [&](const Entry& e) { return e.first_seen + window_ <= now; });
}

void QuotaLedger::charge(const std::string& account, std::size_t pool_index,
                         int node_count, Timestamp now) {
  std::lock_guard lock(mutex_);
  auto& entries = accounts_[account];
  expire(entries, now);
  for (const Entry& e : entries) {
    if (e.pool_index == pool_index && e.node_count == node_count) return;
  }
  if (entries.size() >= limit_) {
    throw QuotaExceeded("account '" + account + "' reached " +
                        std::to_string(limit_) + " distinct scenarios in the window");
  }
  entries.push_back({pool_index, node_count, now});
}

std::size_t QuotaLedger::used(const std::string& account, Timestamp now) const {
  std::lock_guard lock(mutex_);
  auto it = accounts_.find(account);
  if (it == accounts_.end()) return 0;
  expire(it->second, now);
  return it->second.size();
}

// ---------------------------------------------------------------------------

Simulator::Simulator(ScenarioConfig config) : config_(std::move(config)) {
  std::vector<PoolSpec> specs = config_.pools;
  if (config_.generator) {
    auto generated = generate_pools(*config_.generator, config_.seed);
    specs.insert(specs.end(), generated.begin(), generated.end());
  }
  pools_.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].candidate.validate();
    specs[i].capacity.validate();
    if (!index_.emplace(specs[i].candidate.pool, i).second) {
      throw InvalidArgument("duplicate pool " + specs[i].candidate.pool.to_string());
    }
    Pool pool;
    pool.spec = specs[i];
    pool.rng.seed(splitmix64(config_.seed ^ splitmix64(i + 1)));
    const CapacityModel& m = pool.spec.capacity;
    if (m.noise_sigma > 0.0 && m.noise_decay > 0.0) {
      pool.noise = std::normal_distribution<double>(0.0, m.noise_sigma)(pool.rng);
    }
    pool.state = thresholds_for(m, capacity_at(pool, Minutes{0}) + pool.noise);
    catalog_.push_back(pool.spec.candidate);
    pools_.push_back(std::move(pool));
  }
}

std::size_t Simulator::index_of(const PoolKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw UnknownPool("unknown pool " + key.to_string());
  return it->second;
}

double Simulator::capacity_at(const Pool& pool, Minutes t) const {
  const CapacityModel& m = pool.spec.capacity;
  if (m.square_wave) {
    const SquareWave& w = *m.square_wave;
    const auto into = t.count() % w.period.count();
    const double high_minutes = w.high_fraction * static_cast<double>(w.period.count());
    return static_cast<double>(into) < high_minutes ? w.high : w.low;
  }
  const double hours = static_cast<double>(t.count()) / 60.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return m.base + m.daily_amplitude * std::sin(two_pi * hours / 24.0 + m.phase) +
         m.weekly_amplitude * std::sin(two_pi * hours / 168.0 + m.phase);
}

void Simulator::step_pool(Pool& pool, Minutes t) {
  const CapacityModel& m = pool.spec.capacity;
  if (m.noise_sigma > 0.0) {
    constexpr double dt = 1.0 / 60.0;  // one tick, in hours
    double scale;
    double keep;
    if (m.noise_decay > 0.0) {
      keep = std::exp(-m.noise_decay * dt);
      scale = m.noise_sigma * std::sqrt(1.0 - keep * keep);
    } else {
      keep = 1.0;
      scale = m.noise_sigma * std::sqrt(dt);
    }
    pool.noise = keep * pool.noise +
                 scale * std::normal_distribution<double>(0.0, 1.0)(pool.rng);
  }
  pool.state = thresholds_for(m, capacity_at(pool, t) + pool.noise);
}

void Simulator::advance_time(Minutes duration) {
  if (duration <= Minutes{0}) {
    throw InvalidArgument("advance_time requires a positive duration");
  }
  for (Minutes i{0}; i < duration; ++i) {
    ++elapsed_;
    const Timestamp t = now();
    for (Pool& pool : pools_) {
      step_pool(pool, elapsed_);
      while (static_cast<double>(pool.running.size()) > pool.state.capacity) {
        const RunningInstance victim = pool.running.front();
        pool.running.pop_front();
        interruptions_.push_back({victim.instance_id, victim.key, victim.launched, t});
      }
    }
  }
}

SpsValue Simulator::query_sps(const std::string& account, const PoolKey& key,
                              int node_count) {
  if (node_count < 1 || node_count > kMaxNodeCount) {
    throw InvalidArgument("node count must lie in [1, 50], got " +
                          std::to_string(node_count));
  }
  const std::size_t idx = index_of(key);
  quota_.charge(account, idx, node_count, now());
  return query_sps_unmetered(key, node_count);
}

SpsValue Simulator::query_sps_unmetered(const PoolKey& key, int node_count) const {
  if (node_count < 1 || node_count > kMaxNodeCount) {
    throw InvalidArgument("node count must lie in [1, 50], got " +
                          std::to_string(node_count));
  }
  const LatentState& s = pools_[index_of(key)].state;
  if (node_count <= s.t3) return SpsValue::high();
  if (node_count <= s.t2) return SpsValue::medium();
  return SpsValue::low();
}

LatentState Simulator::latent(const PoolKey& key) const {
  return pools_[index_of(key)].state;
}

const CapacityModel& Simulator::capacity_model(const PoolKey& key) const {
  return pools_[index_of(key)].spec.capacity;
}

bool Simulator::request_spot(const PoolKey& key, int count, RequestMode mode) {
  if (count < 1) throw InvalidArgument("spot request count must be >= 1");
  Pool& pool = pools_[index_of(key)];
  const bool fulfilled =
      static_cast<double>(count) + static_cast<double>(pool.running.size()) <=
      pool.state.capacity;
  if (fulfilled && mode == RequestMode::kHold) {
    for (int i = 0; i < count; ++i) {
      pool.running.push_back({next_instance_id_++, key, now()});
    }
  }
  return fulfilled;
}

int Simulator::running(const PoolKey& key) const {
  return static_cast<int>(pools_[index_of(key)].running.size());
}

std::vector<RunningInstance> Simulator::running_instances() const {
  std::vector<RunningInstance> out;
  for (const Pool& pool : pools_) {
    out.insert(out.end(), pool.running.begin(), pool.running.end());
  }
  return out;
}

std::vector<InterruptionEvent> Simulator::drain_interruptions() {
  std::vector<InterruptionEvent> out;
  out.swap(interruptions_);
  return out;
}

}  // namespace spotvista::cloudsim
