#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spotvista/cloudsim.hpp"
#include "spotvista/error.hpp"

namespace spotvista::cloudsim {

namespace {

using nlohmann::json;

CapacityModel parse_capacity(const json& j) {
  CapacityModel m;
  m.base = j.value("base", m.base);
  m.daily_amplitude = j.value("daily_amplitude", m.daily_amplitude);
  m.weekly_amplitude = j.value("weekly_amplitude", m.weekly_amplitude);
  m.phase = j.value("phase", m.phase);
  m.noise_sigma = j.value("noise_sigma", m.noise_sigma);
  m.noise_decay = j.value("noise_decay", m.noise_decay);
  m.c_max = j.value("c_max", m.c_max);
  m.t3_fraction = j.value("t3_fraction", m.t3_fraction);
  m.t2_fraction = j.value("t2_fraction", m.t2_fraction);
  if (j.contains("square_wave")) {
    const json& w = j.at("square_wave");
    SquareWave sw;
    sw.high = w.at("high").get<double>();
    sw.low = w.at("low").get<double>();
    sw.period = Minutes{w.value("period_minutes", 60)};
    sw.high_fraction = w.value("high_fraction", 0.5);
    m.square_wave = sw;
  }
  return m;
}

PoolSpec parse_pool(const json& j) {
  PoolSpec p;
  InstanceCandidate& c = p.candidate;
  c.pool.instance_type = j.at("instance_type").get<std::string>();
  c.pool.region = j.at("region").get<std::string>();
  c.pool.az = j.at("az").get<std::string>();
  const auto dot = c.pool.instance_type.find('.');
  c.family = j.value("family", c.pool.instance_type.substr(0, dot));
  c.category = j.value("category", std::string("general"));
  c.vcpu = j.at("vcpu").get<int>();
  c.memory_gb = j.value("memory_gb", 4.0 * c.vcpu);
  c.spot_price = j.at("spot_price").get<double>();
  if (j.contains("capacity")) p.capacity = parse_capacity(j.at("capacity"));
  return p;
}

CatalogGenerator parse_generator(const json& j) {
  CatalogGenerator g;
  g.n_types = j.value("n_types", g.n_types);
  if (j.contains("regions")) g.regions = j.at("regions").get<std::vector<std::string>>();
  g.azs_per_region = j.value("azs_per_region", g.azs_per_region);
  if (j.contains("vcpu_choices")) {
    g.vcpu_choices = j.at("vcpu_choices").get<std::vector<int>>();
  }
  if (j.contains("families")) {
    for (const json& f : j.at("families")) {
      g.families.push_back({f.at("name").get<std::string>(),
                            f.value("category", std::string("general")),
                            f.value("memory_per_vcpu", 4.0),
                            f.value("price_per_vcpu", 0.02)});
    }
  }
  g.price_jitter = j.value("price_jitter", g.price_jitter);
  g.base_min = j.value("base_min", g.base_min);
  g.base_max = j.value("base_max", g.base_max);
  g.daily_amplitude_max = j.value("daily_amplitude_max", g.daily_amplitude_max);
  g.weekly_amplitude_max = j.value("weekly_amplitude_max", g.weekly_amplitude_max);
  g.noise_sigma_max = j.value("noise_sigma_max", g.noise_sigma_max);
  g.t3_fraction_min = j.value("t3_fraction_min", g.t3_fraction_min);
  g.t3_fraction_max = j.value("t3_fraction_max", g.t3_fraction_max);
  return g;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    ScenarioConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("start")) cfg.start = parse_rfc3339(j.at("start").get<std::string>());
    if (j.contains("pools")) {
      for (const json& p : j.at("pools")) cfg.pools.push_back(parse_pool(p));
    }
    if (j.contains("catalog")) cfg.generator = parse_generator(j.at("catalog"));
    return cfg;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace spotvista::cloudsim
