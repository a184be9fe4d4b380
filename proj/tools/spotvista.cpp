#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "spotvista/cloudsim.hpp"
#include "spotvista/collector.hpp"
#include "spotvista/error.hpp"
#include "spotvista/evaluation.hpp"
#include "spotvista/recommender.hpp"
#include "spotvista/service.hpp"
#include "spotvista/store.hpp"

namespace sv = spotvista;
namespace fs = std::filesystem;

namespace {

struct ScenarioArgs {
  std::string path;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--scenario", path, "scenario JSON file");
    app->add_option("--seed", seed, "override the scenario seed");
  }

  sv::cloudsim::ScenarioConfig load() const {
    sv::cloudsim::ScenarioConfig cfg;
    if (path.empty()) {
      sv::cloudsim::CatalogGenerator gen;
      gen.n_types = 16;
      cfg.generator = gen;
      cfg.seed = 7;
    } else {
      cfg = sv::cloudsim::load_scenario(path);
    }
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw sv::IoError("cannot write " + path);
  out << text;
}

sv::Minutes hours(double h) {
  return sv::Minutes{static_cast<sv::Minutes::rep>(h * 60.0 + 0.5)};
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_recommendation(const sv::recommender::PoolRecommendation& rec) {
  std::printf("%-16s %-14s %-16s %5s %6s %8s %7s %7s %7s\n", "instance_type", "region",
              "az", "count", "vcpu", "price", "AS", "CS", "S");
  for (const auto& line : rec.allocations) {
    const auto& b = line.breakdown;
    std::printf("%-16s %-14s %-16s %5d %6d %8.4f %7.2f %7.2f %7.2f\n",
                b.candidate.pool.instance_type.c_str(), b.candidate.pool.region.c_str(),
                b.candidate.pool.az.c_str(), line.count, b.candidate.vcpu,
                b.candidate.spot_price, b.as_score, b.cs_score, b.total);
  }
  std::printf("resource %s %s (requested %s), cost %s/h, aggregate score %s, method %s\n",
              fixed(rec.total_resource).c_str(),
              sv::recommender::to_string(rec.dimension).c_str(),
              fixed(rec.requested).c_str(), fixed(rec.total_cost, 4).c_str(),
              fixed(rec.aggregate_score).c_str(), rec.method.c_str());
  for (const auto& d : rec.diagnostics) std::fprintf(stderr, "note: %s\n", d.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spot capacity collection, scoring and pool recommendation"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "dump the latent capacity trace");
  ScenarioArgs sim_args;
  sim_args.add(simulate);
  double sim_hours = 24.0;
  int sim_interval = 10;
  std::string sim_out;
  std::string sim_catalog;
  simulate->add_option("--duration-h", sim_hours, "virtual hours")->check(CLI::PositiveNumber);
  simulate->add_option("--interval-min", sim_interval, "sampling interval")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_out, "trace CSV (stdout when absent)");
  simulate->add_option("--catalog-out", sim_catalog, "also write the catalog");

  // collect
  auto* collect = app.add_subcommand("collect", "collect SPS data into a store directory");
  ScenarioArgs col_args;
  col_args.add(collect);
  sv::collector::CollectorConfig col_cfg;
  std::string strategy = "usqs";
  int interval_min = 10;
  double col_hours = 24.0 * 7;
  std::string col_out;
  bool no_single = false;
  collect->add_option("--strategy", strategy, "usqs | tstp | bs | full_scan");
  collect->add_option("--interval-min", interval_min, "cycle interval")
      ->check(CLI::PositiveNumber);
  collect->add_option("--step", col_cfg.step, "USQS grid step");
  collect->add_option("--tmin", col_cfg.t_min, "smallest searched count");
  collect->add_option("--tmax", col_cfg.t_max, "largest searched count");
  collect->add_option("--early-stop", col_cfg.early_stop, "TSTP early stopping threshold");
  collect->add_option("--duration-h", col_hours, "virtual hours")->check(CLI::PositiveNumber);
  collect->add_option("--out", col_out, "store directory")->required();
  collect->add_flag("--no-single-node", no_single, "leave count 1 out of the USQS grid");

  // recommend
  auto* recommend = app.add_subcommand("recommend", "recommend a spot instance pool");
  sv::recommender::ResourceRequest req;
  std::optional<double> req_vcpu, req_mem;
  std::vector<std::string> families, categories, regions, types;
  std::optional<int> max_types;
  std::string data_dir, catalog_path;
  bool exact = false, as_table = false;
  sv::recommender::IlpConfig ilp;
  auto* vcpu_opt = recommend->add_option("--vcpu", req_vcpu, "required vCPUs");
  auto* mem_opt = recommend->add_option("--memory-gb", req_mem, "required memory");
  vcpu_opt->excludes(mem_opt);
  recommend->add_option("--weight", req.weight, "availability weight W in [0, 1]");
  recommend->add_option("--lambda", req.lambda, "trend / volatility weight");
  recommend->add_option("--family", families, "family filter (repeatable)");
  recommend->add_option("--category", categories, "category filter (repeatable)");
  recommend->add_option("--region", regions, "region filter (repeatable)");
  recommend->add_option("--type", types, "instance type filter (repeatable)");
  recommend->add_option("--max-types", max_types, "keep only the top-ranked types");
  recommend->add_option("--window-days", req.window_days, "scoring window");
  recommend->add_option("--data", data_dir, "store directory")->required();
  recommend->add_option("--catalog", catalog_path, "catalog file (CSV or JSON)")->required();
  recommend->add_flag("--exact", exact, "solve the integer program instead");
  recommend->add_option("--gamma", ilp.gamma, "diversity bonus of the integer program");
  recommend->add_option("--slack", ilp.upper_slack, "allowed over-provisioning");
  recommend->add_flag("--table", as_table, "print a table instead of JSON");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "desk-scale evaluation reports");
  std::string report;
  ScenarioArgs eval_args;
  eval_args.add(evaluate);
  std::string eval_out;
  std::optional<double> eval_hours;
  evaluate->add_option("report", report, "strategies | survival | sweep | validation | tradeoff")
      ->required()
      ->check(CLI::IsMember({"strategies", "survival", "sweep", "validation", "tradeoff"}));
  evaluate->add_option("--out", eval_out, "CSV output (stdout when absent)");
  evaluate->add_option("--duration-h", eval_hours, "virtual hours of collection");
  double tradeoff_vcpu = 64;
  evaluate->add_option("--vcpu", tradeoff_vcpu, "request size for the trade-off report");

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::optional<int> port;
  std::string serve_data, serve_catalog, host = "0.0.0.0";
  serve->add_option("--port", port, "listen port");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--data", serve_data, "store directory");
  serve->add_option("--catalog", serve_catalog, "catalog file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      sv::cloudsim::Simulator sim(sim_args.load());
      std::ostringstream os;
      os << "ts,instance_type,region,az,capacity,t3,t2\n";
      const auto step = sv::Minutes{sim_interval};
      for (sv::Minutes t{0}; t < hours(sim_hours); t += step) {
        for (const auto& c : sim.catalog()) {
          const auto s = sim.latent(c.pool);
          os << sv::format_rfc3339(sim.now()) << ',' << c.pool.instance_type << ','
             << c.pool.region << ',' << c.pool.az << ',' << fixed(s.capacity) << ','
             << s.t3 << ',' << s.t2 << '\n';
        }
        sim.advance_time(step);
      }
      write_text(sim_out, os.str());
      if (!sim_catalog.empty()) sv::store::write_catalog(sim_catalog, sim.catalog());
      return 0;
    }

    if (*collect) {
      col_cfg.strategy = sv::strategy_from_string(strategy);
      col_cfg.interval = sv::Minutes{interval_min};
      col_cfg.include_single_node = !no_single;
      sv::cloudsim::Simulator sim(col_args.load());
      fs::create_directories(col_out);
      sv::store::write_catalog(fs::path(col_out) / "catalog.csv", sim.catalog());
      sv::store::Store store{fs::path(col_out)};
      std::vector<sv::PoolKey> keys;
      for (const auto& c : sim.catalog()) keys.push_back(c.pool);
      sv::collector::Collector col(col_cfg, keys);
      std::size_t queries = 0, skipped = 0, cycles = 0;
      col.run(sim, hours(col_hours), [&](const sv::collector::CycleOutput& out) {
        for (const auto& o : out.observations) store.append(o);
        for (const auto& t : out.transitions) store.append(t);
        queries += out.observations.size();
        skipped += out.skipped;
        ++cycles;
      });
      std::printf("%zu cycles, %zu pools, %zu accounts, %zu queries, %zu skipped\n", cycles,
                  keys.size(), col.account_count(), queries, skipped);
      std::printf("catalog: %s\n", (fs::path(col_out) / "catalog.csv").c_str());
      return 0;
    }

    if (*recommend) {
      if (req_vcpu) {
        req.dimension = sv::recommender::Dimension::kVcpu;
        req.amount = *req_vcpu;
      } else if (req_mem) {
        req.dimension = sv::recommender::Dimension::kMemoryGb;
        req.amount = *req_mem;
      } else {
        throw sv::InvalidArgument("give --vcpu or --memory-gb");
      }
      req.filters.families = {families.begin(), families.end()};
      req.filters.categories = {categories.begin(), categories.end()};
      req.filters.regions = {regions.begin(), regions.end()};
      req.filters.instance_types = {types.begin(), types.end()};
      req.max_types = max_types;
      const sv::store::Store store{fs::path(data_dir)};
      const auto catalog = sv::store::read_catalog(catalog_path);
      sv::recommender::RecommendOptions opts;
      opts.exact = exact;
      opts.ilp = ilp;
      const auto rec = sv::recommender::recommend(req, store, catalog, opts);
      if (as_table) {
        print_recommendation(rec);
      } else {
        std::cout << sv::service::render_recommendation(rec) << '\n';
      }
      return 0;
    }

    if (*evaluate) {
      const auto scenario = eval_args.load();
      std::string csv;
      if (report == "strategies") {
        sv::evaluation::StrategyReportConfig cfg;
        cfg.scenario = scenario;
        if (eval_hours) cfg.duration = hours(*eval_hours);
        const auto rows = sv::evaluation::strategy_report(cfg);
        csv = sv::evaluation::format_strategy_csv(rows);
      } else if (report == "sweep") {
        sv::evaluation::SweepConfig cfg;
        cfg.scenario = scenario;
        if (eval_hours) cfg.duration = hours(*eval_hours);
        const auto rows = sv::evaluation::step_size_sweep(cfg);
        csv = sv::evaluation::format_sweep_csv(rows);
        const auto& best = sv::evaluation::best_step(rows);
        std::fprintf(stderr, "lowest MAE %.4f at step %d\n", best.t3_mae, best.step);
      } else if (report == "survival") {
        sv::evaluation::SurvivalConfig cfg;
        cfg.scenario = scenario;
        if (eval_hours) cfg.history.duration = hours(*eval_hours);
        csv = sv::evaluation::format_survival_csv(sv::evaluation::survival_campaign(cfg));
      } else if (report == "validation") {
        sv::evaluation::ValidationConfig cfg;
        cfg.scenario = scenario;
        if (eval_hours) cfg.history.duration = hours(*eval_hours);
        const auto rep = sv::evaluation::validation_report(cfg);
        csv = sv::evaluation::format_validation_csv(rep);
        for (const auto& [bin, mean] : rep.mean_real_availability) {
          std::fprintf(stderr, "%s: mean real availability %.2f\n",
                       sv::evaluation::to_string(bin).c_str(), mean);
        }
      } else {
        sv::evaluation::TradeoffConfig cfg;
        cfg.scenario = scenario;
        cfg.request.amount = tradeoff_vcpu;
        if (eval_hours) cfg.history.duration = hours(*eval_hours);
        const auto rows = sv::evaluation::weight_tradeoff(cfg);
        csv = sv::evaluation::format_tradeoff_csv(rows);
      }
      write_text(eval_out, csv);
      return 0;
    }

    if (*serve) {
      sv::service::ServerConfig cfg = sv::service::config_from_env({});
      if (port) cfg.port = *port;
      if (!serve_data.empty()) cfg.data_dir = serve_data;
      if (!serve_catalog.empty()) cfg.catalog = serve_catalog;
      cfg.host = host;
      auto service = sv::service::make_service(cfg);
      sv::service::HttpServer server(*service);
      std::fprintf(stderr, "listening on %s:%d\n", cfg.host.c_str(), cfg.port);
      server.listen(cfg.host, cfg.port);
      return 0;
    }
  } catch (const sv::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(sv::to_string(e.code())).c_str(),
                 e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
