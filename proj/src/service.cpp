#include "spotvista/service.hpp"

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>

#include "spotvista/error.hpp"

namespace spotvista::service {

using nlohmann::json;

namespace {

Response json_response(int status, const json& j) { return {status, j.dump(), "application/json"}; }

std::set<std::string> string_set(const json& j, const char* field) {
  std::set<std::string> out;
  if (!j.contains(field)) return out;
  const json& v = j.at(field);
  if (v.is_string()) {
    out.insert(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_string()) throw InvalidArgument(std::string(field) + " must hold strings");
      out.insert(e.get<std::string>());
    }
  } else {
    throw InvalidArgument(std::string(field) + " must be a string or list of strings");
  }
  return out;
}

double number(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_number()) throw InvalidArgument(std::string(field) + " must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_number_integer()) throw InvalidArgument(std::string(field) + " must be an integer");
  return v.get<int>();
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidRecord:
    case ErrorCode::kInfeasible:
    case ErrorCode::kTooManyCandidates:
      return 400;
    case ErrorCode::kNoCandidates:
    case ErrorCode::kNoPositiveScoreCandidate:
      return 404;
    default:
      return 500;
  }
}

json candidate_json(const InstanceCandidate& c) {
  return {{"instance_type", c.pool.instance_type},
          {"region", c.pool.region},
          {"az", c.pool.az},
          {"family", c.family},
          {"category", c.category},
          {"vcpu", c.vcpu},
          {"memory_gb", c.memory_gb},
          {"spot_price", c.spot_price}};
}

}  // namespace

Response error_response(int status, std::string_view code, std::string_view detail) {
  return json_response(status, {{"error", code}, {"detail", detail}});
}

std::pair<recommender::ResourceRequest, recommender::RecommendOptions>
parse_recommend_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("body must be a JSON object");

  recommender::ResourceRequest req;
  recommender::RecommendOptions opts;
  const int given = static_cast<int>(j.contains("vcpu")) +
                    static_cast<int>(j.contains("memory_gb")) +
                    static_cast<int>(j.contains("amount"));
  if (given != 1) {
    throw InvalidArgument("give exactly one of vcpu, memory_gb or dimension+amount");
  }
  if (j.contains("vcpu")) {
    req.dimension = recommender::Dimension::kVcpu;
    req.amount = number(j, "vcpu");
  } else if (j.contains("memory_gb")) {
    req.dimension = recommender::Dimension::kMemoryGb;
    req.amount = number(j, "memory_gb");
  } else {
    if (!j.contains("dimension") || !j.at("dimension").is_string()) {
      throw InvalidArgument("amount needs a dimension");
    }
    req.dimension = recommender::dimension_from_string(j.at("dimension").get<std::string>());
    req.amount = number(j, "amount");
  }
  for (const char* w : {"weight", "W", "weight_W"}) {
    if (j.contains(w)) req.weight = number(j, w);
  }
  if (j.contains("filters")) {
    const json& f = j.at("filters");
    if (!f.is_object()) throw InvalidArgument("filters must be an object");
    req.filters.families = string_set(f, "families");
    req.filters.categories = string_set(f, "categories");
    req.filters.regions = string_set(f, "regions");
    req.filters.instance_types = string_set(f, "instance_types");
  }
  if (j.contains("max_types") && !j.at("max_types").is_null()) {
    req.max_types = integer(j, "max_types");
  }
  if (j.contains("window_days")) req.window_days = integer(j, "window_days");
  if (j.contains("lambda")) req.lambda = number(j, "lambda");
  if (j.contains("as_of")) {
    if (!j.at("as_of").is_string()) throw InvalidArgument("as_of must be an RFC 3339 string");
    req.as_of = parse_rfc3339(j.at("as_of").get<std::string>());
  }
  if (j.contains("exact")) {
    if (!j.at("exact").is_boolean()) throw InvalidArgument("exact must be a boolean");
    opts.exact = j.at("exact").get<bool>();
  }
  if (j.contains("gamma")) opts.ilp.gamma = number(j, "gamma");
  if (j.contains("upper_slack")) opts.ilp.upper_slack = integer(j, "upper_slack");
  req.validate();
  return {req, opts};
}

std::string render_recommendation(const recommender::PoolRecommendation& rec) {
  json allocations = json::array();
  for (const auto& line : rec.allocations) {
    const auto& b = line.breakdown;
    allocations.push_back({{"instance_type", b.candidate.pool.instance_type},
                           {"region", b.candidate.pool.region},
                           {"az", b.candidate.pool.az},
                           {"family", b.candidate.family},
                           {"category", b.candidate.category},
                           {"count", line.count},
                           {"vcpu", b.candidate.vcpu},
                           {"memory_gb", b.candidate.memory_gb},
                           {"price", b.candidate.spot_price},
                           {"n_required", b.n_required},
                           {"pool_cost", b.pool_cost},
                           {"a3", b.a3},
                           {"as_score", b.as_score},
                           {"cs_score", b.cs_score},
                           {"total_score", b.total}});
  }
  json out{{"allocations", allocations},
           {"totals",
            {{"resource", rec.total_resource},
             {"cost_per_hour", rec.total_cost},
             {"aggregate_score", rec.aggregate_score},
             {"objective", rec.objective}}},
           {"context",
            {{"W", rec.weight},
             {"lambda", rec.lambda},
             {"dimension", recommender::to_string(rec.dimension)},
             {"requested", rec.requested},
             {"method", rec.method},
             {"window",
              {{"from", format_rfc3339(rec.window_from)},
               {"to", format_rfc3339(rec.window_to)}}}}},
           {"diagnostics", rec.diagnostics}};
  return out.dump();
}

DirectorySnapshots::DirectorySnapshots(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string DirectorySnapshots::signature() const {
  std::string sig;
  std::error_code ec;
  for (const char* sub : {"transitions", "observations"}) {
    const auto d = dir_ / sub;
    if (!std::filesystem::is_directory(d, ec)) continue;
    std::vector<std::string> parts;
    for (const auto& e : std::filesystem::directory_iterator(d, ec)) {
      if (!e.is_regular_file(ec)) continue;
      parts.push_back(e.path().filename().string() + ":" +
                      std::to_string(e.file_size(ec)));
    }
    std::sort(parts.begin(), parts.end());
    for (const auto& p : parts) sig += p + ";";
  }
  return sig;
}

std::shared_ptr<const store::Store> DirectorySnapshots::current() {
  std::lock_guard lock(mutex_);
  std::string sig = signature();
  if (!store_ || sig != signature_) {
    store_ = std::make_shared<const store::Store>(dir_);
    signature_ = std::move(sig);
  }
  return store_;
}

Service::Service(StoreProvider store, std::optional<std::vector<InstanceCandidate>> catalog,
                 std::string catalog_error)
    : store_(std::move(store)),
      catalog_(std::move(catalog)),
      catalog_error_(std::move(catalog_error)) {}

Response Service::handle(std::string_view method, std::string_view path, const Query& query,
                         std::string_view body) const {
  try {
    if (method == "GET" && path == "/health") return health();
    if (method == "GET" && path == "/catalog") return catalog();
    if (method == "POST" && path == "/recommend") return recommend(body);
    constexpr std::string_view kSeries = "/timeseries/";
    if (method == "GET" && path.starts_with(kSeries)) {
      return timeseries(path.substr(kSeries.size()), query);
    }
    if (path == "/health" || path == "/catalog" || path == "/recommend" ||
        path.starts_with(kSeries)) {
      return error_response(405, "method_not_allowed", std::string(method) + " " +
                                                          std::string(path));
    }
    return error_response(404, "not_found", std::string(path));
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response Service::recommend(std::string_view body) const {
  if (!catalog_) return error_response(500, to_string(ErrorCode::kIo), catalog_error_);
  auto [req, opts] = parse_recommend_body(body);
  const auto snapshot = store_();
  const auto rec = recommender::recommend(req, *snapshot, *catalog_, opts);
  return {200, render_recommendation(rec), "application/json"};
}

Response Service::timeseries(std::string_view tail, const Query& query) const {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= tail.size()) {
    const auto slash = tail.find('/', pos);
    const auto end = slash == std::string_view::npos ? tail.size() : slash;
    parts.emplace_back(tail.substr(pos, end - pos));
    pos = end + 1;
  }
  if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
    throw InvalidArgument("expected /timeseries/{type}/{region}/{az}");
  }
  const PoolKey key{parts[0], parts[1], parts[2]};
  const auto snapshot = store_();

  std::optional<Timestamp> from, to;
  if (auto it = query.find("from"); it != query.end()) from = parse_rfc3339(it->second);
  if (auto it = query.find("to"); it != query.end()) to = parse_rfc3339(it->second);
  if (!to) {
    const auto latest = snapshot->latest_timestamp();
    to = latest ? *latest + std::chrono::seconds(1) : from.value_or(Timestamp{}) + kWeek;
  }
  if (!from) from = *to - kWeek;
  if (!(*from < *to)) throw InvalidArgument("need from < to");

  json out = json::array();
  for (const auto& r : snapshot->transitions(key, *from, *to)) {
    out.push_back({{"ts", format_rfc3339(r.timestamp)}, {"t3", r.t3}, {"t2", r.t2}});
  }
  return json_response(200, out);
}

Response Service::catalog() const {
  if (!catalog_) return error_response(500, to_string(ErrorCode::kIo), catalog_error_);
  json out = json::array();
  for (const auto& c : *catalog_) out.push_back(candidate_json(c));
  return json_response(200, out);
}

Response Service::health() const {
  return json_response(200, {{"status", "ok"}, {"version", kVersion}});
}

ServerConfig config_from_env(ServerConfig defaults) {
  if (const char* v = std::getenv("SPOTVISTA_DATA_DIR"); v && *v) defaults.data_dir = v;
  if (const char* v = std::getenv("SPOTVISTA_CATALOG"); v && *v) defaults.catalog = v;
  if (const char* v = std::getenv("SPOTVISTA_PORT"); v && *v) {
    try {
      defaults.port = std::stoi(v);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("SPOTVISTA_PORT is not a number: ") + v);
    }
  }
  return defaults;
}

std::unique_ptr<Service> make_service(const ServerConfig& config) {
  StoreProvider provider;
  if (config.data_dir) {
    auto snapshots = std::make_shared<DirectorySnapshots>(*config.data_dir);
    provider = [snapshots] { return snapshots->current(); };
  } else {
    auto empty = std::make_shared<const store::Store>();
    provider = [empty] { return empty; };
  }
  std::optional<std::vector<InstanceCandidate>> catalog;
  std::string catalog_error = "no catalog configured";
  if (config.catalog) {
    try {
      catalog = store::read_catalog(*config.catalog);
    } catch (const Error& e) {
      catalog_error = e.what();
    }
  }
  return std::make_unique<Service>(std::move(provider), std::move(catalog), catalog_error);
}

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;

  explicit Impl(const Service& s) : service(s) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      Query query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const Response r = service.handle(req.method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
  }
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace spotvista::service
