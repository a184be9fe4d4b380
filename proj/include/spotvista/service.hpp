#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "spotvista/recommender.hpp"
#include "spotvista/store.hpp"
#include "spotvista/types.hpp"

namespace spotvista::service {

inline constexpr std::string_view kVersion = "0.1.0";

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using Query = std::map<std::string, std::string>;
using StoreProvider = std::function<std::shared_ptr<const store::Store>()>;

// Re-reads a store directory when its files change, otherwise hands out the
// same immutable snapshot. Thread-safe.
class DirectorySnapshots {
 public:
  explicit DirectorySnapshots(std::filesystem::path dir);
  std::shared_ptr<const store::Store> current();

 private:
  std::string signature() const;

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::string signature_;
  std::shared_ptr<const store::Store> store_;
};

// Request handling without any transport. Every call reads one store
// snapshot and keeps no state between calls.
class Service {
 public:
  // A missing catalog makes /catalog and /recommend answer 500.
  Service(StoreProvider store, std::optional<std::vector<InstanceCandidate>> catalog,
          std::string catalog_error = "catalog not loaded");

  Response handle(std::string_view method, std::string_view path, const Query& query,
                  std::string_view body) const;

  Response recommend(std::string_view body) const;
  Response timeseries(std::string_view path_tail, const Query& query) const;
  Response catalog() const;
  Response health() const;

 private:
  StoreProvider store_;
  std::optional<std::vector<InstanceCandidate>> catalog_;
  std::string catalog_error_;
};

// Parses a /recommend body into a request plus solver options. Accepts
// {"vcpu": N} or {"memory_gb": N} as a shortcut for dimension and amount.
// Throws InvalidArgument.
std::pair<recommender::ResourceRequest, recommender::RecommendOptions>
parse_recommend_body(std::string_view body);

std::string render_recommendation(const recommender::PoolRecommendation& rec);

// {"error": code, "detail": message}
Response error_response(int status, std::string_view code, std::string_view detail);

struct ServerConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> catalog;
};

// SPOTVISTA_DATA_DIR, SPOTVISTA_CATALOG and SPOTVISTA_PORT override the
// given defaults.
ServerConfig config_from_env(ServerConfig defaults);

std::unique_ptr<Service> make_service(const ServerConfig& config);

// HTTP transport with CORS headers. Port 0 binds an ephemeral port.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace spotvista::service
