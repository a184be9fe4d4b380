#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spotvista/records.hpp"
#include "spotvista/time.hpp"
#include "spotvista/types.hpp"

namespace spotvista::store {

struct SeriesPoint {
  Timestamp timestamp;
  int t3 = 0;
  bool operator==(const SeriesPoint&) const = default;
};

// T3 samples of one pool in [from, to), strictly increasing in time.
struct SeriesWindow {
  PoolKey key;
  Timestamp from;
  Timestamp to;
  std::vector<SeriesPoint> samples;
};

// "YYYY-MM-DD-HHMM.jsonl" in UTC.
std::string snapshot_filename(Timestamp ts);

std::string to_jsonl(const SpsObservation& rec);
std::string to_jsonl(const TransitionRecord& rec);
SpsObservation parse_observation(std::string_view line);  // throws InvalidRecord
TransitionRecord parse_transition(std::string_view line);  // throws InvalidRecord

// Append-only record log with per-pool indexes. With a directory, every
// record is also written to <dir>/{observations,transitions}/<snapshot>.jsonl
// where the snapshot name comes from the record's timestamp. Single writer,
// many readers.
class Store {
 public:
  Store() = default;
  explicit Store(std::filesystem::path dir);

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Validates, then appends. Transitions of one pool must arrive in
  // strictly increasing time order. Throws InvalidRecord or IoError.
  void append(const SpsObservation& rec);
  void append(const TransitionRecord& rec);

  // Unknown keys yield an empty window. Throws InvalidArgument unless
  // from < to.
  SeriesWindow window(const PoolKey& key, Timestamp from, Timestamp to) const;
  std::vector<TransitionRecord> transitions(const PoolKey& key, Timestamp from,
                                            Timestamp to) const;
  std::vector<SpsObservation> observations(const PoolKey& key, Timestamp from,
                                           Timestamp to) const;

  std::vector<PoolKey> keys() const;
  std::optional<Timestamp> latest_timestamp() const;
  std::size_t transition_count() const;
  std::size_t observation_count() const;
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

 private:
  void index(const TransitionRecord& rec);
  void write_line(const char* kind, Timestamp ts, const std::string& line);

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<PoolKey, std::vector<TransitionRecord>, PoolKeyHash> transitions_;
  std::unordered_map<PoolKey, std::vector<SpsObservation>, PoolKeyHash> observations_;
  std::optional<Timestamp> latest_;
  std::size_t transition_count_ = 0;
  std::size_t observation_count_ = 0;

  struct OpenFile {
    std::filesystem::path path;
    std::ofstream stream;
  };
  std::unordered_map<std::string, OpenFile> open_files_;
};

// Catalog file: CSV with header
//   instance_type,family,category,vcpu,memory_gb,region,az,spot_price
// or a JSON array of objects with the same field names.
std::vector<InstanceCandidate> read_catalog(const std::filesystem::path& path);
std::vector<InstanceCandidate> parse_catalog_csv(std::string_view text);
std::vector<InstanceCandidate> parse_catalog_json(std::string_view text);
std::string format_catalog_csv(const std::vector<InstanceCandidate>& catalog);
void write_catalog(const std::filesystem::path& path,
                   const std::vector<InstanceCandidate>& catalog);

}  // namespace spotvista::store
