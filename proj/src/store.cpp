#include "spotvista/store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "spotvista/error.hpp"

namespace spotvista::store {

namespace fs = std::filesystem;
using nlohmann::json;

std::string snapshot_filename(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u-%02d%02d.jsonl",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()));
  return buf;
}

std::string to_jsonl(const SpsObservation& rec) {
  json j{{"ts", format_rfc3339(rec.timestamp)},
         {"type", rec.key.instance_type},
         {"region", rec.key.region},
         {"az", rec.key.az},
         {"n", rec.node_count},
         {"sps", rec.sps.value()},
         {"account", rec.account},
         {"strategy", to_string(rec.strategy)}};
  return j.dump();
}

std::string to_jsonl(const TransitionRecord& rec) {
  json j{{"ts", format_rfc3339(rec.timestamp)},
         {"type", rec.key.instance_type},
         {"region", rec.key.region},
         {"az", rec.key.az},
         {"t3", rec.t3},
         {"t2", rec.t2},
         {"method", to_string(rec.method)},
         {"queries", rec.queries_used}};
  return j.dump();
}

namespace {

PoolKey key_of(const json& j) {
  return {j.at("type").get<std::string>(), j.at("region").get<std::string>(),
          j.at("az").get<std::string>()};
}

template <typename Fn>
auto parse_record(std::string_view line, Fn&& build) {
  try {
    const json j = json::parse(line);
    auto rec = build(j);
    rec.validate();
    return rec;
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("malformed record: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidRecord(std::string("malformed record: ") + e.what());
  }
}

}  // namespace

SpsObservation parse_observation(std::string_view line) {
  return parse_record(line, [](const json& j) {
    SpsObservation rec;
    rec.timestamp = parse_rfc3339(j.at("ts").get<std::string>());
    rec.key = key_of(j);
    rec.node_count = j.at("n").get<int>();
    rec.sps = SpsValue::from_int(j.at("sps").get<int>());
    rec.account = j.value("account", std::string());
    rec.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    return rec;
  });
}

TransitionRecord parse_transition(std::string_view line) {
  return parse_record(line, [](const json& j) {
    TransitionRecord rec;
    rec.timestamp = parse_rfc3339(j.at("ts").get<std::string>());
    rec.key = key_of(j);
    rec.t3 = j.at("t3").get<int>();
    rec.t2 = j.at("t2").get<int>();
    rec.method = strategy_from_string(j.at("method").get<std::string>());
    rec.queries_used = j.value("queries", 0);
    return rec;
  });
}

// ---------------------------------------------------------------------------

namespace {

std::vector<fs::path> sorted_snapshots(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

template <typename Fn>
void for_each_line(const fs::path& file, Fn&& fn) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) fn(line);
  }
}

}  // namespace

Store::Store(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(*dir_ / "transitions", ec);
  fs::create_directories(*dir_ / "observations", ec);
  if (ec) throw IoError("cannot create store directory " + dir_->string());
  for (const fs::path& f : sorted_snapshots(*dir_ / "transitions")) {
    for_each_line(f, [&](const std::string& line) { index(parse_transition(line)); });
  }
  for (const fs::path& f : sorted_snapshots(*dir_ / "observations")) {
    for_each_line(f, [&](const std::string& line) {
      SpsObservation rec = parse_observation(line);
      if (!latest_ || *latest_ < rec.timestamp) latest_ = rec.timestamp;
      observations_[rec.key].push_back(std::move(rec));
      ++observation_count_;
    });
  }
}

void Store::index(const TransitionRecord& rec) {
  rec.validate();
  auto& series = transitions_[rec.key];
  if (!series.empty() && series.back().timestamp >= rec.timestamp) {
    throw InvalidRecord("transition for " + rec.key.to_string() +
                        " is not newer than the previous one");
  }
  series.push_back(rec);
  if (!latest_ || *latest_ < rec.timestamp) latest_ = rec.timestamp;
  ++transition_count_;
}

void Store::write_line(const char* kind, Timestamp ts, const std::string& line) {
  if (!dir_) return;
  const fs::path path = *dir_ / kind / snapshot_filename(ts);
  OpenFile& f = open_files_[kind];
  if (f.path != path) {
    f.stream.close();
    f.stream.clear();
    f.stream.open(path, std::ios::app);
    f.path = path;
  }
  f.stream << line << '\n';
  f.stream.flush();
  if (!f.stream) throw IoError("failed writing " + path.string());
}

void Store::append(const SpsObservation& rec) {
  rec.validate();
  std::unique_lock lock(mutex_);
  write_line("observations", rec.timestamp, to_jsonl(rec));
  if (!latest_ || *latest_ < rec.timestamp) latest_ = rec.timestamp;
  observations_[rec.key].push_back(rec);
  ++observation_count_;
}

void Store::append(const TransitionRecord& rec) {
  rec.validate();
  std::unique_lock lock(mutex_);
  auto it = transitions_.find(rec.key);
  if (it != transitions_.end() && !it->second.empty() &&
      it->second.back().timestamp >= rec.timestamp) {
    throw InvalidRecord("transition for " + rec.key.to_string() +
                        " is not newer than the previous one");
  }
  write_line("transitions", rec.timestamp, to_jsonl(rec));
  index(rec);
}

namespace {

void check_range(Timestamp from, Timestamp to) {
  if (!(from < to)) throw InvalidArgument("window requires from < to");
}

template <typename Record>
std::vector<Record> slice(const std::vector<Record>& records, Timestamp from,
                          Timestamp to) {
  std::vector<Record> out;
  for (const Record& r : records) {
    if (r.timestamp >= from && r.timestamp < to) out.push_back(r);
  }
  return out;
}

}  // namespace

SeriesWindow Store::window(const PoolKey& key, Timestamp from, Timestamp to) const {
  check_range(from, to);
  SeriesWindow w{key, from, to, {}};
  std::shared_lock lock(mutex_);
  auto it = transitions_.find(key);
  if (it == transitions_.end()) return w;
  const auto& series = it->second;
  auto first = std::lower_bound(series.begin(), series.end(), from,
                                [](const TransitionRecord& r, Timestamp t) {
                                  return r.timestamp < t;
                                });
  for (; first != series.end() && first->timestamp < to; ++first) {
    w.samples.push_back({first->timestamp, first->t3});
  }
  return w;
}

std::vector<TransitionRecord> Store::transitions(const PoolKey& key, Timestamp from,
                                                 Timestamp to) const {
  check_range(from, to);
  std::shared_lock lock(mutex_);
  auto it = transitions_.find(key);
  return it == transitions_.end() ? std::vector<TransitionRecord>{}
                                  : slice(it->second, from, to);
}

std::vector<SpsObservation> Store::observations(const PoolKey& key, Timestamp from,
                                                Timestamp to) const {
  check_range(from, to);
  std::shared_lock lock(mutex_);
  auto it = observations_.find(key);
  return it == observations_.end() ? std::vector<SpsObservation>{}
                                   : slice(it->second, from, to);
}

std::vector<PoolKey> Store::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<PoolKey> out;
  for (const auto& [k, _] : transitions_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Timestamp> Store::latest_timestamp() const {
  std::shared_lock lock(mutex_);
  return latest_;
}

std::size_t Store::transition_count() const {
  std::shared_lock lock(mutex_);
  return transition_count_;
}

std::size_t Store::observation_count() const {
  std::shared_lock lock(mutex_);
  return observation_count_;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCatalogHeader =
    "instance_type,family,category,vcpu,memory_gb,region,az,spot_price";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidRecord("catalog line " + std::to_string(line_no) +
                        ": bad number '" + std::string(text) + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<InstanceCandidate> parse_catalog_csv(std::string_view text) {
  std::vector<InstanceCandidate> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCatalogHeader) {
        throw InvalidRecord("catalog header must be '" + std::string(kCatalogHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw InvalidRecord("catalog line " + std::to_string(line_no) +
                          ": expected 8 fields");
    }
    InstanceCandidate c;
    c.pool.instance_type = std::string(trim(f[0]));
    c.family = std::string(trim(f[1]));
    c.category = std::string(trim(f[2]));
    c.vcpu = parse_number<int>(trim(f[3]), line_no);
    c.memory_gb = parse_number<double>(trim(f[4]), line_no);
    c.pool.region = std::string(trim(f[5]));
    c.pool.az = std::string(trim(f[6]));
    c.spot_price = parse_number<double>(trim(f[7]), line_no);
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidRecord("catalog line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<InstanceCandidate> parse_catalog_json(std::string_view text) {
  std::vector<InstanceCandidate> out;
  try {
    for (const json& j : json::parse(text)) {
      InstanceCandidate c;
      c.pool.instance_type = j.at("instance_type").get<std::string>();
      c.family = j.at("family").get<std::string>();
      c.category = j.at("category").get<std::string>();
      c.vcpu = j.at("vcpu").get<int>();
      c.memory_gb = j.at("memory_gb").get<double>();
      c.pool.region = j.at("region").get<std::string>();
      c.pool.az = j.at("az").get<std::string>();
      c.spot_price = j.at("spot_price").get<double>();
      c.validate();
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("malformed catalog: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidRecord(std::string("malformed catalog: ") + e.what());
  }
  return out;
}

std::string format_catalog_csv(const std::vector<InstanceCandidate>& catalog) {
  std::string out(kCatalogHeader);
  out += '\n';
  for (const InstanceCandidate& c : catalog) {
    out += c.pool.instance_type + ',' + c.family + ',' + c.category + ',' +
           std::to_string(c.vcpu) + ',' + format_double(c.memory_gb) + ',' +
           c.pool.region + ',' + c.pool.az + ',' + format_double(c.spot_price) + '\n';
  }
  return out;
}

std::vector<InstanceCandidate> read_catalog(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") return parse_catalog_json(text);
  return parse_catalog_csv(text);
}

void write_catalog(const fs::path& path, const std::vector<InstanceCandidate>& catalog) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write catalog " + path.string());
  if (path.extension() == ".json") {
    json arr = json::array();
    for (const InstanceCandidate& c : catalog) {
      arr.push_back({{"instance_type", c.pool.instance_type},
                     {"family", c.family},
                     {"category", c.category},
                     {"vcpu", c.vcpu},
                     {"memory_gb", c.memory_gb},
                     {"region", c.pool.region},
                     {"az", c.pool.az},
                     {"spot_price", c.spot_price}});
    }
    out << arr.dump(2) << '\n';
  } else {
    out << format_catalog_csv(catalog);
  }
  if (!out) throw IoError("failed writing catalog " + path.string());
}

}  // namespace spotvista::store
