#include <charconv>
#include <cstdio>

#include "spotvista/error.hpp"
#include "spotvista/records.hpp"
#include "spotvista/time.hpp"
#include "spotvista/types.hpp"

namespace spotvista {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kQuotaExceeded: return "QuotaExceeded";
    case ErrorCode::kUnknownPool: return "UnknownPool";
    case ErrorCode::kInconsistentProfile: return "InconsistentProfile";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidRecord: return "InvalidRecord";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kNoPositiveScoreCandidate: return "NoPositiveScoreCandidate";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kTooManyCandidates: return "TooManyCandidates";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
  }
  return "Unknown";
}

std::string format_rfc3339(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw InvalidArgument("truncated timestamp: " + std::string(text));
  }
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw InvalidArgument("bad timestamp: " + std::string(text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || (text[pos] != c && !(c == 'T' && text[pos] == 't'))) {
    throw InvalidArgument("bad timestamp: " + std::string(text));
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  const int y = parse_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = parse_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_digits(text, 8, 2);
  expect_char(text, 10, 'T');
  const int h = parse_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mi = parse_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int s = parse_digits(text, 17, 2);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  if (pos >= text.size()) {
    throw InvalidArgument("timestamp without zone: " + std::string(text));
  }
  seconds offset{0};
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = parse_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ':');
    const int om = parse_digits(text, pos + 4, 2);
    offset = seconds{sign * (oh * 3600 + om * 60)};
    pos += 6;
  } else {
    throw InvalidArgument("bad timestamp zone: " + std::string(text));
  }
  if (pos != text.size()) {
    throw InvalidArgument("trailing characters in timestamp: " + std::string(text));
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw InvalidArgument("timestamp out of range: " + std::string(text));
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - offset;
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour,
                         unsigned minute, unsigned second) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date");
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

double to_hours(std::chrono::seconds d) {
  return static_cast<double>(d.count()) / 3600.0;
}

SpsValue SpsValue::from_int(int v) {
  if (v < 1 || v > 3) {
    throw InvalidArgument("SPS must be 1, 2 or 3, got " + std::to_string(v));
  }
  return SpsValue(v);
}

void InstanceCandidate::validate() const {
  if (!pool.valid()) throw InvalidArgument("pool key fields must be non-empty");
  if (vcpu < 1) throw InvalidArgument("vcpu must be >= 1 for " + pool.to_string());
  if (!(memory_gb >= 0.5)) {
    throw InvalidArgument("memory_gb must be >= 0.5 for " + pool.to_string());
  }
  if (!(spot_price > 0.0)) {
    throw InvalidArgument("spot_price must be > 0 for " + pool.to_string());
  }
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kFullScan: return "full_scan";
    case Strategy::kBinarySearch: return "bs";
    case Strategy::kTstp: return "tstp";
    case Strategy::kUsqs: return "usqs";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "full_scan") return Strategy::kFullScan;
  if (s == "bs" || s == "binary_search") return Strategy::kBinarySearch;
  if (s == "tstp") return Strategy::kTstp;
  if (s == "usqs") return Strategy::kUsqs;
  throw InvalidArgument("unknown strategy '" + s + "'");
}

void SpsObservation::validate() const {
  if (!key.valid()) throw InvalidRecord("observation with incomplete pool key");
  if (node_count < 1 || node_count > kMaxNodeCount) {
    throw InvalidRecord("observation node count out of range: " +
                        std::to_string(node_count));
  }
}

void TransitionRecord::validate() const {
  if (!key.valid()) throw InvalidRecord("transition with incomplete pool key");
  if (t3 < 0 || t2 > kMaxNodeCount || t3 > t2) {
    throw InvalidRecord("transition violates 0 <= t3 <= t2 <= 50: t3=" +
                        std::to_string(t3) + " t2=" + std::to_string(t2));
  }
  if (queries_used < 0) throw InvalidRecord("negative query count");
}

}  // namespace spotvista
