#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "spotvista/time.hpp"

namespace spotvista {

// SPS queries accept node counts in [1, kMaxNodeCount].
inline constexpr int kMaxNodeCount = 50;

// One shared capacity process: an instance type in one availability zone.
struct PoolKey {
  std::string instance_type;
  std::string region;
  std::string az;

  bool valid() const {
    return !instance_type.empty() && !region.empty() && !az.empty();
  }
  std::string to_string() const {
    return instance_type + "/" + region + "/" + az;
  }
  auto operator<=>(const PoolKey&) const = default;
  bool operator==(const PoolKey&) const = default;
};

struct PoolKeyHash {
  std::size_t operator()(const PoolKey& k) const noexcept {
    std::hash<std::string> h;
    std::size_t seed = h(k.instance_type);
    seed ^= h(k.region) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    seed ^= h(k.az) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
  }
};

// Spot placement score: 1 (low), 2 (medium), 3 (high).
class SpsValue {
 public:
  static SpsValue from_int(int v);  // throws InvalidArgument outside 1..3
  static constexpr SpsValue low() { return SpsValue(1); }
  static constexpr SpsValue medium() { return SpsValue(2); }
  static constexpr SpsValue high() { return SpsValue(3); }

  constexpr int value() const { return value_; }
  auto operator<=>(const SpsValue&) const = default;

 private:
  constexpr explicit SpsValue(int v) : value_(v) {}
  int value_;
};

struct InstanceCandidate {
  PoolKey pool;
  std::string family;
  std::string category;
  int vcpu = 1;
  double memory_gb = 0.5;
  double spot_price = 0.0;  // currency per hour per node

  // Throws InvalidArgument on a violated invariant.
  void validate() const;
  bool operator==(const InstanceCandidate&) const = default;
};

enum class Strategy { kFullScan, kBinarySearch, kTstp, kUsqs };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);  // accepts "bs" too

}  // namespace spotvista
