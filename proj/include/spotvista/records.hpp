#pragma once

#include <string>

#include "spotvista/time.hpp"
#include "spotvista/types.hpp"

namespace spotvista {

// One raw SPS sample as returned by the provider.
struct SpsObservation {
  Timestamp timestamp;
  PoolKey key;
  int node_count = 1;
  SpsValue sps = SpsValue::low();
  std::string account;
  Strategy strategy = Strategy::kUsqs;

  void validate() const;  // throws InvalidRecord
  bool operator==(const SpsObservation&) const = default;
};

// Derived transition points for one pool at one collection cycle.
// t3 == 0 (resp. t2 == 0) means no probed count reached SPS 3 (resp. >= 2).
struct TransitionRecord {
  PoolKey key;
  Timestamp timestamp;
  int t3 = 0;
  int t2 = 0;
  Strategy method = Strategy::kTstp;
  int queries_used = 0;

  void validate() const;  // throws InvalidRecord
  bool operator==(const TransitionRecord&) const = default;
};

}  // namespace spotvista
