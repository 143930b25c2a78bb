#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "esp/policy.hpp"

namespace esp {

/// On-disk snapshot: versioned header (environment identity, architecture,
/// step counter, RNG states) followed by raw little-endian doubles for the
/// parameter vectors and optimizer moments. Round-trips bit-exactly.
struct Checkpoint {
  std::string env_name;
  int n_agents = 0;
  std::string algorithm;
  std::vector<int> hidden;
  int64_t step = 0;
  Policy policy;
  Critic critic;
  AdamState opt_policy;
  AdamState opt_critic;
  std::map<std::string, std::string> rng_states;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace esp
