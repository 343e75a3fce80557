#pragma once

#include <cmath>
#include <cstdint>

#include "flalloc/wireless_model.hpp"

namespace flalloc::testing {

inline SystemConfig small_config(int n, std::uint64_t seed) {
  SystemConfig c;
  c.num_devices = n;
  c.rng_seed = seed;
  return c;
}

inline Scenario small_scenario(int n, std::uint64_t seed) {
  return generate_scenario(small_config(n, seed));
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Same inputs a fixed-deadline solve starts from: p_max, B/(2N), f_max.
inline Allocation start_allocation(const Scenario& s) {
  Allocation a;
  for (const Device& d : s.devices) {
    a.power_w.push_back(d.p_max_w);
    a.bandwidth_hz.push_back(s.config.total_bandwidth_hz / (2.0 * s.size()));
    a.freq_hz.push_back(d.f_max_hz);
  }
  return a;
}

}  // namespace flalloc::testing
