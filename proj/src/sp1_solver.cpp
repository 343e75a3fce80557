#include "flalloc/sp1_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flalloc {

namespace {

struct Workload {
  std::vector<double> cycles;  // per round
  std::vector<double> uplink;
};

Workload workload(const Scenario& s, std::span<const double> p, std::span<const double> b) {
  Workload w;
  w.uplink = uplink_times(s, p, b);
  w.cycles.reserve(s.size());
  for (const Device& d : s.devices) w.cycles.push_back(d.cycles_per_round(s.config.local_iters));
  return w;
}

double clamped_frequency(const Device& d, double cycles, double deadline, double uplink) {
  const double slack = deadline - uplink;
  if (!(slack > 0.0)) return d.f_max_hz;
  return std::clamp(cycles / slack, d.f_min_hz, d.f_max_hz);
}

}  // namespace

std::optional<double> required_frequency(const Device& device, double deadline_s,
                                         double uplink_time_s, int local_iters) {
  const double slack = deadline_s - uplink_time_s;
  if (!(slack > 0.0)) return std::nullopt;
  return device.cycles_per_round(local_iters) / slack;
}

std::vector<double> uplink_times(const Scenario& s, std::span<const double> p,
                                 std::span<const double> b) {
  if (p.size() != s.size() || b.size() != s.size()) {
    throw std::invalid_argument("power/bandwidth size does not match scenario");
  }
  std::vector<double> out(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    out[n] = uplink_time(d.upload_bits, data_rate(p[n], b[n], d.gain, s.config.noise_psd_w_per_hz));
  }
  return out;
}

double sp1_objective(const Scenario& s, std::span<const double> f, double deadline, Weights w) {
  const double rg = s.config.global_rounds;
  double energy = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    energy += comp_energy_per_global_round(s.devices[n], f[n], s.config.kappa, s.config.local_iters);
  }
  return w.energy * rg * energy + w.time * rg * deadline;
}

Sp1Solution solve_sp1(const Scenario& s, std::span<const double> p, std::span<const double> b) {
  return solve_sp1(s, p, b, s.config.weights());
}

Sp1Solution solve_sp1(const Scenario& s, std::span<const double> p, std::span<const double> b,
                      Weights weights) {
  const Workload wl = workload(s, p, b);
  const std::size_t n_dev = s.size();
  const double rg = s.config.global_rounds;
  const double kappa = s.config.kappa;

  double lower = 0.0;  // every device can finish at f_max
  double upper = 0.0;  // every device finishes at f_min
  for (std::size_t n = 0; n < n_dev; ++n) {
    if (!std::isfinite(wl.uplink[n])) {
      throw InfeasibleError("device " + std::to_string(n) + " has zero uplink rate", {n});
    }
    lower = std::max(lower, wl.uplink[n] + wl.cycles[n] / s.devices[n].f_max_hz);
    upper = std::max(upper, wl.uplink[n] + wl.cycles[n] / s.devices[n].f_min_hz);
  }

  auto frequencies_at = [&](double deadline) {
    std::vector<double> f(n_dev);
    for (std::size_t n = 0; n < n_dev; ++n) {
      f[n] = clamped_frequency(s.devices[n], wl.cycles[n], deadline, wl.uplink[n]);
    }
    return f;
  };
  // Derivative of the reduced objective; non-decreasing in the deadline.
  auto slope = [&](double deadline) {
    double drop = 0.0;
    for (std::size_t n = 0; n < n_dev; ++n) {
      const double f = std::min(wl.cycles[n] / (deadline - wl.uplink[n]), s.devices[n].f_max_hz);
      if (f > s.devices[n].f_min_hz) drop += 2.0 * kappa * f * f * f;
    }
    return weights.time * rg - weights.energy * rg * drop;
  };

  double deadline = lower;
  if (weights.time <= 0.0) {
    deadline = upper;
  } else if (weights.energy > 0.0 && slope(lower) < 0.0) {
    double lo = lower;
    double hi = upper;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    deadline = hi;
  }

  Sp1Solution sol;
  sol.freq_hz = frequencies_at(deadline);
  sol.round_deadline_s = deadline;
  for (std::size_t n = 0; n < n_dev; ++n) {
    sol.round_deadline_s =
        std::max(sol.round_deadline_s, wl.uplink[n] + wl.cycles[n] / sol.freq_hz[n]);
  }

  // Multipliers: stationarity in f for interior devices, the remainder of
  // sum(lambda) = w2 R_g shared by deadline-active devices sitting on a bound.
  sol.multipliers.assign(n_dev, 0.0);
  if (weights.time > 0.0) {
    constexpr double kRel = 1e-9;
    double assigned = 0.0;
    double bound_weight = 0.0;
    std::vector<std::size_t> bound_active;
    for (std::size_t n = 0; n < n_dev; ++n) {
      const Device& d = s.devices[n];
      const double f = sol.freq_hz[n];
      const double used = wl.uplink[n] + wl.cycles[n] / f;
      const bool active = used >= sol.round_deadline_s * (1.0 - kRel);
      if (!active) continue;
      const bool at_bound = f >= d.f_max_hz * (1.0 - kRel) || f <= d.f_min_hz * (1.0 + kRel);
      const double stationary = 2.0 * weights.energy * rg * kappa * f * f * f;
      if (at_bound) {
        bound_active.push_back(n);
        bound_weight += stationary;
      } else {
        sol.multipliers[n] = stationary;
        assigned += stationary;
      }
    }
    const double remainder = std::max(0.0, weights.time * rg - assigned);
    for (std::size_t n : bound_active) {
      const double f = sol.freq_hz[n];
      const double share = bound_weight > 0.0
                               ? 2.0 * weights.energy * rg * kappa * f * f * f / bound_weight
                               : 1.0 / static_cast<double>(bound_active.size());
      sol.multipliers[n] = remainder * share;
    }
  }
  return sol;
}

Sp1Solution solve_sp1_fixed_deadline(const Scenario& s, std::span<const double> p,
                                     std::span<const double> b, double deadline) {
  const Workload wl = workload(s, p, b);
  Sp1Solution sol;
  sol.round_deadline_s = deadline;
  sol.freq_hz.resize(s.size());
  sol.multipliers.assign(s.size(), 0.0);
  std::vector<std::size_t> late;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    const auto f = required_frequency(d, deadline, wl.uplink[n], s.config.local_iters);
    if (!f || *f > d.f_max_hz * (1.0 + kBoxTolerance)) {
      late.push_back(n);
      continue;
    }
    sol.freq_hz[n] = std::clamp(*f, d.f_min_hz, d.f_max_hz);
  }
  if (!late.empty()) {
    throw InfeasibleError("round deadline cannot be met at maximum frequency by " +
                              std::to_string(late.size()) + " device(s), first " +
                              std::to_string(late.front()),
                          late);
  }
  return sol;
}

}  // namespace flalloc
