#pragma once

#include <optional>
#include <span>
#include <vector>

#include "flalloc/wireless_model.hpp"

namespace flalloc {

/// Optimal CPU frequencies and round deadline for fixed (p, B).
struct Sp1Solution {
  std::vector<double> freq_hz;
  double round_deadline_s = 0.0;
  /// Multipliers of the per-device deadline constraints.
  std::vector<double> multipliers;
};

/// Smallest frequency that finishes the round's computation before
/// `deadline_s` given the device's uplink time. nullopt when the uplink alone
/// already uses the whole deadline.
std::optional<double> required_frequency(const Device& device, double deadline_s,
                                         double uplink_time_s, int local_iters);

/// Per-device uplink times for the given power and bandwidth.
std::vector<double> uplink_times(const Scenario& scenario, std::span<const double> power_w,
                                 std::span<const double> bandwidth_hz);

/// Minimises w1 R_g sum(kappa R_l c D f^2) + w2 R_g T over f in the boxes and
/// the deadline T >= T_cmp + T_up. For a fixed T the best f is the clamped
/// required frequency, so the problem reduces to a convex function of T whose
/// derivative, w2 R_g - sum 2 w1 R_g kappa f^3 over unclamped devices, is
/// bisected to machine precision.
Sp1Solution solve_sp1(const Scenario& scenario, std::span<const double> power_w,
                      std::span<const double> bandwidth_hz, Weights weights);
Sp1Solution solve_sp1(const Scenario& scenario, std::span<const double> power_w,
                      std::span<const double> bandwidth_hz);

/// Energy-minimal frequencies for an externally fixed round deadline.
/// Throws InfeasibleError naming the devices that cannot meet it at f_max.
Sp1Solution solve_sp1_fixed_deadline(const Scenario& scenario, std::span<const double> power_w,
                                     std::span<const double> bandwidth_hz, double deadline_s);

/// w1 R_g sum(kappa R_l c D f^2) + w2 R_g T.
double sp1_objective(const Scenario& scenario, std::span<const double> freq_hz,
                     double round_deadline_s, Weights weights);

}  // namespace flalloc
