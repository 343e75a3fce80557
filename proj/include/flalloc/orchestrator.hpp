#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flalloc/sum_of_ratios.hpp"
#include "flalloc/wireless_model.hpp"

namespace flalloc {

enum class SolveMode { Weighted, FixedDeadline };

struct SolveOptions {
  int max_outer = 20;          // K
  double tolerance = 1e-5;     // relative change that ends the alternation
  SolveMode mode = SolveMode::Weighted;
  double deadline_total_s = 0.0;  // whole-training deadline T (FixedDeadline only)
  NewtonParams newton;
  NewtonTraceSink newton_trace;

  void validate() const;
};

struct SolveReport {
  Allocation allocation;
  CostBreakdown cost;
  Weights weights;  // weights the objective was evaluated with
  int outer_iters = 0;
  std::vector<double> objective_trace;  // evaluated objective after each outer iteration
  bool converged = false;
  int newton_iters = 0;                 // summed over all power/bandwidth solves
  std::string scheme = "joint";
};

/// Alternates the frequency/deadline block and the power/bandwidth block.
///
/// Weighted mode minimises w1 E + w2 T from p = p_max, B_n = B / (2N),
/// f = f_max. FixedDeadline mode holds the per-round deadline at T / R_g and
/// minimises energy only. Stops when the largest relative change of
/// (p, B, f) drops below the tolerance or after max_outer rounds.
/// Throws InfeasibleError when the deadline cannot be met.
SolveReport solve(const Scenario& scenario, const SolveOptions& options = {});

/// Deadline check used by the fixed-deadline schemes: every device must finish
/// at p_max, B / (2N), f_max within T / R_g. Throws InfeasibleError naming the
/// tightest device otherwise.
void check_deadline_feasible(const Scenario& scenario, double deadline_total_s);

enum class RandomVariant {
  RandomFrequency,  // f ~ U[f_min, f_max], p = p_max, B_n = B / N
  RandomPower,      // p uniform in dBm over [p_min, p_max], f = f_max, B_n = B / N
};

/// Benchmark allocation; the round deadline is set to the achieved maximum.
Allocation baseline_random(const Scenario& scenario, RandomVariant variant, std::uint64_t seed);

/// Fixed frequencies R_l c D / (T/R_g - max T_up) from p = p_max,
/// B_n = B / (2N); only power and bandwidth are optimised.
SolveReport baseline_comm_only(const Scenario& scenario, double deadline_total_s,
                               const NewtonParams& newton = {});
/// p = p_max, B_n = B / (2N) fixed; only frequencies are optimised.
SolveReport baseline_comp_only(const Scenario& scenario, double deadline_total_s);

/// Largest relative change between two allocations (absolute floor 1e-12).
double max_relative_change(const Allocation& a, const Allocation& b);

}  // namespace flalloc
