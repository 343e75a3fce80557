#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flalloc/wireless_model.hpp"

namespace flalloc {

/// Power/bandwidth block: minimise energy_scale * sum(p_n d_n / G_n(p_n, B_n))
/// over the power boxes, sum(B_n) <= budget and G_n >= rate_floor_n, where
/// G_n is the Shannon rate.
struct Sp2Problem {
  std::span<const Device> devices;
  std::span<const double> rate_floor_bps;
  double budget_hz = 0.0;
  double noise_psd = 0.0;
  double energy_scale = 1.0;  // w1 * R_g

  std::size_t size() const { return devices.size(); }
  void validate() const;
};

/// Parameters (nu, beta) of the subtractive problem
/// min sum nu_n (p_n d_n - beta_n G_n).
struct Multipliers {
  std::vector<double> nu;
  std::vector<double> beta;
};

struct InnerSolution {
  std::vector<double> power_w;
  std::vector<double> bandwidth_hz;
  double mu = 0.0;     // bandwidth price at the solution
  double mu_lo = 0.0;  // final bisection bracket, budget_excess(mu_lo) > 0
  double mu_hi = 0.0;  //                          budget_excess(mu_hi) <= 0
  bool repaired = false;
};

struct NewtonParams {
  double xi = 0.5;
  double eps = 0.01;
  int max_outer = 50;
  int armijo_max_j = 40;
  double phi_tol = 1e-8;  // relative to the initial residual norm

  void validate() const;
};

struct NewtonStep {
  int iteration = 0;
  double phi_norm_before = 0.0;
  double phi_norm_after = 0.0;
  int j = 0;
  double step = 1.0;  // xi^j
  double mu = 0.0;
};

struct Sp2State {
  std::vector<double> power_w;
  std::vector<double> bandwidth_hz;
  std::vector<double> nu;
  std::vector<double> beta;
  double phi_norm = 0.0;
  double phi_norm_initial = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<NewtonStep> trace;
};

using NewtonTraceSink = std::function<void(const NewtonStep&)>;

/// Bandwidth at which power p reaches rate r exactly (+inf when r is not
/// reachable at any bandwidth, 0 when r <= 0). Closed form via W_{-1}.
double bandwidth_for_rate(double power_w, double rate_bps, double gain, double noise_psd);

/// nu_n = energy_scale / G_n, beta_n = p_n d_n / G_n.
Multipliers update_multipliers(const Sp2Problem& problem, std::span<const double> power_w,
                               std::span<const double> bandwidth_hz);

/// Stacked residual [phi1; phi2] with phi1_n = -p_n d_n + beta_n G_n and
/// phi2_n = -energy_scale + nu_n G_n.
std::vector<double> phi(const Sp2Problem& problem, const Multipliers& m,
                        std::span<const double> power_w, std::span<const double> bandwidth_hz);
/// Diagonal of the Jacobian of phi in (beta, nu): G_n repeated twice.
std::vector<double> phi_jacobian_diag(const Sp2Problem& problem, std::span<const double> power_w,
                                      std::span<const double> bandwidth_hz);

/// sum p_n d_n / G_n (without the energy scale).
double ratio_objective(const Sp2Problem& problem, std::span<const double> power_w,
                       std::span<const double> bandwidth_hz);
/// sum nu_n (p_n d_n - beta_n G_n).
double subtractive_objective(const Sp2Problem& problem, const Multipliers& m,
                             std::span<const double> power_w, std::span<const double> bandwidth_hz);

/// Derivative of the bandwidth dual at price mu: the bandwidth every device
/// requests at that price minus the budget. Non-increasing in mu.
double budget_excess(const Sp2Problem& problem, const Multipliers& m, double mu);

/// min sum k_n B_n  s.t.  lower <= B <= upper, sum B <= budget. Greedy from the
/// lower bounds into the most negative k first; ties share in proportion to
/// their remaining capacity.
std::vector<double> solve_residual_lp(std::span<const double> k, std::span<const double> lower,
                                      std::span<const double> upper, double budget);

/// Exact minimiser of the subtractive problem for fixed (nu, beta).
///
/// Each device's best response to a bandwidth price mu has a closed form:
/// the Lambert-W relation between the rate-floor multiplier and mu gives the
/// SNR ratio on the rate floor, the unconstrained bandwidth optimum gives it
/// off the floor, and power is clamped to its box. The price is bisected
/// until the requests fill the budget; devices whose request jumps at the
/// final price (a flat direction of the objective) share the remainder via
/// solve_residual_lp. Throws InfeasibleError when the rate floors cannot fit
/// in the budget even at maximum power.
InnerSolution solve_sp2_v2(const Sp2Problem& problem, const Multipliers& m);

/// Damped Newton iteration on phi(beta, nu) = 0. The residual is evaluated at
/// the inner solution for the trial multipliers, and a step of length xi^j is
/// accepted for the smallest j with |phi_new| <= (1 - eps xi^j) |phi|.
/// init must be feasible.
Sp2State solve_sp2(const Sp2Problem& problem, std::span<const double> init_power_w,
                   std::span<const double> init_bandwidth_hz, const NewtonParams& params = {},
                   const NewtonTraceSink& sink = {});

/// One JSON object per line for convergence plots.
std::string format_trace_line(const NewtonStep& step);

}  // namespace flalloc
