#include "flalloc/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flalloc/kv_document.hpp"
#include "flalloc/rng.hpp"
#include "flalloc/sp1_solver.hpp"
#include "flalloc/units.hpp"

namespace flalloc {

namespace {

Allocation initial_allocation(const Scenario& s) {
  const std::size_t n_dev = s.size();
  Allocation a;
  a.power_w.resize(n_dev);
  a.freq_hz.resize(n_dev);
  a.bandwidth_hz.assign(n_dev, s.config.total_bandwidth_hz / (2.0 * static_cast<double>(n_dev)));
  for (std::size_t n = 0; n < n_dev; ++n) {
    a.power_w[n] = s.devices[n].p_max_w;
    a.freq_hz[n] = s.devices[n].f_max_hz;
  }
  return a;
}

double achieved_round_time(const Scenario& s, const Allocation& a) {
  const auto up = uplink_times(s, a.power_w, a.bandwidth_hz);
  double worst = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    worst = std::max(worst, up[n] + comp_time(s.devices[n], a.freq_hz[n], s.config.local_iters));
  }
  return worst;
}

std::vector<double> rate_floors(const Scenario& s, std::span<const double> freq, double deadline) {
  std::vector<double> floors(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double slack = deadline - comp_time(s.devices[n], freq[n], s.config.local_iters);
    if (!(slack > 0.0)) {
      throw InfeasibleError("no time left for the uplink of device " + std::to_string(n), {n});
    }
    floors[n] = s.devices[n].upload_bits / slack;
  }
  return floors;
}

/// Runs the power/bandwidth block from `current` and keeps whichever of the
/// two points has the lower ratio objective.
void improve_power_bandwidth(const Scenario& s, Allocation& current, std::span<const double> floors,
                             double energy_scale, const SolveOptions& opt, int& newton_iters) {
  Sp2Problem prob{s.devices, floors, s.config.total_bandwidth_hz, s.config.noise_psd_w_per_hz,
                  energy_scale};
  const Sp2State st = solve_sp2(prob, current.power_w, current.bandwidth_hz, opt.newton, opt.newton_trace);
  newton_iters += st.iterations;
  if (ratio_objective(prob, st.power_w, st.bandwidth_hz) <=
      ratio_objective(prob, current.power_w, current.bandwidth_hz)) {
    current.power_w = st.power_w;
    current.bandwidth_hz = st.bandwidth_hz;
  }
}

/// w1 = 0: maximum power and frequency, bandwidth split so that every device
/// finishes at the same time.
SolveReport delay_balanced(const Scenario& s, Weights weights) {
  const std::size_t n_dev = s.size();
  const SystemConfig& cfg = s.config;
  Allocation a = initial_allocation(s);
  std::vector<double> cmp(n_dev);
  double lo = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = s.devices[n];
    cmp[n] = comp_time(d, d.f_max_hz, cfg.local_iters);
    const double asymptotic_rate = d.gain * d.p_max_w / (cfg.noise_psd_w_per_hz * kLn2);
    lo = std::max(lo, cmp[n] + d.upload_bits / asymptotic_rate);
  }
  auto need = [&](double deadline, std::vector<double>* out) {
    double total = 0.0;
    for (std::size_t n = 0; n < n_dev; ++n) {
      const Device& d = s.devices[n];
      const double b = bandwidth_for_rate(d.p_max_w, d.upload_bits / (deadline - cmp[n]), d.gain,
                                          cfg.noise_psd_w_per_hz);
      if (out) (*out)[n] = b;
      total += b;
    }
    return total;
  };
  double hi = 2.0 * lo;
  while (need(hi, nullptr) > cfg.total_bandwidth_hz) hi *= 2.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (need(mid, nullptr) > cfg.total_bandwidth_hz ? lo : hi) = mid;
  }
  const double total = need(hi, &a.bandwidth_hz);
  const double scale = cfg.total_bandwidth_hz / total;
  for (double& b : a.bandwidth_hz) b *= scale;
  a.round_deadline_s = achieved_round_time(s, a);

  SolveReport r;
  r.allocation = std::move(a);
  r.weights = weights;
  r.cost = evaluate(s, r.allocation, weights);
  r.outer_iters = 1;
  r.objective_trace = {r.cost.objective};
  r.converged = true;
  return r;
}

}  // namespace

void SolveOptions::validate() const {
  if (max_outer < 1 || !(tolerance > 0.0)) throw std::invalid_argument("invalid solve options");
  if (mode == SolveMode::FixedDeadline && !(deadline_total_s > 0.0)) {
    throw std::invalid_argument("fixed-deadline mode needs a positive deadline");
  }
  newton.validate();
}

double max_relative_change(const Allocation& a, const Allocation& b) {
  double worst = 0.0;
  auto scan = [&](const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst = std::max(worst, std::abs(x[i] - y[i]) / std::max(std::abs(y[i]), 1e-12));
    }
  };
  scan(a.power_w, b.power_w);
  scan(a.bandwidth_hz, b.bandwidth_hz);
  scan(a.freq_hz, b.freq_hz);
  return worst;
}

void check_deadline_feasible(const Scenario& s, double deadline_total_s) {
  const double deadline = deadline_total_s / s.config.global_rounds;
  const Allocation init = initial_allocation(s);
  const auto up = uplink_times(s, init.power_w, init.bandwidth_hz);
  std::size_t worst = 0;
  double worst_time = -1.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double t = up[n] + comp_time(s.devices[n], s.devices[n].f_max_hz, s.config.local_iters);
    if (t > worst_time) {
      worst_time = t;
      worst = n;
    }
  }
  if (!(worst_time < deadline)) {
    throw InfeasibleError("deadline " + format_double(deadline_total_s) + " s infeasible: device " +
                              std::to_string(worst) + " needs " +
                              format_double(worst_time * s.config.global_rounds) + " s",
                          {worst});
  }
}

SolveReport solve(const Scenario& s, const SolveOptions& opt) {
  s.validate();
  opt.validate();
  const SystemConfig& cfg = s.config;
  const bool fixed = opt.mode == SolveMode::FixedDeadline;
  const Weights weights = fixed ? Weights{1.0, 0.0} : cfg.validated().weights();
  if (!fixed && weights.energy <= 0.0) return delay_balanced(s, weights);

  double fixed_deadline = 0.0;
  if (fixed) {
    check_deadline_feasible(s, opt.deadline_total_s);
    fixed_deadline = opt.deadline_total_s / cfg.global_rounds;
  }
  const double energy_scale = weights.energy * cfg.global_rounds;

  SolveReport report;
  report.weights = weights;
  Allocation current = initial_allocation(s);
  current.round_deadline_s = fixed ? fixed_deadline : achieved_round_time(s, current);

  for (int k = 1; k <= opt.max_outer; ++k) {
    Allocation next = current;
    const Sp1Solution sp1 = fixed ? solve_sp1_fixed_deadline(s, current.power_w, current.bandwidth_hz,
                                                             fixed_deadline)
                                  : solve_sp1(s, current.power_w, current.bandwidth_hz, weights);
    next.freq_hz = sp1.freq_hz;
    next.round_deadline_s = sp1.round_deadline_s;
    const std::vector<double> floors = rate_floors(s, next.freq_hz, next.round_deadline_s);
    improve_power_bandwidth(s, next, floors, energy_scale, opt, report.newton_iters);
    if (!fixed) {
      next.round_deadline_s = std::max(next.round_deadline_s, achieved_round_time(s, next));
    }

    report.objective_trace.push_back(evaluate(s, next, weights).objective);
    const double change = max_relative_change(next, current);
    current = std::move(next);
    report.outer_iters = k;
    if (change <= opt.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.allocation = std::move(current);
  report.cost = evaluate(s, report.allocation, weights);
  return report;
}

Allocation baseline_random(const Scenario& s, RandomVariant variant, std::uint64_t seed) {
  s.validate();
  const std::size_t n_dev = s.size();
  Rng rng(seed);
  Allocation a;
  a.bandwidth_hz.assign(n_dev, s.config.total_bandwidth_hz / static_cast<double>(n_dev));
  a.power_w.resize(n_dev);
  a.freq_hz.resize(n_dev);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = s.devices[n];
    if (variant == RandomVariant::RandomFrequency) {
      a.freq_hz[n] = rng.uniform(d.f_min_hz, d.f_max_hz);
      a.power_w[n] = d.p_max_w;
    } else {
      const double dbm = rng.uniform(watts_to_dbm(d.p_min_w), watts_to_dbm(d.p_max_w));
      a.power_w[n] = std::clamp(dbm_to_watts(dbm), d.p_min_w, d.p_max_w);
      a.freq_hz[n] = d.f_max_hz;
    }
  }
  a.round_deadline_s = achieved_round_time(s, a);
  return a;
}

SolveReport baseline_comm_only(const Scenario& s, double deadline_total_s, const NewtonParams& newton) {
  s.validate();
  check_deadline_feasible(s, deadline_total_s);
  const SystemConfig& cfg = s.config;
  const double deadline = deadline_total_s / cfg.global_rounds;
  Allocation a = initial_allocation(s);
  a.round_deadline_s = deadline;
  const auto up = uplink_times(s, a.power_w, a.bandwidth_hz);
  const double worst_up = *std::max_element(up.begin(), up.end());
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    a.freq_hz[n] = std::clamp(d.cycles_per_round(cfg.local_iters) / (deadline - worst_up), d.f_min_hz,
                              d.f_max_hz);
  }
  SolveOptions opt;
  opt.newton = newton;
  SolveReport r;
  r.scheme = "comm_only";
  r.weights = {1.0, 0.0};
  const std::vector<double> floors = rate_floors(s, a.freq_hz, deadline);
  improve_power_bandwidth(s, a, floors, cfg.global_rounds, opt, r.newton_iters);
  r.allocation = std::move(a);
  r.cost = evaluate(s, r.allocation, r.weights);
  r.outer_iters = 1;
  r.objective_trace = {r.cost.objective};
  r.converged = true;
  return r;
}

SolveReport baseline_comp_only(const Scenario& s, double deadline_total_s) {
  s.validate();
  check_deadline_feasible(s, deadline_total_s);
  const double deadline = deadline_total_s / s.config.global_rounds;
  Allocation a = initial_allocation(s);
  const Sp1Solution sp1 = solve_sp1_fixed_deadline(s, a.power_w, a.bandwidth_hz, deadline);
  a.freq_hz = sp1.freq_hz;
  a.round_deadline_s = deadline;
  SolveReport r;
  r.scheme = "comp_only";
  r.weights = {1.0, 0.0};
  r.allocation = std::move(a);
  r.cost = evaluate(s, r.allocation, r.weights);
  r.outer_iters = 1;
  r.objective_trace = {r.cost.objective};
  r.converged = true;
  return r;
}

}  // namespace flalloc
