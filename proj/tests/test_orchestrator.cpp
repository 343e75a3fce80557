#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "flalloc/orchestrator.hpp"
#include "flalloc/report_json.hpp"
#include "flalloc/sp1_solver.hpp"
#include "flalloc/units.hpp"
#include "support.hpp"

using namespace flalloc;
using flalloc::testing::rel_diff;
using flalloc::testing::small_config;
using flalloc::testing::small_scenario;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

SolveOptions fixed_mode(double deadline_s) {
  SolveOptions opt;
  opt.mode = SolveMode::FixedDeadline;
  opt.deadline_total_s = deadline_s;
  return opt;
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("single device takes the whole band at the stationary frequency") {
  const Scenario s = small_scenario(1, 4);
  const SolveReport r = solve(s);
  CHECK(r.converged);
  CHECK(rel_diff(r.allocation.freq_hz[0], std::cbrt(0.5 / (2.0 * 0.5 * 1e-28))) < 1e-9);
  CHECK(rel_diff(r.allocation.bandwidth_hz[0], s.config.total_bandwidth_hz) < 1e-9);
  CHECK(check_feasibility(s, r.allocation).empty());
}

TEST_CASE("a loose deadline drives power and frequency to their minimum") {
  const Scenario s = small_scenario(10, 5);
  const SolveReport r = solve(s, fixed_mode(1e6));
  double cmp = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    CHECK(rel_diff(r.allocation.power_w[n], d.p_min_w) < 1e-6);
    CHECK(r.allocation.freq_hz[n] == d.f_min_hz);
    cmp += s.config.global_rounds * comp_energy_per_global_round(d, d.f_min_hz, s.config.kappa,
                                                                 s.config.local_iters);
  }
  CHECK(rel_diff(r.cost.energy_cmp_j, cmp) < 1e-12);
  // Transmission at p_min cannot beat every device having the whole band.
  double trans_lb = 0.0;
  for (const Device& d : s.devices) {
    const double g = data_rate(d.p_min_w, s.config.total_bandwidth_hz, d.gain, s.config.noise_psd_w_per_hz);
    trans_lb += s.config.global_rounds * d.p_min_w * d.upload_bits / g;
  }
  CHECK(r.cost.energy_trans_j >= trans_lb);
  CHECK(r.cost.energy_trans_j <= trans_lb * s.size() * 1.01);
}

TEST_CASE("solves are deterministic") {
  const Scenario s = small_scenario(30, 7);
  CHECK(dump_report(solve(s)) == dump_report(solve(s)));
  CHECK(dump_report(solve(s, fixed_mode(100))) == dump_report(solve(s, fixed_mode(100))));
}

TEST_CASE("outputs are feasible and the objective trace does not rise") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    for (double w1 : {0.1, 0.5, 0.9}) {
      SystemConfig c = small_config(20, seed);
      c.weight_energy = w1;
      c.weight_time = 1.0 - w1;
      const Scenario s = generate_scenario(c);
      const SolveReport r = solve(s);
      CAPTURE(seed);
      CAPTURE(w1);
      CHECK(check_feasibility(s, r.allocation).empty());
      for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
        CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] * (1.0 + 1e-7));
      }
      CHECK(r.objective_trace.size() == static_cast<std::size_t>(r.outer_iters));
      CHECK(r.cost.objective == r.objective_trace.back());
    }
    const Scenario s = small_scenario(20, seed);
    const SolveReport f = solve(s, fixed_mode(100));
    CHECK(check_feasibility(s, f.allocation).empty());
    CHECK(f.cost.total_delay_s <= 100.0 * (1 + 1e-9));
  }
}

TEST_CASE("devices near the infinite-bandwidth rate limit stay feasible") {
  // At 1.3 km some devices need almost all of their asymptotic rate, where
  // the rate barely moves with bandwidth.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SystemConfig c = small_config(20, seed);
    c.area_radius_km = 1.3;
    const Scenario s = generate_scenario(c);
    CAPTURE(seed);
    SolveReport r;
    REQUIRE_NOTHROW(r = solve(s));
    CHECK(check_feasibility(s, r.allocation).empty());
  }
}

TEST_CASE("weighting energy lowers energy and raises delay") {
  const std::vector<double> w1s = {0.9, 0.5, 0.1};
  std::vector<double> energy, delay;
  for (double w1 : w1s) {
    SystemConfig c = small_config(20, 3);
    c.weight_energy = w1;
    c.weight_time = 1.0 - w1;
    const SolveReport r = solve(generate_scenario(c));
    energy.push_back(r.cost.total_energy_j);
    delay.push_back(r.cost.total_delay_s);
  }
  CHECK(energy[0] < energy[1]);
  CHECK(energy[1] < energy[2]);
  CHECK(delay[0] > delay[1]);
  CHECK(delay[1] > delay[2]);
}

TEST_CASE("zero energy weight balances finishing times") {
  SystemConfig c = small_config(12, 2);
  c.weight_energy = 0.0;
  c.weight_time = 1.0;
  const Scenario s = generate_scenario(c);
  const SolveReport r = solve(s);
  CHECK(rel_diff(sum(r.allocation.bandwidth_hz), c.total_bandwidth_hz) < 1e-12);
  const double t = r.cost.round_delay_s;
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(r.allocation.power_w[n] == s.devices[n].p_max_w);
    CHECK(r.allocation.freq_hz[n] == s.devices[n].f_max_hz);
    CHECK(rel_diff(r.cost.uplink_time_s[n] + r.cost.comp_time_s[n], t) < 1e-9);
  }
  CHECK(r.cost.objective == r.cost.total_delay_s);
}

TEST_CASE("random baselines") {
  const Scenario s = small_scenario(15, 6);
  const Allocation a = baseline_random(s, RandomVariant::RandomFrequency, 11);
  CHECK(rel_diff(sum(a.bandwidth_hz), s.config.total_bandwidth_hz) < 1e-12);
  bool varied = false;
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(a.power_w[n] == s.devices[n].p_max_w);
    CHECK(a.freq_hz[n] >= s.devices[n].f_min_hz);
    CHECK(a.freq_hz[n] <= s.devices[n].f_max_hz);
    varied = varied || a.freq_hz[n] != a.freq_hz[0];
  }
  CHECK(varied);
  CHECK(rel_diff(a.round_deadline_s, evaluate(s, a).round_delay_s) < 1e-15);
  CHECK(check_feasibility(s, a).empty());

  const Allocation b = baseline_random(s, RandomVariant::RandomPower, 11);
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(b.freq_hz[n] == s.devices[n].f_max_hz);
    CHECK(b.power_w[n] >= s.devices[n].p_min_w);
    CHECK(b.power_w[n] <= s.devices[n].p_max_w);
  }
  CHECK(baseline_random(s, RandomVariant::RandomFrequency, 11).freq_hz == a.freq_hz);
  CHECK(baseline_random(s, RandomVariant::RandomFrequency, 12).freq_hz != a.freq_hz);
}

TEST_CASE("single-block baselines") {
  const Scenario s = small_scenario(20, 9);
  const double T = 100.0;
  const double deadline = T / s.config.global_rounds;
  const Allocation start = flalloc::testing::start_allocation(s);
  const auto up = uplink_times(s, start.power_w, start.bandwidth_hz);

  const SolveReport comp = baseline_comp_only(s, T);
  CHECK(comp.allocation.power_w == start.power_w);
  CHECK(comp.allocation.bandwidth_hz == start.bandwidth_hz);
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    CHECK(comp.allocation.freq_hz[n] ==
          std::clamp(d.cycles_per_round(10) / (deadline - up[n]), d.f_min_hz, d.f_max_hz));
  }
  CHECK(check_feasibility(s, comp.allocation).empty());

  const SolveReport comm = baseline_comm_only(s, T);
  const double worst_up = *std::max_element(up.begin(), up.end());
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Device& d = s.devices[n];
    CHECK(comm.allocation.freq_hz[n] ==
          std::clamp(d.cycles_per_round(10) / (deadline - worst_up), d.f_min_hz, d.f_max_hz));
  }
  CHECK(check_feasibility(s, comm.allocation).empty());
  // Power/bandwidth optimisation never raises transmission energy over the start.
  Allocation comm_start = start;
  comm_start.freq_hz = comm.allocation.freq_hz;
  CHECK(comm.cost.energy_trans_j <= evaluate(s, comm_start, {1.0, 0.0}).energy_trans_j);

  const SolveReport joint = solve(s, fixed_mode(T));
  CHECK(joint.cost.total_energy_j <= comm.cost.total_energy_j * (1 + 1e-9));
  CHECK(joint.cost.total_energy_j <= comp.cost.total_energy_j * (1 + 1e-9));
}

TEST_CASE("infeasible deadlines name the slowest device") {
  const Scenario s = small_scenario(10, 3);
  const Allocation start = flalloc::testing::start_allocation(s);
  const CostBreakdown c = evaluate(s, start);
  const auto worst = static_cast<std::size_t>(
      std::max_element(c.comp_time_s.begin(), c.comp_time_s.end(),
                       [&](const double& a, const double& b) {
                         const auto i = &a - c.comp_time_s.data();
                         const auto j = &b - c.comp_time_s.data();
                         return a + c.uplink_time_s[i] < b + c.uplink_time_s[j];
                       }) -
      c.comp_time_s.begin());
  try {
    solve(s, fixed_mode(1.0));
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    REQUIRE(e.devices().size() == 1);
    CHECK(e.devices()[0] == worst);
  }
  CHECK_THROWS_AS(baseline_comm_only(s, 1.0), InfeasibleError);
  CHECK_THROWS_AS(baseline_comp_only(s, 1.0), InfeasibleError);
}

TEST_CASE("options and helpers") {
  SolveOptions bad;
  bad.max_outer = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SolveOptions no_deadline;
  no_deadline.mode = SolveMode::FixedDeadline;
  CHECK_THROWS_AS(no_deadline.validate(), std::invalid_argument);

  Allocation a{{1.0, 2.0}, {10.0, 10.0}, {1e9, 1e9}, 0.1};
  Allocation b = a;
  CHECK(max_relative_change(a, b) == 0.0);
  b.bandwidth_hz[1] = 11.0;
  CHECK(max_relative_change(b, a) == doctest::Approx(0.1));
}

}  // TEST_SUITE
