#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "flalloc/rng.hpp"
#include "flalloc/units.hpp"
#include "flalloc/wireless_model.hpp"
#include "support.hpp"

using namespace flalloc;
using flalloc::testing::rel_diff;

TEST_SUITE("wireless_model") {

TEST_CASE("path loss at one kilometre is 128.1 dB") {
  CHECK(path_loss_db(1.0) == 128.1);
  CHECK(path_loss_db(0.1) == doctest::Approx(128.1 - 37.6).epsilon(1e-15));
}

TEST_CASE("scenario generation is deterministic and seed dependent") {
  SystemConfig c;
  c.rng_seed = 7;
  const Scenario a = generate_scenario(c);
  const Scenario b = generate_scenario(c);
  REQUIRE(a.size() == 50);
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(a.devices[n].gain > 0.0);
    CHECK(a.devices[n].gain == b.devices[n].gain);
    CHECK(a.devices[n].cycles_per_sample == b.devices[n].cycles_per_sample);
    CHECK(a.distances_km[n] <= c.area_radius_km);
    CHECK(a.distances_km[n] >= 1e-3);
    CHECK(a.devices[n].cycles_per_sample >= 1e4);
    CHECK(a.devices[n].cycles_per_sample <= 3e4);
    CHECK(a.devices[n].num_samples == 500.0);
    CHECK(a.devices[n].upload_bits == 28.1e3);
    CHECK(a.devices[n].p_max_w == doctest::Approx(dbm_to_watts(12.0)).epsilon(1e-15));
    CHECK(a.devices[n].p_min_w == doctest::Approx(1e-3).epsilon(1e-15));
  }
  c.rng_seed = 8;
  const Scenario d = generate_scenario(c);
  bool differs = false;
  for (std::size_t n = 0; n < a.size(); ++n) differs |= a.devices[n].gain != d.devices[n].gain;
  CHECK(differs);
}

TEST_CASE("gain is path loss plus shadowing in the dB domain") {
  SystemConfig c;
  c.profile.shadowing_std_db = 0.0;
  const Scenario s = generate_scenario(c);
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double db = -(128.1 + 37.6 * std::log10(s.distances_km[n]));
    CHECK(rel_diff(s.devices[n].gain, std::pow(10.0, db / 10.0)) < 1e-12);
  }
}

TEST_CASE("first scenario draws follow the documented stream") {
  // Independent replay of the generator: distance, shadowing, cycles per device.
  SystemConfig c;
  c.num_devices = 3;
  c.rng_seed = 99;
  const Scenario s = generate_scenario(c);
  std::mt19937_64 eng(99);
  auto u01 = [&] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  double spare = 0.0;
  bool have_spare = false;
  auto normal = [&] {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 0.0;
    do u1 = u01(); while (u1 <= 0.0);
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(2.0 * M_PI * u2);
    have_spare = true;
    return r * std::cos(2.0 * M_PI * u2);
  };
  for (std::size_t n = 0; n < 3; ++n) {
    double dist = 0.0;
    do dist = 0.25 * std::sqrt(u01()); while (dist < 1e-3);
    const double shadow = 8.0 * normal();
    const double cyc = 1e4 + 2e4 * u01();
    CHECK(s.distances_km[n] == dist);
    CHECK(rel_diff(s.devices[n].gain, std::pow(10.0, (-path_loss_db(dist) - shadow) / 10.0)) < 1e-14);
    CHECK(s.devices[n].cycles_per_sample == cyc);
  }
}

TEST_CASE("invalid configurations are rejected") {
  SystemConfig c;
  c.area_radius_km = 0.0;
  CHECK_THROWS_AS(generate_scenario(c), std::invalid_argument);
  c = SystemConfig{};
  c.weight_energy = 0.0;
  c.weight_time = 0.0;
  CHECK_THROWS_AS(c.validated(), std::invalid_argument);
  c = SystemConfig{};
  c.weight_energy = 3.0;
  c.weight_time = 1.0;
  CHECK(c.validated().weight_energy == 0.75);
  CHECK(c.validated().weight_time == 0.25);
}

TEST_CASE("data rate") {
  const double n0 = 1e-20;
  const double g = 1e-10;
  // snr = 1 on 1 MHz gives log2(2) per Hz.
  const double p = n0 * 1e6 / g;
  CHECK(data_rate(p, 1e6, g, n0) == doctest::Approx(1e6).epsilon(1e-14));
  CHECK(data_rate(0.0, 1e6, g, n0) == 0.0);
  CHECK(data_rate(p, 0.0, g, n0) == 0.0);

  // Reference in long double.
  const double n0b = std::pow(10.0, -20.4);
  const long double snr = 1e-10L * 0.01L / (static_cast<long double>(n0b) * 400e3L);
  const long double ref = 400e3L * std::log2(1.0L + snr);
  CHECK(rel_diff(data_rate(0.01, 400e3, 1e-10, n0b), static_cast<double>(ref)) < 1e-14);
}

TEST_CASE("data rate is increasing in power and bandwidth and saturates") {
  Rng rng(3);
  const double n0 = 4e-21;
  for (int i = 0; i < 2000; ++i) {
    const double g = std::pow(10.0, rng.uniform(-15.0, -8.0));
    const double p = rng.uniform(1e-3, 0.02);
    const double b = std::pow(10.0, rng.uniform(3.0, 7.5));
    CHECK(data_rate(p * 1.01, b, g, n0) > data_rate(p, b, g, n0));
    CHECK(data_rate(p, b * 1.01, g, n0) > data_rate(p, b, g, n0));
  }
  const double g = 1e-11;
  const double p = 0.01;
  const double limit = g * p / (n0 * kLn2);
  const double b_large = 1e3 * g * p / n0;  // snr = 1e-3
  CHECK(rel_diff(data_rate(p, b_large, g, n0), limit) < 1e-3);
  CHECK(data_rate(p, std::numeric_limits<double>::infinity(), g, n0) == limit);
}

TEST_CASE("uplink and transmission energy") {
  CHECK(uplink_time(28.1e3, 28.1e3) == 1.0);
  CHECK(uplink_time(2 * 28.1e3, 28.1e3) == 2.0);
  CHECK(std::isinf(uplink_time(1.0, 0.0)));
  CHECK(transmission_energy(0.01, 2.0) == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("computation time and energy") {
  Device d;
  d.cycles_per_sample = 2e4;
  d.num_samples = 500;
  CHECK(comp_time(d, 1e9, 10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(comp_energy_per_global_round(d, 1e9, 1e-28, 10) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(comp_time(d, 0.5e9, 10) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(comp_energy_per_global_round(d, 0.5e9, 1e-28, 10) == doctest::Approx(0.0025).epsilon(1e-15));
}

TEST_CASE("rate Hessian matches finite differences and is negative semidefinite") {
  Rng rng(11);
  const double n0 = 4e-21;
  for (int i = 0; i < 200; ++i) {
    const double g = std::pow(10.0, rng.uniform(-13.0, -9.0));
    const double p = rng.uniform(1e-3, 0.02);
    const double b = std::pow(10.0, rng.uniform(4.0, 7.0));
    const RateHessian h = rate_hessian(p, b, g, n0);
    const double hp = p * 1e-4;
    const double hb = b * 1e-4;
    auto G = [&](double pp, double bb) { return data_rate(pp, bb, g, n0); };
    const double fd_pp = (G(p + hp, b) - 2 * G(p, b) + G(p - hp, b)) / (hp * hp);
    const double fd_bb = (G(p, b + hb) - 2 * G(p, b) + G(p, b - hb)) / (hb * hb);
    const double fd_pb =
        (G(p + hp, b + hb) - G(p + hp, b - hb) - G(p - hp, b + hb) + G(p - hp, b - hb)) / (4 * hp * hb);
    CHECK(rel_diff(h.pp, fd_pp) < 1e-3);
    CHECK(rel_diff(h.bb, fd_bb) < 1e-3);
    CHECK(rel_diff(h.pb, fd_pb) < 1e-3);
    const double xp = rng.uniform(-1.0, 1.0);
    const double xb = rng.uniform(-1.0, 1.0) * b / p;
    const double q = rate_hessian_quadratic_form(p, b, g, n0, xp, xb);
    CHECK(q <= 0.0);
    const double scale = std::abs(h.pp) * xp * xp + std::abs(h.bb) * xb * xb;
    CHECK(std::abs(q - h.quadratic_form(xp, xb)) <= 1e-9 * scale);
  }
}

TEST_CASE("evaluate composes the component formulas") {
  Scenario s;
  s.config.num_devices = 1;
  s.config.weight_energy = 0.3;
  s.config.weight_time = 0.7;
  Device d;
  d.gain = 1e-11;
  d.cycles_per_sample = 2e4;
  d.num_samples = 500;
  d.upload_bits = 28.1e3;
  d.p_min_w = 1e-3;
  d.p_max_w = 0.02;
  d.f_min_hz = 1e8;
  d.f_max_hz = 2e9;
  s.devices = {d};
  Allocation a{{0.01}, {1e6}, {1e9}, 1.0};
  const CostBreakdown c = evaluate(s, a);
  const double n0 = s.config.noise_psd_w_per_hz;
  const double rate = 1e6 * std::log2(1.0 + 1e-11 * 0.01 / (n0 * 1e6));
  const double t_up = 28.1e3 / rate;
  const double e_tr = 0.01 * t_up;
  const double t_cmp = 10 * 2e4 * 500 / 1e9;
  const double e_cmp = 1e-28 * 10 * 2e4 * 500 * 1e18;
  CHECK(rel_diff(c.uplink_time_s[0], t_up) < 1e-13);
  CHECK(rel_diff(c.total_energy_j, 400 * (e_tr + e_cmp)) < 1e-13);
  CHECK(rel_diff(c.total_delay_s, 400 * (t_up + t_cmp)) < 1e-13);
  CHECK(rel_diff(c.objective, 0.3 * 400 * (e_tr + e_cmp) + 0.7 * 400 * (t_up + t_cmp)) < 1e-13);

  CHECK(evaluate(s, a, {1.0, 0.0}).objective == c.total_energy_j);
  CHECK(evaluate(s, a, {0.0, 1.0}).objective == c.total_delay_s);

  a.power_w[0] = 0.0;
  const CostBreakdown silent = evaluate(s, a);
  CHECK(std::isinf(silent.total_delay_s));
  CHECK(!std::isfinite(silent.objective));
}

TEST_CASE("total energy is R_g times the per-device sums") {
  const Scenario s = flalloc::testing::small_scenario(20, 5);
  const Allocation a = flalloc::testing::start_allocation(s);
  const CostBreakdown c = evaluate(s, a);
  double sum = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) sum += c.energy_trans_round_j[n] + c.energy_cmp_round_j[n];
  CHECK(rel_diff(c.total_energy_j, 400 * sum) < 1e-12);
}

TEST_CASE("feasibility check") {
  const Scenario s = flalloc::testing::small_scenario(10, 2);
  Allocation a = flalloc::testing::start_allocation(s);
  for (double& b : a.bandwidth_hz) b = s.config.total_bandwidth_hz / 10;
  a.round_deadline_s = evaluate(s, a).round_delay_s;
  CHECK(check_feasibility(s, a).empty());

  a.power_w[3] = s.devices[3].p_max_w * 1.01;
  a.round_deadline_s = evaluate(s, a).round_delay_s;
  const auto v = check_feasibility(s, a);
  REQUIRE(v.size() == 1);
  CHECK(v[0].constraint == Constraint::PowerBox);
  CHECK(v[0].device == std::optional<std::size_t>(3));

  a = flalloc::testing::start_allocation(s);
  a.bandwidth_hz[0] = s.config.total_bandwidth_hz;
  a.round_deadline_s = 1e9;
  const auto w = check_feasibility(s, a);
  REQUIRE(w.size() == 1);
  CHECK(w[0].constraint == Constraint::BandwidthBudget);

  a = flalloc::testing::start_allocation(s);
  a.round_deadline_s = 0.5 * evaluate(s, a).round_delay_s;
  CHECK(!check_feasibility(s, a).empty());
  CHECK(check_feasibility(s, a)[0].constraint == Constraint::RoundDeadline);
}

}  // TEST_SUITE
