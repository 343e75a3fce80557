#include "flalloc/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    g[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, t);
  }
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    g[static_cast<std::size_t>(k)] = lo + (hi - lo) * t;
  }
  g.back() = hi;
  return g;
}

struct Cell {
  double cost = kInf;
  int p_index = -1;
};

}  // namespace

GridResult grid_search_joint(const Scenario& s, Weights w, int points) {
  s.validate();
  const std::size_t n_dev = s.size();
  if (n_dev > 3) throw std::invalid_argument("joint grid search supports at most 3 devices");
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points");
  const SystemConfig& cfg = s.config;
  const double rg = cfg.global_rounds;
  const std::size_t pts = static_cast<std::size_t>(points);
  const double b_step = cfg.total_bandwidth_hz / points;

  // t_up[n][j][k]: bandwidth level j + 1, power k.
  std::vector<std::vector<double>> p_grid(n_dev);
  std::vector<std::vector<std::vector<double>>> t_up(n_dev);
  std::vector<double> cycles(n_dev);
  double t_lo = 0.0;
  double t_hi = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = s.devices[n];
    cycles[n] = d.cycles_per_round(cfg.local_iters);
    p_grid[n] = log_grid(d.p_min_w, d.p_max_w, points);
    t_up[n].assign(pts, std::vector<double>(pts));
    for (std::size_t j = 0; j < pts; ++j) {
      for (std::size_t k = 0; k < pts; ++k) {
        const double r = data_rate(p_grid[n][k], (j + 1) * b_step, d.gain, cfg.noise_psd_w_per_hz);
        t_up[n][j][k] = uplink_time(d.upload_bits, r);
      }
    }
    t_lo = std::max(t_lo, t_up[n][pts - 1][pts - 1] + cycles[n] / d.f_max_hz);
    t_hi = std::max(t_hi, t_up[n][0][0] + cycles[n] / d.f_min_hz);
  }
  const std::vector<double> deadlines = log_grid(t_lo, std::max(t_hi, t_lo), points);

  GridResult best;
  best.objective = kInf;
  double best_grid = kInf;
  std::vector<std::vector<Cell>> table(n_dev, std::vector<Cell>(pts));
  for (double T : deadlines) {
    for (std::size_t n = 0; n < n_dev; ++n) {
      const Device& d = s.devices[n];
      for (std::size_t j = 0; j < pts; ++j) {
        Cell c;
        for (std::size_t k = 0; k < pts; ++k) {
          const double up = t_up[n][j][k];
          if (!(up + cycles[n] / d.f_max_hz <= T)) continue;
          const double f = std::clamp(cycles[n] / (T - up), d.f_min_hz, d.f_max_hz);
          const double e = w.energy * rg * (p_grid[n][k] * up + cfg.kappa * cycles[n] * f * f);
          if (e < c.cost) c = {e, static_cast<int>(k)};
        }
        table[n][j] = c;
      }
    }
    // Minimise the summed device cost over bandwidth levels j_1 + ... <= points.
    double cost = kInf;
    std::vector<std::size_t> levels(n_dev);
    if (n_dev == 1) {
      for (std::size_t j = 0; j < pts; ++j) {
        if (table[0][j].cost < cost) {
          cost = table[0][j].cost;
          levels = {j};
        }
      }
    } else {
      // pair[m] = best split of m + 2 levels between devices 0 and 1.
      std::vector<double> pair(pts, kInf);
      std::vector<std::size_t> pair_first(pts, 0);
      for (std::size_t a = 0; a < pts; ++a) {
        for (std::size_t b = 0; a + b + 2 <= pts; ++b) {
          const double c = table[0][a].cost + table[1][b].cost;
          if (c < pair[a + b]) {
            pair[a + b] = c;
            pair_first[a + b] = a;
          }
        }
      }
      if (n_dev == 2) {
        for (std::size_t m = 0; m < pts; ++m) {
          if (pair[m] < cost) {
            cost = pair[m];
            levels = {pair_first[m], m - pair_first[m]};
          }
        }
      } else {
        for (std::size_t m = 0; m < pts; ++m) {
          for (std::size_t c3 = 0; m + c3 + 3 <= pts; ++c3) {
            const double c = pair[m] + table[2][c3].cost;
            if (c < cost) {
              cost = c;
              levels = {pair_first[m], m - pair_first[m], c3};
            }
          }
        }
      }
    }
    if (!std::isfinite(cost)) continue;
    const double total = cost + w.time * rg * T;
    if (total < best_grid) {
      best_grid = total;
      Allocation a;
      a.round_deadline_s = T;
      for (std::size_t n = 0; n < n_dev; ++n) {
        const Device& d = s.devices[n];
        const std::size_t j = levels[n];
        const std::size_t k = static_cast<std::size_t>(table[n][j].p_index);
        a.power_w.push_back(p_grid[n][k]);
        a.bandwidth_hz.push_back((j + 1) * b_step);
        a.freq_hz.push_back(std::clamp(cycles[n] / (T - t_up[n][j][k]), d.f_min_hz, d.f_max_hz));
      }
      best.allocation = std::move(a);
    }
  }
  if (!std::isfinite(best_grid)) throw InfeasibleError("no grid point meets the deadline");
  best.objective = evaluate(s, best.allocation, w).objective;
  return best;
}

GridResult grid_search_sp1(const Scenario& s, std::span<const double> power_w,
                           std::span<const double> bandwidth_hz, Weights w, int points) {
  s.validate();
  const std::size_t n_dev = s.size();
  const SystemConfig& cfg = s.config;
  const double rg = cfg.global_rounds;
  std::vector<double> up(n_dev), cycles(n_dev);
  double t_lo = 0.0;
  double t_hi = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = s.devices[n];
    up[n] = uplink_time(d.upload_bits,
                        data_rate(power_w[n], bandwidth_hz[n], d.gain, cfg.noise_psd_w_per_hz));
    cycles[n] = d.cycles_per_round(cfg.local_iters);
    t_lo = std::max(t_lo, up[n] + cycles[n] / d.f_max_hz);
    t_hi = std::max(t_hi, up[n] + cycles[n] / d.f_min_hz);
  }
  t_hi = std::max(t_hi, t_lo);

  // Energy grows with f, so at a given deadline the clamped required
  // frequency is the cheapest feasible one.
  GridResult best;
  best.objective = kInf;
  auto scan = [&](const std::vector<double>& deadlines) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i < deadlines.size(); ++i) {
      const double T = deadlines[i];
      double energy = 0.0;
      std::vector<double> freq(n_dev);
      for (std::size_t n = 0; n < n_dev; ++n) {
        const Device& d = s.devices[n];
        freq[n] = std::clamp(cycles[n] / (T - up[n]), d.f_min_hz, d.f_max_hz);
        energy += cfg.kappa * cycles[n] * freq[n] * freq[n];
      }
      const double total = w.energy * rg * energy + w.time * rg * T;
      if (total < best.objective) {
        best.objective = total;
        best.allocation.power_w.assign(power_w.begin(), power_w.end());
        best.allocation.bandwidth_hz.assign(bandwidth_hz.begin(), bandwidth_hz.end());
        best.allocation.freq_hz = freq;
        best.allocation.round_deadline_s = T;
        arg = i;
      }
    }
    return arg;
  };
  // Coarse geometric pass, then linear passes zoomed on the best cell.
  std::vector<double> grid = log_grid(t_lo, t_hi, points);
  for (int level = 0; level < 4; ++level) {
    const std::size_t i = scan(grid);
    const double lo = grid[i == 0 ? 0 : i - 1];
    const double hi = grid[std::min(i + 1, grid.size() - 1)];
    if (!(hi > lo)) break;
    grid = linear_grid(lo, hi, points);
  }
  return best;
}

GridResult grid_search_sp2(const Sp2Problem& prob, int points) {
  prob.validate();
  const std::size_t n_dev = prob.size();
  if (n_dev < 1 || n_dev > 2) throw std::invalid_argument("power/bandwidth grid supports 1 or 2 devices");
  const std::size_t pts = static_cast<std::size_t>(points);
  const double b_step = prob.budget_hz / points;

  // Best ratio of device n on bandwidth level j (j + 1 steps).
  std::vector<std::vector<Cell>> table(n_dev, std::vector<Cell>(pts));
  std::vector<std::vector<double>> p_grid(n_dev);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = prob.devices[n];
    p_grid[n] = log_grid(d.p_min_w, d.p_max_w, points);
    for (std::size_t j = 0; j < pts; ++j) {
      for (std::size_t k = 0; k < pts; ++k) {
        const double g = data_rate(p_grid[n][k], (j + 1) * b_step, d.gain, prob.noise_psd);
        if (g < prob.rate_floor_bps[n]) continue;
        const double ratio = p_grid[n][k] * d.upload_bits / g;
        if (ratio < table[n][j].cost) table[n][j] = {ratio, static_cast<int>(k)};
      }
    }
  }
  GridResult best;
  best.objective = kInf;
  auto take = [&](std::vector<std::size_t> levels) {
    double total = 0.0;
    for (std::size_t n = 0; n < n_dev; ++n) total += table[n][levels[n]].cost;
    if (!(total < best.objective)) return;
    best.objective = total;
    best.allocation = Allocation{};
    for (std::size_t n = 0; n < n_dev; ++n) {
      best.allocation.power_w.push_back(p_grid[n][static_cast<std::size_t>(table[n][levels[n]].p_index)]);
      best.allocation.bandwidth_hz.push_back((levels[n] + 1) * b_step);
    }
  };
  if (n_dev == 1) {
    for (std::size_t j = 0; j < pts; ++j) take({j});
  } else {
    for (std::size_t a = 0; a + 2 <= pts; ++a) take({a, pts - 2 - a});
  }
  if (!std::isfinite(best.objective)) throw InfeasibleError("no grid point meets the rate floors");
  return best;
}

}  // namespace flalloc
