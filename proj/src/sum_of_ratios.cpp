#include "flalloc/sum_of_ratios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "flalloc/kv_document.hpp"
#include "flalloc/lambert_w.hpp"
#include "flalloc/units.hpp"

namespace flalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rate(const Sp2Problem& prob, std::size_t n, double p, double b) {
  return data_rate(p, b, prob.devices[n].gain, prob.noise_psd);
}

std::vector<double> rates(const Sp2Problem& prob, std::span<const double> p,
                          std::span<const double> b) {
  std::vector<double> out(prob.size());
  for (std::size_t n = 0; n < prob.size(); ++n) out[n] = rate(prob, n, p[n], b[n]);
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_sizes(const Sp2Problem& prob, std::span<const double> p, std::span<const double> b) {
  if (p.size() != prob.size() || b.size() != prob.size()) {
    throw std::invalid_argument("power/bandwidth size does not match problem");
  }
}

double bandwidth_for_rate_k(double p, double r, double k) {
  if (r <= 0.0) return 0.0;
  if (p <= 0.0) return kInf;
  const double rho = r * kLn2 / (k * p);
  if (!(rho < 1.0)) return kInf;
  // ln(1 + y) = rho y with y = k p / B; the nontrivial root is on W_{-1}.
  const double w = lambert_wm1(-rho * std::exp(-rho));
  const double y = -w / rho - 1.0;
  if (!(y > 0.0)) return kInf;
  return k * p / y;
}

/// Constants of one device's subtractive term c p - a G(p, B) + mu B.
struct Terms {
  double k = 0.0;    // g / N0
  double c = 0.0;    // nu d
  double a = 0.0;    // nu beta
  double j = 0.0;    // c / k = nu d N0 / g
  double log_chi = 0.0;  // log of the SNR ratio 1 + k p / B that is optimal off the floor
  double floor_b_min_p = 0.0;  // bandwidth meeting the floor at p_min
  double floor_b_max_p = 0.0;  // and at p_max
};

Terms terms_for(const Sp2Problem& prob, const Multipliers& m, std::size_t n) {
  const Device& d = prob.devices[n];
  Terms t;
  t.k = d.gain / prob.noise_psd;
  t.c = m.nu[n] * d.upload_bits;
  t.a = m.nu[n] * m.beta[n];
  t.j = t.c / t.k;
  t.log_chi = std::log(t.a / (t.j * kLn2));
  t.floor_b_min_p = bandwidth_for_rate_k(d.p_min_w, prob.rate_floor_bps[n], t.k);
  t.floor_b_max_p = bandwidth_for_rate_k(d.p_max_w, prob.rate_floor_bps[n], t.k);
  return t;
}

/// Bandwidth minimising mu B - a G(p, B) at fixed p (no rate floor).
double bandwidth_unconstrained(double p, double mu, double a, double k) {
  if (mu <= 0.0) return kInf;
  const double m = mu * kLn2 / a;
  // 1 + k p / B = u with ln u - 1 + 1/u = m, i.e. u = -1 / W0(-e^{-1-m}).
  const double w = lambert_w0(-std::exp(-1.0 - m));
  if (!(w + 1.0 > 0.0)) return kInf;
  return k * p * (-w) / (1.0 + w);
}

struct Response {
  double p = 0.0;
  double b = 0.0;
};

/// Best (p, B) of one device at bandwidth price mu.
Response respond(const Device& d, double floor, const Terms& t, double mu) {
  // ln Lambda where Lambda = 1 + k p / B on the rate floor: the tau-mu
  // relation tau = (mu - j) ln2 / W((mu - j) / (e j)) - nu beta rearranged.
  const double log_lambda = 1.0 + lambert_w0((mu - t.j) / (kE * t.j));
  Response r;
  if (log_lambda >= t.log_chi) {
    // Rate floor priced (tau >= 0): p = (Lambda - 1) N0 B / g with
    // B = r_min / log2(Lambda).
    double p_star = 0.0;
    if (floor > 0.0) {
      const double ratio = log_lambda > 0.0 ? std::expm1(log_lambda) / log_lambda : 1.0;
      p_star = floor * kLn2 * ratio / t.k;
    }
    if (p_star > d.p_min_w && p_star < d.p_max_w && log_lambda > 0.0) {
      // Interior power sits exactly on the floor.
      r.p = p_star;
      r.b = floor * kLn2 / log_lambda;
      return r;
    }
    r.p = p_star <= d.p_min_w ? d.p_min_w : d.p_max_w;
  } else {
    // Off the floor the objective per unit bandwidth keeps falling with
    // power until the box stops it.
    r.p = d.p_max_w;
  }
  const double on_floor = r.p == d.p_max_w ? t.floor_b_max_p : t.floor_b_min_p;
  r.b = std::max(bandwidth_unconstrained(r.p, mu, t.a, t.k), on_floor);
  return r;
}

struct Responses {
  std::vector<Response> devices;
  double total = 0.0;
};

Responses respond_all(const Sp2Problem& prob, const std::vector<Terms>& terms, double mu) {
  Responses out;
  out.devices.resize(prob.size());
  for (std::size_t n = 0; n < prob.size(); ++n) {
    out.devices[n] = respond(prob.devices[n], prob.rate_floor_bps[n], terms[n], mu);
    out.total += out.devices[n].b;
  }
  return out;
}

double term_value(const Sp2Problem& prob, const Multipliers& m, std::size_t n, double p, double b) {
  return m.nu[n] * (p * prob.devices[n].upload_bits - m.beta[n] * rate(prob, n, p, b));
}

}  // namespace

void Sp2Problem::validate() const {
  if (rate_floor_bps.size() != devices.size()) {
    throw std::invalid_argument("rate floor size does not match device count");
  }
  if (!(budget_hz > 0.0) || !(noise_psd > 0.0) || !(energy_scale > 0.0)) {
    throw std::invalid_argument("budget, noise and energy scale must be positive");
  }
  for (double r : rate_floor_bps) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("rate floors must be finite");
  }
}

void NewtonParams::validate() const {
  if (!(xi > 0.0 && xi < 1.0) || !(eps > 0.0 && eps < 1.0) || max_outer < 1 || armijo_max_j < 0 ||
      !(phi_tol > 0.0)) {
    throw std::invalid_argument("invalid Newton parameters");
  }
}

double bandwidth_for_rate(double power_w, double rate_bps, double gain, double noise_psd) {
  return bandwidth_for_rate_k(power_w, rate_bps, gain / noise_psd);
}

Multipliers update_multipliers(const Sp2Problem& prob, std::span<const double> p,
                               std::span<const double> b) {
  check_sizes(prob, p, b);
  Multipliers m;
  m.nu.resize(prob.size());
  m.beta.resize(prob.size());
  for (std::size_t n = 0; n < prob.size(); ++n) {
    const double g = rate(prob, n, p[n], b[n]);
    if (!(g > 0.0)) {
      throw std::invalid_argument("device " + std::to_string(n) + " has zero rate");
    }
    m.nu[n] = prob.energy_scale / g;
    m.beta[n] = p[n] * prob.devices[n].upload_bits / g;
  }
  return m;
}

std::vector<double> phi(const Sp2Problem& prob, const Multipliers& m, std::span<const double> p,
                        std::span<const double> b) {
  check_sizes(prob, p, b);
  const std::size_t n_dev = prob.size();
  std::vector<double> out(2 * n_dev);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const double g = rate(prob, n, p[n], b[n]);
    out[n] = -p[n] * prob.devices[n].upload_bits + m.beta[n] * g;
    out[n_dev + n] = -prob.energy_scale + m.nu[n] * g;
  }
  return out;
}

std::vector<double> phi_jacobian_diag(const Sp2Problem& prob, std::span<const double> p,
                                      std::span<const double> b) {
  check_sizes(prob, p, b);
  const std::vector<double> g = rates(prob, p, b);
  std::vector<double> out(g);
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

double ratio_objective(const Sp2Problem& prob, std::span<const double> p,
                       std::span<const double> b) {
  check_sizes(prob, p, b);
  double sum = 0.0;
  for (std::size_t n = 0; n < prob.size(); ++n) {
    sum += p[n] * prob.devices[n].upload_bits / rate(prob, n, p[n], b[n]);
  }
  return sum;
}

double subtractive_objective(const Sp2Problem& prob, const Multipliers& m,
                             std::span<const double> p, std::span<const double> b) {
  check_sizes(prob, p, b);
  double sum = 0.0;
  for (std::size_t n = 0; n < prob.size(); ++n) sum += term_value(prob, m, n, p[n], b[n]);
  return sum;
}

double budget_excess(const Sp2Problem& prob, const Multipliers& m, double mu) {
  std::vector<Terms> terms(prob.size());
  for (std::size_t n = 0; n < prob.size(); ++n) terms[n] = terms_for(prob, m, n);
  return respond_all(prob, terms, mu).total - prob.budget_hz;
}

std::vector<double> solve_residual_lp(std::span<const double> k, std::span<const double> lower,
                                      std::span<const double> upper, double budget) {
  const std::size_t n_var = k.size();
  if (lower.size() != n_var || upper.size() != n_var) {
    throw std::invalid_argument("residual LP size mismatch");
  }
  std::vector<double> x(lower.begin(), lower.end());
  double remaining = budget - std::accumulate(x.begin(), x.end(), 0.0);
  if (remaining < -1e-12 * std::max(1.0, std::abs(budget))) {
    throw InfeasibleError("residual LP lower bounds exceed the budget");
  }
  std::vector<std::size_t> order;
  for (std::size_t n = 0; n < n_var; ++n) {
    if (k[n] < 0.0 && upper[n] > lower[n]) order.push_back(n);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return k[a] < k[b]; });

  std::size_t i = 0;
  while (i < order.size() && remaining > 0.0) {
    // Tie group: coefficients equal to rounding.
    std::size_t end = i + 1;
    const double tol = 1e-12 * std::abs(k[order[i]]);
    while (end < order.size() && k[order[end]] - k[order[i]] <= tol) ++end;
    double capacity = 0.0;
    for (std::size_t q = i; q < end; ++q) capacity += upper[order[q]] - lower[order[q]];
    const double pour = std::min(remaining, capacity);
    for (std::size_t q = i; q < end; ++q) {
      const std::size_t n = order[q];
      const double share = pour == capacity ? 1.0 : (upper[n] - lower[n]) / capacity;
      x[n] = pour == capacity ? upper[n] : lower[n] + pour * share;
    }
    remaining -= pour;
    i = end;
  }
  return x;
}

InnerSolution solve_sp2_v2(const Sp2Problem& prob, const Multipliers& m) {
  prob.validate();
  const std::size_t n_dev = prob.size();
  if (m.nu.size() != n_dev || m.beta.size() != n_dev) {
    throw std::invalid_argument("multiplier size does not match problem");
  }
  std::vector<Terms> terms(n_dev);
  double mu0 = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    if (!(m.nu[n] > 0.0) || !(m.beta[n] > 0.0)) {
      throw std::invalid_argument("multipliers must be positive");
    }
    terms[n] = terms_for(prob, m, n);
    mu0 = std::max(mu0, terms[n].j);
  }

  // Least bandwidth that meets every floor (all devices at maximum power).
  double min_total = 0.0;
  std::vector<std::size_t> hopeless;
  std::vector<double> min_need(n_dev);
  for (std::size_t n = 0; n < n_dev; ++n) {
    min_need[n] = bandwidth_for_rate_k(prob.devices[n].p_max_w, prob.rate_floor_bps[n], terms[n].k);
    if (!std::isfinite(min_need[n])) hopeless.push_back(n);
    min_total += min_need[n];
  }
  if (!hopeless.empty()) {
    throw InfeasibleError("rate floor above the infinite-bandwidth rate at maximum power", hopeless);
  }
  if (min_total > prob.budget_hz) {
    std::vector<std::size_t> binding(n_dev);
    std::iota(binding.begin(), binding.end(), 0);
    std::sort(binding.begin(), binding.end(),
              [&](std::size_t a, std::size_t b) { return min_need[a] > min_need[b]; });
    binding.resize(std::min<std::size_t>(binding.size(), 5));
    throw InfeasibleError("rate floors need " + format_double(min_total) + " Hz, budget is " +
                              format_double(prob.budget_hz),
                          binding);
  }

  // Bracket the price: total request is +inf as mu -> 0 and falls to
  // min_total as mu -> inf.
  double lo = mu0;
  double hi = mu0;
  Responses at_lo = respond_all(prob, terms, lo);
  Responses at_hi = at_lo;
  if (at_hi.total > prob.budget_hz) {
    for (int i = 0; i < 4096 && at_hi.total > prob.budget_hz; ++i) {
      lo = hi;
      at_lo = std::move(at_hi);
      hi *= 2.0;
      if (!std::isfinite(hi)) throw InfeasibleError("bandwidth price diverged");
      at_hi = respond_all(prob, terms, hi);
    }
  } else {
    for (int i = 0; i < 4096 && at_lo.total <= prob.budget_hz; ++i) {
      hi = lo;
      at_hi = std::move(at_lo);
      lo *= 0.5;
      if (lo == 0.0) break;
      at_lo = respond_all(prob, terms, lo);
    }
  }
  if (at_hi.total > prob.budget_hz) throw InfeasibleError("failed to bracket the bandwidth price");

  if (lo > 0.0 && at_lo.total > prob.budget_hz) {
    // Illinois false position on log mu, falling back to a geometric
    // bisection step whenever the bracket stops halving.
    double f_lo = at_lo.total - prob.budget_hz;
    double f_hi = at_hi.total - prob.budget_hz;
    int kept = 0;  // +1: lo kept last time, -1: hi kept
    double width_before = std::log(hi / lo);
    for (int iter = 0; iter < 400 && hi > lo * (1.0 + 1e-15); ++iter) {
      const double t_lo = std::log(lo);
      const double t_hi = std::log(hi);
      double mid = std::sqrt(lo) * std::sqrt(hi);
      const bool bisect = iter % 3 == 2 && t_hi - t_lo > 0.5 * width_before;
      if (iter % 3 == 2) width_before = t_hi - t_lo;
      if (!bisect && std::isfinite(f_lo) && f_lo > f_hi) {
        const double t = t_hi - f_hi * (t_hi - t_lo) / (f_hi - f_lo);
        const double x = std::exp(t);
        if (x > lo && x < hi) mid = x;
      }
      if (!(mid > lo && mid < hi)) break;
      Responses at_mid = respond_all(prob, terms, mid);
      const double f_mid = at_mid.total - prob.budget_hz;
      if (f_mid > 0.0) {
        lo = mid;
        at_lo = std::move(at_mid);
        f_lo = f_mid;
        if (kept == -1) f_hi *= 0.5;
        kept = -1;
      } else {
        hi = mid;
        at_hi = std::move(at_mid);
        f_hi = f_mid;
        if (kept == 1) f_lo *= 0.5;
        kept = 1;
      }
    }
  }

  InnerSolution sol;
  sol.mu_lo = lo;
  sol.mu_hi = hi;
  sol.mu = hi;
  sol.power_w.resize(n_dev);
  sol.bandwidth_hz.resize(n_dev);

  // Remaining budget at the upper price goes to devices whose request grows
  // across the final bracket, along the segment between their two responses.
  std::vector<double> slope(n_dev, 0.0);
  std::vector<double> zero(n_dev, 0.0);
  std::vector<double> segment(n_dev, 0.0);
  const bool have_lower = lo > 0.0 && std::isfinite(at_lo.total);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Response& h = at_hi.devices[n];
    sol.power_w[n] = h.p;
    sol.bandwidth_hz[n] = h.b;
    if (!have_lower) continue;
    const Response& l = at_lo.devices[n];
    const double seg = l.b - h.b;
    if (seg > 0.0 && std::isfinite(seg)) {
      segment[n] = seg;
      slope[n] = (term_value(prob, m, n, l.p, l.b) - term_value(prob, m, n, h.p, h.b)) / seg;
    }
  }
  const double residual = std::max(0.0, prob.budget_hz - at_hi.total);
  if (have_lower && residual > 0.0) {
    const std::vector<double> extra = solve_residual_lp(slope, zero, segment, residual);
    for (std::size_t n = 0; n < n_dev; ++n) {
      if (extra[n] <= 0.0) continue;
      const double frac = std::min(1.0, extra[n] / segment[n]);
      const Response& h = at_hi.devices[n];
      const Response& l = at_lo.devices[n];
      sol.bandwidth_hz[n] = h.b + extra[n];
      sol.power_w[n] = std::clamp(h.p + frac * (l.p - h.p), prob.devices[n].p_min_w,
                                  prob.devices[n].p_max_w);
    }
  }

  // Rounding can leave a floor a few ulps short. Power closes the gap for
  // almost nothing; near the infinite-bandwidth rate limit the same gap in
  // bandwidth can cost hertz, so bandwidth from the unused budget is the
  // fallback.
  double used = std::accumulate(sol.bandwidth_hz.begin(), sol.bandwidth_hz.end(), 0.0);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const double floor = prob.rate_floor_bps[n];
    if (floor <= 0.0 || rate(prob, n, sol.power_w[n], sol.bandwidth_hz[n]) >= floor) continue;
    sol.repaired = true;
    const double b = sol.bandwidth_hz[n];
    double p = std::expm1(floor * kLn2 / b) * b / terms[n].k;
    for (int k = 0; k < 8 && rate(prob, n, p, b) < floor; ++k) p *= 1.0 + 1e-15;
    if (p <= prob.devices[n].p_max_w && rate(prob, n, p, b) >= floor) {
      sol.power_w[n] = std::max(p, sol.power_w[n]);
      continue;
    }
    const double need = bandwidth_for_rate_k(sol.power_w[n], floor, terms[n].k) * (1.0 + 1e-14);
    const double extra = need - b;
    if (!(extra <= prob.budget_hz - used + 1e-12 * prob.budget_hz)) {
      throw InfeasibleError("no budget left to restore the rate floor of device " + std::to_string(n),
                            {n});
    }
    sol.bandwidth_hz[n] = need;
    used += extra;
  }
  return sol;
}

Sp2State solve_sp2(const Sp2Problem& prob, std::span<const double> init_p,
                   std::span<const double> init_b, const NewtonParams& params,
                   const NewtonTraceSink& sink) {
  prob.validate();
  params.validate();
  check_sizes(prob, init_p, init_b);
  const std::size_t n_dev = prob.size();
  const double used = std::accumulate(init_b.begin(), init_b.end(), 0.0);
  if (used > prob.budget_hz * (1.0 + kBudgetTolerance)) {
    throw std::invalid_argument("initial bandwidth exceeds the budget");
  }
  for (std::size_t n = 0; n < n_dev; ++n) {
    if (rate(prob, n, init_p[n], init_b[n]) < prob.rate_floor_bps[n] * (1.0 - 1e-9)) {
      throw std::invalid_argument("initial point violates the rate floor of device " +
                                  std::to_string(n));
    }
  }

  Multipliers alpha = update_multipliers(prob, init_p, init_b);
  InnerSolution x = solve_sp2_v2(prob, alpha);
  std::vector<double> residual = phi(prob, alpha, x.power_w, x.bandwidth_hz);
  double norm = norm2(residual);

  // Below this the residual is rounding noise of phi itself.
  double scale = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    scale += x.power_w[n] * prob.devices[n].upload_bits + prob.energy_scale;
  }
  const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  Sp2State state;
  state.phi_norm_initial = norm;
  const double target = std::max(params.phi_tol * norm, noise_floor);

  for (int i = 0; i < params.max_outer && norm > target; ++i) {
    const std::vector<double> g = rates(prob, x.power_w, x.bandwidth_hz);
    std::vector<double> sigma_beta(n_dev);
    std::vector<double> sigma_nu(n_dev);
    for (std::size_t n = 0; n < n_dev; ++n) {
      sigma_beta[n] = -residual[n] / g[n];
      sigma_nu[n] = -residual[n_dev + n] / g[n];
    }
    bool accepted = false;
    double step = 1.0;
    for (int j = 0; j <= params.armijo_max_j; ++j, step *= params.xi) {
      Multipliers trial;
      trial.beta.resize(n_dev);
      trial.nu.resize(n_dev);
      for (std::size_t n = 0; n < n_dev; ++n) {
        trial.beta[n] = alpha.beta[n] + step * sigma_beta[n];
        trial.nu[n] = alpha.nu[n] + step * sigma_nu[n];
      }
      InnerSolution xt = solve_sp2_v2(prob, trial);
      std::vector<double> rt = phi(prob, trial, xt.power_w, xt.bandwidth_hz);
      const double nt = norm2(rt);
      if (nt <= (1.0 - params.eps * step) * norm) {
        NewtonStep rec{i, norm, nt, j, step, xt.mu};
        state.trace.push_back(rec);
        if (sink) sink(rec);
        alpha = std::move(trial);
        x = std::move(xt);
        residual = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
    }
    ++state.iterations;
    if (!accepted) {
      state.line_search_failed = true;
      break;
    }
  }

  state.power_w = std::move(x.power_w);
  state.bandwidth_hz = std::move(x.bandwidth_hz);
  state.nu = std::move(alpha.nu);
  state.beta = std::move(alpha.beta);
  state.phi_norm = norm;
  state.converged = norm <= target;
  return state;
}

std::string format_trace_line(const NewtonStep& s) {
  std::ostringstream os;
  os << "{\"event\":\"sp2_newton_step\",\"iteration\":" << s.iteration
     << ",\"phi_norm_before\":" << format_double(s.phi_norm_before)
     << ",\"phi_norm_after\":" << format_double(s.phi_norm_after) << ",\"j\":" << s.j
     << ",\"step\":" << format_double(s.step) << ",\"mu\":" << format_double(s.mu) << "}";
  return os.str();
}

}  // namespace flalloc
