#include "flalloc/lambert_w.hpp"

#include <cmath>
#include <stdexcept>

#include "flalloc/units.hpp"

namespace flalloc {

namespace {

constexpr double kInvE = 0.36787944117144232160;
// Inputs within this distance below -1/e are rounding noise of the caller's
// own -1/e and map to the branch point.
constexpr double kBranchSlack = 4e-16;

/// Series about the branch point in p = +-sqrt(2 (e x + 1)).
double branch_series(double p) {
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p - 43.0 / 540.0 * p * p * p * p;
}

double halley(double x, double w) {
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double step = f / denom;
    w -= step;
    // Cubic convergence: once a step is this small the next one is below
    // rounding, except near the branch point where the constant blows up.
    const double tol = std::abs(wp1) > 0.25 ? 1e-6 : 1e-16;
    if (std::abs(step) <= tol * (1.0 + std::abs(w))) break;
  }
  return w;
}

/// Newton on w + ln w = ln x; avoids overflow of w e^w for huge x.
double log_newton(double x, double w) {
  const double lx = std::log(x);
  for (int iter = 0; iter < 64; ++iter) {
    const double f = w + std::log(w) - lx;
    const double step = f / (1.0 + 1.0 / w);
    w -= step;
    if (std::abs(step) <= 1e-16 * w) break;
  }
  return w;
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x)) return x;
  const double offset = x + kInvE;
  if (offset < -kBranchSlack) throw std::domain_error("lambert_w0: argument below -1/e");
  if (offset <= 0.0) return -1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w = 0.0;
  if (offset < 0.05) {
    w = branch_series(std::sqrt(2.0 * kE * offset));
  } else if (std::abs(x) < 0.25) {
    w = x * (1.0 - x * (1.0 - 1.5 * x));
  } else if (x < 3.0) {
    w = 0.5 * std::log1p(x) + 0.25 * x / (1.0 + x);
    w = std::max(w, -0.9);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  if (x > 1e100) return log_newton(x, w);
  return halley(x, w);
}

double lambert_wm1(double x) {
  if (std::isnan(x)) return x;
  const double offset = x + kInvE;
  if (offset < -kBranchSlack || x >= 0.0) {
    throw std::domain_error("lambert_wm1: argument outside [-1/e, 0)");
  }
  if (offset <= 0.0) return -1.0;

  double w = 0.0;
  if (offset < 0.05) {
    w = branch_series(-std::sqrt(2.0 * kE * offset));
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  return halley(x, w);
}

}  // namespace flalloc
