#pragma once

namespace flalloc {

/// Principal branch W0 of the Lambert W function: w e^w = x, w >= -1.
/// Defined for x >= -1/e; throws std::domain_error below the branch point.
double lambert_w0(double x);

/// Lower branch W_{-1}: w e^w = x, w <= -1, for -1/e <= x < 0.
double lambert_wm1(double x);

}  // namespace flalloc
