#pragma once

#include <span>

#include "flalloc/sum_of_ratios.hpp"
#include "flalloc/wireless_model.hpp"

namespace flalloc {

/// Exhaustive searches over coarse grids, built only on the cost model. They
/// are the references the solvers are checked against on tiny instances.

struct GridResult {
  Allocation allocation;
  double objective = 0.0;  // evaluated exactly at `allocation`
};

/// Joint search over (p, B, f) for N <= 3: `points` log-spaced powers,
/// bandwidths j B / points split so that the budget holds, and deadlines on a
/// geometric grid. For a fixed deadline the cheapest frequency is the clamped
/// required one, so f needs no axis of its own.
GridResult grid_search_joint(const Scenario& scenario, Weights weights, int points = 200);

/// Frequency block for fixed (p, B): a `points` deadline scan, zoomed three
/// times on the best cell, with the clamped required frequency per device.
GridResult grid_search_sp1(const Scenario& scenario, std::span<const double> power_w,
                           std::span<const double> bandwidth_hz, Weights weights, int points = 200);

/// Power/bandwidth block for N = 1 or 2: grid over p_1 (, p_2) and B_1, with
/// B_2 taking the rest of the budget. Returns the smallest ratio objective
/// among points meeting every rate floor (objective holds the ratio sum, not
/// scaled by energy_scale). Throws InfeasibleError when no point qualifies.
GridResult grid_search_sp2(const Sp2Problem& problem, int points = 200);

}  // namespace flalloc
