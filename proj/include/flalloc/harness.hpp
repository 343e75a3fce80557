#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "flalloc/kv_document.hpp"
#include "flalloc/orchestrator.hpp"
#include "flalloc/wireless_model.hpp"

namespace flalloc {

enum class SweepAxis { WeightPair, PMaxDbm, FMaxGhz, NumDevices, RadiusKm, LocalIters };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

/// The five (w1, w2) pairs of the weight experiments, as w1 values.
inline const std::vector<double> kDefaultWeightEnergy = {0.9, 0.7, 0.5, 0.3, 0.1};

struct SweepSpec {
  SweepAxis axis = SweepAxis::WeightPair;
  std::vector<double> axis_values;
  /// w1 of each weight pair (w2 = 1 - w1). Ignored for the weight_pair axis,
  /// where the axis value itself is w1.
  std::vector<double> weight_energy = kDefaultWeightEnergy;
  int repetitions = 100;
  std::uint64_t seed_base = 1;
  SystemConfig base;
  /// Total samples split equally when sweeping num_devices.
  double total_samples = 25000.0;
  bool benchmark = true;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

/// Spec file: `axis`, `values`, optional `weights`, `repetitions`,
/// `seed_base`, `total_samples`, `benchmark`, `threads`, plus any config key.
SweepSpec sweep_spec_from_document(const KvDocument& doc);
SweepSpec load_sweep_spec(const std::string& path);

/// One solve (or benchmark evaluation) of one scenario.
struct SweepSample {
  double axis_value = 0.0;
  std::string scheme;  // "joint" or "benchmark"
  double w1 = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string reason;
  double energy_j = 0.0;
  double energy_trans_j = 0.0;
  double energy_cmp_j = 0.0;
  double delay_s = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

/// Means over the successful repetitions of one (axis value, scheme, w1) cell.
struct SweepResult {
  std::string axis;
  double axis_value = 0.0;
  std::string scheme;
  double w1 = 0.0;
  double w2 = 0.0;
  int repetitions = 0;
  double mean_energy_j = 0.0;
  double mean_trans_energy_j = 0.0;
  double mean_cmp_energy_j = 0.0;
  double mean_delay_s = 0.0;
  double mean_objective = 0.0;
  double solver_iters_mean = 0.0;
  int failures_count = 0;
};

struct SweepOutput {
  std::vector<SweepResult> rows;
  std::vector<SweepSample> samples;  // ordered by (axis value, scheme, w1, seed)
};

using LogSink = std::function<void(const std::string&)>;

/// Scenario config for one axis value and repetition.
SystemConfig sweep_config(const SweepSpec& spec, double axis_value, int repetition);

/// Every (axis value, weight pair, repetition) on a worker pool. Results
/// land in fixed slots, so the output does not depend on scheduling.
/// Benchmark rows use random frequencies, except on the f_max axis where
/// random powers are used (random frequencies would ignore f_max).
SweepOutput run_sweep(const SweepSpec& spec, const LogSink& log = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows);
std::vector<SweepResult> read_sweep_csv(std::istream& in);

struct ComparisonSpec {
  std::vector<double> deadlines_s = {80.0, 100.0, 150.0};
  std::vector<double> p_max_dbm = {10.0};
  int repetitions = 20;
  std::uint64_t seed_base = 1;
  SystemConfig base;
  int threads = 0;

  void validate() const;
};

struct ComparisonSample {
  std::string scheme;  // joint, comm_only, comp_only, random
  double deadline_s = 0.0;
  double p_max_dbm = 0.0;
  std::uint64_t seed = 0;
  double energy_j = 0.0;
};

struct ComparisonRow {
  std::string scheme;
  double deadline_s = 0.0;
  double p_max_dbm = 0.0;
  int scenarios = 0;  // scenarios where every scheme was feasible
  int skipped = 0;
  double mean_energy_j = 0.0;
};

struct ComparisonOutput {
  std::vector<ComparisonRow> rows;
  std::vector<ComparisonSample> samples;
};

inline const std::vector<std::string> kComparisonSchemes = {"joint", "comm_only", "comp_only",
                                                            "random"};

/// Fixed-deadline energy of the joint solver and the three baselines. A
/// scenario infeasible for any scheme is skipped in that cell for all of
/// them and the reason is logged. `random` draws f_n uniformly between the
/// frequency the deadline requires at p_max, B/N and f_max.
ComparisonOutput run_comparison(const ComparisonSpec& spec, const LogSink& log = {});

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_comparison_csv(std::istream& in);

}  // namespace flalloc
