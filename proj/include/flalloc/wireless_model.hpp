#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flalloc {

/// Raised when no allocation satisfies the deadline, rate or bandwidth
/// constraints. `devices` lists the indices that make the instance infeasible.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::size_t> devices = {})
      : std::runtime_error(what), devices_(std::move(devices)) {}
  const std::vector<std::size_t>& devices() const { return devices_; }

 private:
  std::vector<std::size_t> devices_;
};

struct Weights {
  double energy = 0.5;
  double time = 0.5;
};

/// Per-device parameters used when generating a scenario. All SI.
struct DeviceProfile {
  double samples_per_device = 500.0;
  double upload_bits = 28.1e3;
  double cycles_min = 1e4;
  double cycles_max = 3e4;
  double p_min_w = 1e-3;                   // 0 dBm
  double p_max_w = 0.015848931924611134;   // 12 dBm
  double f_min_hz = 0.1e9;
  double f_max_hz = 2e9;
  double shadowing_std_db = 8.0;
};

struct SystemConfig {
  double total_bandwidth_hz = 20e6;
  double noise_psd_w_per_hz = 3.9810717055349565e-21;  // -174 dBm/Hz
  double kappa = 1e-28;
  int global_rounds = 400;
  int local_iters = 10;
  double weight_energy = 0.5;
  double weight_time = 0.5;
  int num_devices = 50;
  double area_radius_km = 0.25;
  std::uint64_t rng_seed = 1;
  DeviceProfile profile;

  Weights weights() const { return {weight_energy, weight_time}; }

  /// Copy with weights rescaled to sum to one; throws std::invalid_argument
  /// on any out-of-range field.
  SystemConfig validated() const;
};

struct Device {
  double gain = 0.0;               // linear channel gain
  double cycles_per_sample = 0.0;
  double num_samples = 0.0;
  double upload_bits = 0.0;
  double p_min_w = 0.0;
  double p_max_w = 0.0;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;

  /// CPU cycles of one global round (all local iterations).
  double cycles_per_round(int local_iters) const {
    return static_cast<double>(local_iters) * cycles_per_sample * num_samples;
  }
  void validate(std::size_t index) const;
};

struct Scenario {
  SystemConfig config;
  std::vector<Device> devices;
  std::vector<double> distances_km;

  std::size_t size() const { return devices.size(); }
  void validate() const;
};

struct Allocation {
  std::vector<double> power_w;
  std::vector<double> bandwidth_hz;
  std::vector<double> freq_hz;
  double round_deadline_s = 0.0;
};

struct CostBreakdown {
  // Per device, one global round.
  std::vector<double> uplink_time_s;
  std::vector<double> comp_time_s;
  std::vector<double> energy_trans_round_j;
  std::vector<double> energy_cmp_round_j;
  // Whole training run (R_g rounds).
  double energy_trans_j = 0.0;
  double energy_cmp_j = 0.0;
  double total_energy_j = 0.0;
  double round_delay_s = 0.0;  // max over devices of comp + uplink time
  double total_delay_s = 0.0;  // R_g * round_delay_s
  double objective = 0.0;
};

enum class Constraint { Dimension, PowerBox, FrequencyBox, BandwidthBudget, RoundDeadline };

struct Violation {
  Constraint constraint;
  std::optional<std::size_t> device;
  double value = 0.0;
  double limit = 0.0;

  std::string describe() const;
};

const char* to_string(Constraint c);

inline constexpr double kBoxTolerance = 1e-9;
inline constexpr double kBudgetTolerance = 1e-9;
inline constexpr double kDeadlineTolerance = 1e-6;

/// Path loss in dB at `distance_km`: 128.1 + 37.6 log10(d).
double path_loss_db(double distance_km);

/// Devices uniform in a disk around the base station, log-normal shadowing,
/// cycles per sample uniform in the profile range. Deterministic in rng_seed.
Scenario generate_scenario(const SystemConfig& config);

/// Shannon rate B log2(1 + g p / (N0 B)); zero for p = 0 or B = 0.
double data_rate(double power_w, double bandwidth_hz, double gain, double noise_psd);
/// d / r, +infinity when r = 0.
double uplink_time(double bits, double rate_bps);
double transmission_energy(double power_w, double uplink_time_s);
double comp_time(const Device& device, double freq_hz, int local_iters);
double comp_energy_per_global_round(const Device& device, double freq_hz, double kappa,
                                    int local_iters);

/// Hessian of the rate in (p, B).
struct RateHessian {
  double pp = 0.0;
  double pb = 0.0;
  double bb = 0.0;

  double quadratic_form(double xp, double xb) const {
    return pp * xp * xp + 2.0 * pb * xp * xb + bb * xb * xb;
  }
};

RateHessian rate_hessian(double power_w, double bandwidth_hz, double gain, double noise_psd);
/// Closed form of x^T H x: -(x_p g B - x_B g p)^2 / (B^3 N0^2 (1 + snr)^2 ln 2).
double rate_hessian_quadratic_form(double power_w, double bandwidth_hz, double gain,
                                   double noise_psd, double xp, double xb);

CostBreakdown evaluate(const Scenario& scenario, const Allocation& allocation);
CostBreakdown evaluate(const Scenario& scenario, const Allocation& allocation, Weights weights);

std::vector<Violation> check_feasibility(const Scenario& scenario, const Allocation& allocation);

}  // namespace flalloc
