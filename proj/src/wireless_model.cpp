#include "flalloc/wireless_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "flalloc/rng.hpp"
#include "flalloc/units.hpp"

namespace flalloc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

bool within_box(double x, double lo, double hi) {
  return x >= lo * (1.0 - kBoxTolerance) && x <= hi * (1.0 + kBoxTolerance);
}

}  // namespace

SystemConfig SystemConfig::validated() const {
  SystemConfig out = *this;
  require(weight_energy >= 0.0 && weight_time >= 0.0, "weights must be non-negative");
  const double sum = weight_energy + weight_time;
  require(sum > 0.0 && std::isfinite(sum), "weights must not both be zero");
  out.weight_energy = weight_energy / sum;
  out.weight_time = 1.0 - out.weight_energy;
  require(finite_positive(total_bandwidth_hz), "total bandwidth must be positive");
  require(finite_positive(noise_psd_w_per_hz), "noise density must be positive");
  require(finite_positive(kappa), "kappa must be positive");
  require(global_rounds >= 1, "global rounds must be >= 1");
  require(local_iters >= 1, "local iterations must be >= 1");
  require(num_devices >= 1, "need at least one device");
  require(finite_positive(area_radius_km), "area radius must be positive");
  const DeviceProfile& d = profile;
  require(finite_positive(d.samples_per_device), "samples per device must be positive");
  require(finite_positive(d.upload_bits), "upload size must be positive");
  require(finite_positive(d.cycles_min) && d.cycles_min <= d.cycles_max,
          "cycle range must satisfy 0 < min <= max");
  require(finite_positive(d.p_min_w) && d.p_min_w <= d.p_max_w,
          "power range must satisfy 0 < min <= max");
  require(finite_positive(d.f_min_hz) && d.f_min_hz <= d.f_max_hz,
          "frequency range must satisfy 0 < min <= max");
  require(d.shadowing_std_db >= 0.0, "shadowing std must be non-negative");
  return out;
}

void Device::validate(std::size_t index) const {
  const std::string who = "device " + std::to_string(index) + ": ";
  require(finite_positive(gain), who + "gain must be positive");
  require(finite_positive(upload_bits), who + "upload size must be positive");
  require(finite_positive(cycles_per_sample * num_samples), who + "workload must be positive");
  require(finite_positive(p_min_w) && p_min_w <= p_max_w, who + "power bounds invalid");
  require(finite_positive(f_min_hz) && f_min_hz <= f_max_hz, who + "frequency bounds invalid");
}

void Scenario::validate() const {
  (void)config.validated();
  require(devices.size() == static_cast<std::size_t>(config.num_devices),
          "device count does not match config");
  require(distances_km.empty() || distances_km.size() == devices.size(),
          "distance list does not match device count");
  for (std::size_t n = 0; n < devices.size(); ++n) devices[n].validate(n);
}

double path_loss_db(double distance_km) { return 128.1 + 37.6 * std::log10(distance_km); }

Scenario generate_scenario(const SystemConfig& config_in) {
  const SystemConfig config = config_in.validated();
  constexpr double kMinDistanceKm = 1e-3;
  Scenario scenario;
  scenario.config = config;
  const std::size_t n_dev = static_cast<std::size_t>(config.num_devices);
  scenario.devices.reserve(n_dev);
  scenario.distances_km.reserve(n_dev);

  Rng rng(config.rng_seed);
  const DeviceProfile& prof = config.profile;
  for (std::size_t n = 0; n < n_dev; ++n) {
    double distance = 0.0;
    do {
      distance = config.area_radius_km * std::sqrt(rng.uniform01());
    } while (distance < kMinDistanceKm);
    const double shadow_db = rng.normal(0.0, prof.shadowing_std_db);
    const double cycles = rng.uniform(prof.cycles_min, prof.cycles_max);

    Device dev;
    dev.gain = db_to_linear(-path_loss_db(distance) - shadow_db);
    dev.cycles_per_sample = cycles;
    dev.num_samples = prof.samples_per_device;
    dev.upload_bits = prof.upload_bits;
    dev.p_min_w = prof.p_min_w;
    dev.p_max_w = prof.p_max_w;
    dev.f_min_hz = prof.f_min_hz;
    dev.f_max_hz = prof.f_max_hz;
    scenario.devices.push_back(dev);
    scenario.distances_km.push_back(distance);
  }
  return scenario;
}

double data_rate(double power_w, double bandwidth_hz, double gain, double noise_psd) {
  if (power_w <= 0.0 || bandwidth_hz <= 0.0) return 0.0;
  if (std::isinf(bandwidth_hz)) return gain * power_w / (noise_psd * kLn2);
  const double snr = gain * power_w / (noise_psd * bandwidth_hz);
  return bandwidth_hz * std::log1p(snr) / kLn2;
}

double uplink_time(double bits, double rate_bps) {
  if (rate_bps <= 0.0) return std::numeric_limits<double>::infinity();
  return bits / rate_bps;
}

double transmission_energy(double power_w, double uplink_time_s) { return power_w * uplink_time_s; }

double comp_time(const Device& device, double freq_hz, int local_iters) {
  return device.cycles_per_round(local_iters) / freq_hz;
}

double comp_energy_per_global_round(const Device& device, double freq_hz, double kappa,
                                    int local_iters) {
  return kappa * device.cycles_per_round(local_iters) * freq_hz * freq_hz;
}

RateHessian rate_hessian(double p, double b, double g, double n0) {
  const double one_plus_snr = 1.0 + g * p / (b * n0);
  const double denom = n0 * n0 * one_plus_snr * one_plus_snr * kLn2;
  RateHessian h;
  h.pp = -g * g / (b * denom);
  h.pb = g * g * p / (b * b * denom);
  h.bb = -g * g * p * p / (b * b * b * denom);
  return h;
}

double rate_hessian_quadratic_form(double p, double b, double g, double n0, double xp, double xb) {
  const double one_plus_snr = 1.0 + g * p / (b * n0);
  const double num = xp * g * b - xb * g * p;
  return -(num * num) / (b * b * b * n0 * n0 * one_plus_snr * one_plus_snr * kLn2);
}

CostBreakdown evaluate(const Scenario& scenario, const Allocation& allocation) {
  return evaluate(scenario, allocation, scenario.config.weights());
}

CostBreakdown evaluate(const Scenario& scenario, const Allocation& a, Weights weights) {
  const std::size_t n_dev = scenario.size();
  if (a.power_w.size() != n_dev || a.bandwidth_hz.size() != n_dev || a.freq_hz.size() != n_dev) {
    throw std::invalid_argument("allocation size does not match scenario");
  }
  const SystemConfig& cfg = scenario.config;
  CostBreakdown c;
  c.uplink_time_s.resize(n_dev);
  c.comp_time_s.resize(n_dev);
  c.energy_trans_round_j.resize(n_dev);
  c.energy_cmp_round_j.resize(n_dev);
  double trans = 0.0;
  double cmp = 0.0;
  double round = 0.0;
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& dev = scenario.devices[n];
    const double rate = data_rate(a.power_w[n], a.bandwidth_hz[n], dev.gain, cfg.noise_psd_w_per_hz);
    c.uplink_time_s[n] = uplink_time(dev.upload_bits, rate);
    c.comp_time_s[n] = comp_time(dev, a.freq_hz[n], cfg.local_iters);
    c.energy_trans_round_j[n] = transmission_energy(a.power_w[n], c.uplink_time_s[n]);
    c.energy_cmp_round_j[n] =
        comp_energy_per_global_round(dev, a.freq_hz[n], cfg.kappa, cfg.local_iters);
    trans += c.energy_trans_round_j[n];
    cmp += c.energy_cmp_round_j[n];
    round = std::max(round, c.uplink_time_s[n] + c.comp_time_s[n]);
  }
  const double rg = static_cast<double>(cfg.global_rounds);
  c.energy_trans_j = rg * trans;
  c.energy_cmp_j = rg * cmp;
  c.total_energy_j = rg * (trans + cmp);
  c.round_delay_s = round;
  c.total_delay_s = rg * round;
  c.objective = weights.energy * c.total_energy_j + weights.time * c.total_delay_s;
  return c;
}

const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::Dimension: return "dimension";
    case Constraint::PowerBox: return "power-box";
    case Constraint::FrequencyBox: return "frequency-box";
    case Constraint::BandwidthBudget: return "bandwidth-budget";
    case Constraint::RoundDeadline: return "round-deadline";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(constraint);
  if (device) os << " (device " << *device << ")";
  os << ": value " << value << " vs limit " << limit;
  return os.str();
}

std::vector<Violation> check_feasibility(const Scenario& scenario, const Allocation& a) {
  std::vector<Violation> out;
  const std::size_t n_dev = scenario.size();
  if (a.power_w.size() != n_dev || a.bandwidth_hz.size() != n_dev || a.freq_hz.size() != n_dev) {
    out.push_back({Constraint::Dimension, std::nullopt, static_cast<double>(a.power_w.size()),
                   static_cast<double>(n_dev)});
    return out;
  }
  const SystemConfig& cfg = scenario.config;
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& dev = scenario.devices[n];
    if (!within_box(a.power_w[n], dev.p_min_w, dev.p_max_w)) {
      const double limit = a.power_w[n] < dev.p_min_w ? dev.p_min_w : dev.p_max_w;
      out.push_back({Constraint::PowerBox, n, a.power_w[n], limit});
    }
    if (!within_box(a.freq_hz[n], dev.f_min_hz, dev.f_max_hz)) {
      const double limit = a.freq_hz[n] < dev.f_min_hz ? dev.f_min_hz : dev.f_max_hz;
      out.push_back({Constraint::FrequencyBox, n, a.freq_hz[n], limit});
    }
  }
  const double used = std::accumulate(a.bandwidth_hz.begin(), a.bandwidth_hz.end(), 0.0);
  if (!(used <= cfg.total_bandwidth_hz * (1.0 + kBudgetTolerance))) {
    out.push_back({Constraint::BandwidthBudget, std::nullopt, used, cfg.total_bandwidth_hz});
  }
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& dev = scenario.devices[n];
    if (!(a.bandwidth_hz[n] >= 0.0)) {
      out.push_back({Constraint::BandwidthBudget, n, a.bandwidth_hz[n], 0.0});
      continue;
    }
    const double rate =
        data_rate(a.power_w[n], a.bandwidth_hz[n], dev.gain, cfg.noise_psd_w_per_hz);
    const double t = uplink_time(dev.upload_bits, rate) + comp_time(dev, a.freq_hz[n], cfg.local_iters);
    if (!(t <= a.round_deadline_s * (1.0 + kDeadlineTolerance))) {
      out.push_back({Constraint::RoundDeadline, n, t, a.round_deadline_s});
    }
  }
  return out;
}

}  // namespace flalloc
