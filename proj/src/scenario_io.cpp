#include "flalloc/scenario_io.hpp"

#include <fstream>
#include <string_view>
#include <vector>

#include "flalloc/units.hpp"

namespace flalloc {

namespace {

const std::vector<std::string_view> kConfigKeys = {
    "total_bandwidth_hz", "noise_psd_dbm_per_hz", "kappa",        "global_rounds",
    "local_iters",        "w1",                   "w2",           "num_devices",
    "area_radius_km",     "seed",                 "samples_per_device", "upload_bits",
    "cycles_min",         "cycles_max",           "p_min_dbm",    "p_max_dbm",
    "f_min_hz",           "f_max_hz",             "shadowing_std_db"};

const std::vector<std::string_view> kScenarioKeys = {
    "format",          "total_bandwidth_hz", "noise_psd_w_per_hz", "kappa",
    "global_rounds",   "local_iters",        "weight_energy",      "weight_time",
    "num_devices",     "area_radius_km",     "rng_seed",           "samples_per_device",
    "upload_bits",     "cycles_min",         "cycles_max",         "p_min_w",
    "p_max_w",         "f_min_hz",           "f_max_hz",           "shadowing_std_db",
    "distance_km",     "gain",               "cycles_per_sample",  "num_samples",
    "device_upload_bits", "device_p_min_w",  "device_p_max_w",     "device_f_min_hz",
    "device_f_max_hz"};

constexpr std::string_view kScenarioFormat = "flalloc-scenario-v1";

int as_int(const KvDocument& doc, std::string_view key, int fallback) {
  const auto v = doc.get_int_or(key, fallback);
  if (v < 0 || v > 1'000'000'000) throw ParseError(doc.source(), doc.line_of(key), std::string(key), "out of range");
  return static_cast<int>(v);
}

void write_array(std::ostream& out, std::string_view key, const std::vector<double>& values) {
  out << key << " =";
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

template <typename Field>
std::vector<double> column(const std::vector<Device>& devices, Field field) {
  std::vector<double> out;
  out.reserve(devices.size());
  for (const Device& d : devices) out.push_back(d.*field);
  return out;
}

}  // namespace

SystemConfig config_from_document(const KvDocument& doc,
                                  const std::vector<std::string_view>& extra_keys) {
  std::vector<std::string_view> allowed = kConfigKeys;
  allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
  doc.require_known(allowed);
  SystemConfig c;
  c.total_bandwidth_hz = doc.get_double_or("total_bandwidth_hz", c.total_bandwidth_hz);
  if (doc.has("noise_psd_dbm_per_hz")) {
    c.noise_psd_w_per_hz = dbm_to_watts(doc.get_double("noise_psd_dbm_per_hz"));
  }
  c.kappa = doc.get_double_or("kappa", c.kappa);
  c.global_rounds = as_int(doc, "global_rounds", c.global_rounds);
  c.local_iters = as_int(doc, "local_iters", c.local_iters);
  c.weight_energy = doc.get_double_or("w1", c.weight_energy);
  c.weight_time = doc.has("w2") ? doc.get_double("w2")
                                : (doc.has("w1") ? 1.0 - c.weight_energy : c.weight_time);
  c.num_devices = as_int(doc, "num_devices", c.num_devices);
  c.area_radius_km = doc.get_double_or("area_radius_km", c.area_radius_km);
  c.rng_seed = static_cast<std::uint64_t>(doc.get_int_or("seed", static_cast<std::int64_t>(c.rng_seed)));
  DeviceProfile& p = c.profile;
  p.samples_per_device = doc.get_double_or("samples_per_device", p.samples_per_device);
  p.upload_bits = doc.get_double_or("upload_bits", p.upload_bits);
  p.cycles_min = doc.get_double_or("cycles_min", p.cycles_min);
  p.cycles_max = doc.get_double_or("cycles_max", p.cycles_max);
  if (doc.has("p_min_dbm")) p.p_min_w = dbm_to_watts(doc.get_double("p_min_dbm"));
  if (doc.has("p_max_dbm")) p.p_max_w = dbm_to_watts(doc.get_double("p_max_dbm"));
  p.f_min_hz = doc.get_double_or("f_min_hz", p.f_min_hz);
  p.f_max_hz = doc.get_double_or("f_max_hz", p.f_max_hz);
  p.shadowing_std_db = doc.get_double_or("shadowing_std_db", p.shadowing_std_db);
  try {
    return c.validated();
  } catch (const std::invalid_argument& e) {
    throw ParseError(doc.source(), 0, "", e.what());
  }
}

SystemConfig load_config(const std::string& path) {
  return config_from_document(KvDocument::parse_file(path));
}

void write_config(std::ostream& out, const SystemConfig& c) {
  out << "total_bandwidth_hz = " << format_double(c.total_bandwidth_hz) << '\n'
      << "noise_psd_dbm_per_hz = " << format_double(watts_to_dbm(c.noise_psd_w_per_hz)) << '\n'
      << "kappa = " << format_double(c.kappa) << '\n'
      << "global_rounds = " << c.global_rounds << '\n'
      << "local_iters = " << c.local_iters << '\n'
      << "w1 = " << format_double(c.weight_energy) << '\n'
      << "w2 = " << format_double(c.weight_time) << '\n'
      << "num_devices = " << c.num_devices << '\n'
      << "area_radius_km = " << format_double(c.area_radius_km) << '\n'
      << "seed = " << c.rng_seed << '\n'
      << "samples_per_device = " << format_double(c.profile.samples_per_device) << '\n'
      << "upload_bits = " << format_double(c.profile.upload_bits) << '\n'
      << "cycles_min = " << format_double(c.profile.cycles_min) << '\n'
      << "cycles_max = " << format_double(c.profile.cycles_max) << '\n'
      << "p_min_dbm = " << format_double(watts_to_dbm(c.profile.p_min_w)) << '\n'
      << "p_max_dbm = " << format_double(watts_to_dbm(c.profile.p_max_w)) << '\n'
      << "f_min_hz = " << format_double(c.profile.f_min_hz) << '\n'
      << "f_max_hz = " << format_double(c.profile.f_max_hz) << '\n'
      << "shadowing_std_db = " << format_double(c.profile.shadowing_std_db) << '\n';
}

void write_scenario(std::ostream& out, const Scenario& s) {
  const SystemConfig& c = s.config;
  out << "# federated-learning FDMA allocation scenario\n"
      << "format = " << kScenarioFormat << '\n'
      << "total_bandwidth_hz = " << format_double(c.total_bandwidth_hz) << '\n'
      << "noise_psd_w_per_hz = " << format_double(c.noise_psd_w_per_hz) << '\n'
      << "kappa = " << format_double(c.kappa) << '\n'
      << "global_rounds = " << c.global_rounds << '\n'
      << "local_iters = " << c.local_iters << '\n'
      << "weight_energy = " << format_double(c.weight_energy) << '\n'
      << "weight_time = " << format_double(c.weight_time) << '\n'
      << "num_devices = " << c.num_devices << '\n'
      << "area_radius_km = " << format_double(c.area_radius_km) << '\n'
      << "rng_seed = " << c.rng_seed << '\n'
      << "samples_per_device = " << format_double(c.profile.samples_per_device) << '\n'
      << "upload_bits = " << format_double(c.profile.upload_bits) << '\n'
      << "cycles_min = " << format_double(c.profile.cycles_min) << '\n'
      << "cycles_max = " << format_double(c.profile.cycles_max) << '\n'
      << "p_min_w = " << format_double(c.profile.p_min_w) << '\n'
      << "p_max_w = " << format_double(c.profile.p_max_w) << '\n'
      << "f_min_hz = " << format_double(c.profile.f_min_hz) << '\n'
      << "f_max_hz = " << format_double(c.profile.f_max_hz) << '\n'
      << "shadowing_std_db = " << format_double(c.profile.shadowing_std_db) << '\n';
  write_array(out, "distance_km", s.distances_km);
  write_array(out, "gain", column(s.devices, &Device::gain));
  write_array(out, "cycles_per_sample", column(s.devices, &Device::cycles_per_sample));
  write_array(out, "num_samples", column(s.devices, &Device::num_samples));
  write_array(out, "device_upload_bits", column(s.devices, &Device::upload_bits));
  write_array(out, "device_p_min_w", column(s.devices, &Device::p_min_w));
  write_array(out, "device_p_max_w", column(s.devices, &Device::p_max_w));
  write_array(out, "device_f_min_hz", column(s.devices, &Device::f_min_hz));
  write_array(out, "device_f_max_hz", column(s.devices, &Device::f_max_hz));
}

Scenario read_scenario(std::istream& in, const std::string& source) {
  const KvDocument doc = KvDocument::parse(in, source);
  doc.require_known(kScenarioKeys);
  if (doc.get_string("format") != kScenarioFormat) {
    throw ParseError(source, doc.line_of("format"), "format", "unsupported scenario format");
  }
  Scenario s;
  SystemConfig& c = s.config;
  c.total_bandwidth_hz = doc.get_double("total_bandwidth_hz");
  c.noise_psd_w_per_hz = doc.get_double("noise_psd_w_per_hz");
  c.kappa = doc.get_double("kappa");
  c.global_rounds = as_int(doc, "global_rounds", 0);
  c.local_iters = as_int(doc, "local_iters", 0);
  c.weight_energy = doc.get_double("weight_energy");
  c.weight_time = doc.get_double("weight_time");
  c.num_devices = as_int(doc, "num_devices", 0);
  c.area_radius_km = doc.get_double("area_radius_km");
  c.rng_seed = static_cast<std::uint64_t>(doc.get_int("rng_seed"));
  c.profile.samples_per_device = doc.get_double("samples_per_device");
  c.profile.upload_bits = doc.get_double("upload_bits");
  c.profile.cycles_min = doc.get_double("cycles_min");
  c.profile.cycles_max = doc.get_double("cycles_max");
  c.profile.p_min_w = doc.get_double("p_min_w");
  c.profile.p_max_w = doc.get_double("p_max_w");
  c.profile.f_min_hz = doc.get_double("f_min_hz");
  c.profile.f_max_hz = doc.get_double("f_max_hz");
  c.profile.shadowing_std_db = doc.get_double("shadowing_std_db");

  const std::size_t n = static_cast<std::size_t>(c.num_devices);
  auto array = [&](std::string_view key) {
    std::vector<double> v = doc.get_doubles(key);
    if (v.size() != n) {
      throw ParseError(source, doc.line_of(key), std::string(key),
                       "expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    }
    return v;
  };
  s.distances_km = array("distance_km");
  const auto gain = array("gain");
  const auto cycles = array("cycles_per_sample");
  const auto samples = array("num_samples");
  const auto bits = array("device_upload_bits");
  const auto pmin = array("device_p_min_w");
  const auto pmax = array("device_p_max_w");
  const auto fmin = array("device_f_min_hz");
  const auto fmax = array("device_f_max_hz");
  s.devices.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.devices[i] = Device{gain[i], cycles[i], samples[i], bits[i], pmin[i], pmax[i], fmin[i], fmax[i]};
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, "", e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  return read_scenario(in, path);
}

void save_scenario(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_scenario(out, scenario);
}

}  // namespace flalloc
