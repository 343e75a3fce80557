#include "flalloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "flalloc/rng.hpp"
#include "flalloc/scenario_io.hpp"
#include "flalloc/sp1_solver.hpp"
#include "flalloc/units.hpp"

namespace flalloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string_view> kSpecKeys = {"axis",    "values",        "weights",
                                                 "repetitions", "seed_base", "total_samples",
                                                 "benchmark",   "threads"};

const char* const kSweepHeader =
    "axis,axis_value,scheme,w1,w2,repetitions,mean_energy_j,mean_trans_energy_j,"
    "mean_cmp_energy_j,mean_delay_s,mean_objective,solver_iters_mean,failures_count";

const char* const kComparisonHeader = "scheme,deadline_s,p_max_dbm,scenarios,skipped,mean_energy_j";

/// Runs fn(i) for i in [0, count) on a small pool. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, int line, const char* field) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || *end != '\0') throw ParseError("<csv>", line, field, "not a number: " + cell);
  return v;
}

int parse_int_cell(const std::string& cell, int line, const char* field) {
  const double v = parse_cell(cell, line, field);
  if (v != std::floor(v)) throw ParseError("<csv>", line, field, "not an integer: " + cell);
  return static_cast<int>(v);
}

std::vector<std::vector<std::string>> read_csv_body(std::istream& in, const char* header,
                                                    std::size_t columns) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("<csv>", 1, "", "empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ParseError("<csv>", 1, "", "unexpected header: " + line);
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != columns) {
      throw ParseError("<csv>", line_no, "", "expected " + std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

std::string describe_failure(const std::exception& e) { return e.what(); }

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::WeightPair: return "weight_pair";
    case SweepAxis::PMaxDbm: return "p_max_dbm";
    case SweepAxis::FMaxGhz: return "f_max_ghz";
    case SweepAxis::NumDevices: return "num_devices";
    case SweepAxis::RadiusKm: return "radius_km";
    case SweepAxis::LocalIters: return "local_iters";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::WeightPair, SweepAxis::PMaxDbm, SweepAxis::FMaxGhz,
                      SweepAxis::NumDevices, SweepAxis::RadiusKm, SweepAxis::LocalIters}) {
    if (name == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

void SweepSpec::validate() const {
  if (axis_values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
  if (!std::is_sorted(axis_values.begin(), axis_values.end())) {
    throw std::invalid_argument("sweep axis values must be sorted");
  }
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (axis != SweepAxis::WeightPair && weight_energy.empty()) {
    throw std::invalid_argument("sweep needs at least one weight pair");
  }
  for (double w : axis == SweepAxis::WeightPair ? axis_values : weight_energy) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w1 must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < axis_values.size(); ++i) {
    (void)sweep_config(*this, axis_values[i], 0).validated();
  }
}

SweepSpec sweep_spec_from_document(const KvDocument& doc) {
  SweepSpec spec;
  spec.base = config_from_document(doc, kSpecKeys);
  try {
    spec.axis = parse_sweep_axis(doc.get_string("axis"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(doc.source(), 0, "axis", e.what());
  }
  spec.axis_values = doc.get_doubles("values");
  if (doc.has("weights")) spec.weight_energy = doc.get_doubles("weights");
  spec.repetitions = static_cast<int>(doc.get_int_or("repetitions", spec.repetitions));
  spec.seed_base = static_cast<std::uint64_t>(
      doc.get_int_or("seed_base", static_cast<std::int64_t>(spec.seed_base)));
  spec.total_samples = doc.get_double_or("total_samples", spec.total_samples);
  spec.benchmark = doc.get_int_or("benchmark", 1) != 0;
  spec.threads = static_cast<int>(doc.get_int_or("threads", 0));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(doc.source(), 0, "", e.what());
  }
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  return sweep_spec_from_document(KvDocument::parse_file(path));
}

SystemConfig sweep_config(const SweepSpec& spec, double v, int repetition) {
  SystemConfig c = spec.base;
  c.rng_seed = spec.seed_base + static_cast<std::uint64_t>(repetition);
  switch (spec.axis) {
    case SweepAxis::WeightPair:
      c.weight_energy = v;
      c.weight_time = 1.0 - v;
      break;
    case SweepAxis::PMaxDbm: c.profile.p_max_w = dbm_to_watts(v); break;
    case SweepAxis::FMaxGhz: c.profile.f_max_hz = v * 1e9; break;
    case SweepAxis::NumDevices:
      c.num_devices = static_cast<int>(std::lround(v));
      c.profile.samples_per_device = spec.total_samples / c.num_devices;
      break;
    case SweepAxis::RadiusKm: c.area_radius_km = v; break;
    case SweepAxis::LocalIters: c.local_iters = static_cast<int>(std::lround(v)); break;
  }
  return c;
}

SweepOutput run_sweep(const SweepSpec& spec, const LogSink& log) {
  spec.validate();
  struct Cell {
    double axis_value;
    std::string scheme;
    double w1;
  };
  std::vector<Cell> cells;
  for (double v : spec.axis_values) {
    if (spec.axis == SweepAxis::WeightPair) {
      cells.push_back({v, "joint", v});
    } else {
      for (double w : spec.weight_energy) cells.push_back({v, "joint", w});
    }
    if (spec.benchmark) cells.push_back({v, "benchmark", kNaN});
  }
  const std::size_t reps = static_cast<std::size_t>(spec.repetitions);
  std::vector<SweepSample> samples(cells.size() * reps);
  std::mutex log_mutex;

  parallel_for(samples.size(), spec.threads, [&](std::size_t idx) {
    const Cell& cell = cells[idx / reps];
    const int rep = static_cast<int>(idx % reps);
    SweepSample& out = samples[idx];
    out.axis_value = cell.axis_value;
    out.scheme = cell.scheme;
    out.w1 = cell.w1;
    SystemConfig cfg = sweep_config(spec, cell.axis_value, rep);
    out.seed = cfg.rng_seed;
    try {
      if (cell.scheme == "joint") {
        cfg.weight_energy = cell.w1;
        cfg.weight_time = 1.0 - cell.w1;
      }
      const Scenario scenario = generate_scenario(cfg);
      CostBreakdown cost;
      if (cell.scheme == "joint") {
        const SolveReport r = solve(scenario);
        cost = r.cost;
        out.iterations = r.outer_iters;
      } else {
        const RandomVariant variant = spec.axis == SweepAxis::FMaxGhz ? RandomVariant::RandomPower
                                                                      : RandomVariant::RandomFrequency;
        const Allocation a = baseline_random(scenario, variant, derive_seed(cfg.rng_seed, 2));
        cost = evaluate(scenario, a, scenario.config.weights());
        cost.objective = kNaN;
      }
      out.energy_j = cost.total_energy_j;
      out.energy_trans_j = cost.energy_trans_j;
      out.energy_cmp_j = cost.energy_cmp_j;
      out.delay_s = cost.total_delay_s;
      out.objective = cost.objective;
    } catch (const std::exception& e) {
      out.failed = true;
      out.reason = describe_failure(e);
      if (log) {
        std::lock_guard lock(log_mutex);
        log(std::string(to_string(spec.axis)) + "=" + format_double(cell.axis_value) + " seed " +
            std::to_string(out.seed) + " " + cell.scheme + ": " + out.reason);
      }
    }
  });

  SweepOutput result;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepResult row;
    row.axis = to_string(spec.axis);
    row.axis_value = cells[c].axis_value;
    row.scheme = cells[c].scheme;
    row.w1 = cells[c].w1;
    row.w2 = std::isnan(row.w1) ? kNaN : 1.0 - row.w1;
    row.repetitions = spec.repetitions;
    std::vector<double> e, et, ec, d, o, it;
    for (std::size_t r = 0; r < reps; ++r) {
      const SweepSample& s = samples[c * reps + r];
      if (s.failed) {
        ++row.failures_count;
        continue;
      }
      e.push_back(s.energy_j);
      et.push_back(s.energy_trans_j);
      ec.push_back(s.energy_cmp_j);
      d.push_back(s.delay_s);
      o.push_back(s.objective);
      it.push_back(s.iterations);
    }
    row.mean_energy_j = mean_of(e);
    row.mean_trans_energy_j = mean_of(et);
    row.mean_cmp_energy_j = mean_of(ec);
    row.mean_delay_s = mean_of(d);
    row.mean_objective = mean_of(o);
    row.solver_iters_mean = mean_of(it);
    result.rows.push_back(row);
  }
  result.samples = std::move(samples);
  return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows) {
  out << kSweepHeader << '\n';
  for (const SweepResult& r : rows) {
    out << r.axis << ',' << format_double(r.axis_value) << ',' << r.scheme << ','
        << format_double(r.w1) << ',' << format_double(r.w2) << ',' << r.repetitions << ','
        << format_double(r.mean_energy_j) << ',' << format_double(r.mean_trans_energy_j) << ','
        << format_double(r.mean_cmp_energy_j) << ',' << format_double(r.mean_delay_s) << ','
        << format_double(r.mean_objective) << ',' << format_double(r.solver_iters_mean) << ','
        << r.failures_count << '\n';
  }
}

std::vector<SweepResult> read_sweep_csv(std::istream& in) {
  std::vector<SweepResult> rows;
  int line = 1;
  for (const auto& c : read_csv_body(in, kSweepHeader, 13)) {
    ++line;
    SweepResult r;
    r.axis = c[0];
    r.axis_value = parse_cell(c[1], line, "axis_value");
    r.scheme = c[2];
    r.w1 = parse_cell(c[3], line, "w1");
    r.w2 = parse_cell(c[4], line, "w2");
    r.repetitions = parse_int_cell(c[5], line, "repetitions");
    r.mean_energy_j = parse_cell(c[6], line, "mean_energy_j");
    r.mean_trans_energy_j = parse_cell(c[7], line, "mean_trans_energy_j");
    r.mean_cmp_energy_j = parse_cell(c[8], line, "mean_cmp_energy_j");
    r.mean_delay_s = parse_cell(c[9], line, "mean_delay_s");
    r.mean_objective = parse_cell(c[10], line, "mean_objective");
    r.solver_iters_mean = parse_cell(c[11], line, "solver_iters_mean");
    r.failures_count = parse_int_cell(c[12], line, "failures_count");
    rows.push_back(r);
  }
  return rows;
}

void ComparisonSpec::validate() const {
  if (deadlines_s.empty() || p_max_dbm.empty()) {
    throw std::invalid_argument("comparison needs deadlines and p_max values");
  }
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  for (double t : deadlines_s) {
    if (!(t > 0.0)) throw std::invalid_argument("deadlines must be positive");
  }
}

namespace {

double random_scheme_energy(const Scenario& s, double deadline_total_s, std::uint64_t seed) {
  check_deadline_feasible(s, deadline_total_s);
  const std::size_t n_dev = s.size();
  const double deadline = deadline_total_s / s.config.global_rounds;
  Allocation a;
  a.power_w.resize(n_dev);
  a.freq_hz.resize(n_dev);
  a.bandwidth_hz.assign(n_dev, s.config.total_bandwidth_hz / static_cast<double>(n_dev));
  for (std::size_t n = 0; n < n_dev; ++n) a.power_w[n] = s.devices[n].p_max_w;
  const auto up = uplink_times(s, a.power_w, a.bandwidth_hz);
  Rng rng(seed);
  for (std::size_t n = 0; n < n_dev; ++n) {
    const Device& d = s.devices[n];
    const auto req = required_frequency(d, deadline, up[n], s.config.local_iters);
    const double lo = std::clamp(req.value_or(d.f_max_hz), d.f_min_hz, d.f_max_hz);
    a.freq_hz[n] = rng.uniform(lo, d.f_max_hz);
  }
  a.round_deadline_s = deadline;
  return evaluate(s, a, Weights{1.0, 0.0}).total_energy_j;
}

}  // namespace

ComparisonOutput run_comparison(const ComparisonSpec& spec, const LogSink& log) {
  spec.validate();
  const std::size_t n_t = spec.deadlines_s.size();
  const std::size_t n_p = spec.p_max_dbm.size();
  const std::size_t reps = static_cast<std::size_t>(spec.repetitions);
  const std::size_t n_s = kComparisonSchemes.size();

  struct Job {
    std::vector<double> energy;
    std::string failure;
  };
  std::vector<Job> jobs(n_t * n_p * reps);
  parallel_for(jobs.size(), spec.threads, [&](std::size_t idx) {
    const std::size_t ti = idx / (n_p * reps);
    const std::size_t pi = (idx / reps) % n_p;
    const std::size_t rep = idx % reps;
    const double deadline = spec.deadlines_s[ti];
    SystemConfig cfg = spec.base;
    cfg.profile.p_max_w = dbm_to_watts(spec.p_max_dbm[pi]);
    cfg.rng_seed = spec.seed_base + rep;
    Job& job = jobs[idx];
    try {
      const Scenario s = generate_scenario(cfg);
      SolveOptions opt;
      opt.mode = SolveMode::FixedDeadline;
      opt.deadline_total_s = deadline;
      job.energy.push_back(solve(s, opt).cost.total_energy_j);
      job.energy.push_back(baseline_comm_only(s, deadline).cost.total_energy_j);
      job.energy.push_back(baseline_comp_only(s, deadline).cost.total_energy_j);
      job.energy.push_back(random_scheme_energy(s, deadline, derive_seed(cfg.rng_seed, 1)));
    } catch (const std::exception& e) {
      job.failure = e.what();
      job.energy.clear();
    }
  });

  ComparisonOutput out;
  for (std::size_t ti = 0; ti < n_t; ++ti) {
    for (std::size_t pi = 0; pi < n_p; ++pi) {
      std::vector<std::vector<double>> per_scheme(n_s);
      int skipped = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const Job& job = jobs[(ti * n_p + pi) * reps + rep];
        const std::uint64_t seed = spec.seed_base + rep;
        if (!job.failure.empty()) {
          ++skipped;
          if (log) {
            log("T=" + format_double(spec.deadlines_s[ti]) + " p_max=" +
                format_double(spec.p_max_dbm[pi]) + " seed " + std::to_string(seed) +
                " skipped: " + job.failure);
          }
          continue;
        }
        for (std::size_t k = 0; k < n_s; ++k) {
          per_scheme[k].push_back(job.energy[k]);
          out.samples.push_back(
              {kComparisonSchemes[k], spec.deadlines_s[ti], spec.p_max_dbm[pi], seed, job.energy[k]});
        }
      }
      for (std::size_t k = 0; k < n_s; ++k) {
        out.rows.push_back({kComparisonSchemes[k], spec.deadlines_s[ti], spec.p_max_dbm[pi],
                            static_cast<int>(per_scheme[k].size()), skipped,
                            mean_of(per_scheme[k])});
      }
    }
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << kComparisonHeader << '\n';
  for (const ComparisonRow& r : rows) {
    out << r.scheme << ',' << format_double(r.deadline_s) << ',' << format_double(r.p_max_dbm) << ','
        << r.scenarios << ',' << r.skipped << ',' << format_double(r.mean_energy_j) << '\n';
  }
}

std::vector<ComparisonRow> read_comparison_csv(std::istream& in) {
  std::vector<ComparisonRow> rows;
  int line = 1;
  for (const auto& c : read_csv_body(in, kComparisonHeader, 6)) {
    ++line;
    ComparisonRow r;
    r.scheme = c[0];
    r.deadline_s = parse_cell(c[1], line, "deadline_s");
    r.p_max_dbm = parse_cell(c[2], line, "p_max_dbm");
    r.scenarios = parse_int_cell(c[3], line, "scenarios");
    r.skipped = parse_int_cell(c[4], line, "skipped");
    r.mean_energy_j = parse_cell(c[5], line, "mean_energy_j");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace flalloc
