// flsim: command line front end for the FDMA federated-learning allocator.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "flalloc/grid_oracle.hpp"
#include "flalloc/harness.hpp"
#include "flalloc/orchestrator.hpp"
#include "flalloc/report_json.hpp"
#include "flalloc/scenario_io.hpp"
#include "json.hpp"

using namespace flalloc;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitError = 1;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--config", c.config_path, "key = value config file");
  cmd->add_option("--seed", c.seed, "random seed (scenario seed or sweep seed base)");
  cmd->add_option("--out", c.out_path, "output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

SystemConfig base_config(const Common& c) {
  SystemConfig cfg = c.config_path.empty() ? SystemConfig{} : load_config(c.config_path);
  if (c.seed) cfg.rng_seed = *c.seed;
  return cfg;
}

/// Writes `text` to --out or stdout.
void emit(const Common& c, const std::string& text) {
  if (c.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + c.out_path);
  out << text;
}

nlohmann::json sweep_json(const std::vector<SweepResult>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SweepResult& r : rows) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    arr.push_back({{"axis", r.axis},
                   {"axis_value", r.axis_value},
                   {"scheme", r.scheme},
                   {"w1", num(r.w1)},
                   {"w2", num(r.w2)},
                   {"repetitions", r.repetitions},
                   {"mean_energy_j", num(r.mean_energy_j)},
                   {"mean_trans_energy_j", num(r.mean_trans_energy_j)},
                   {"mean_cmp_energy_j", num(r.mean_cmp_energy_j)},
                   {"mean_delay_s", num(r.mean_delay_s)},
                   {"mean_objective", num(r.mean_objective)},
                   {"solver_iters_mean", num(r.solver_iters_mean)},
                   {"failures_count", r.failures_count}});
  }
  return arr;
}

nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ComparisonRow& r : rows) {
    arr.push_back({{"scheme", r.scheme},
                   {"deadline_s", r.deadline_s},
                   {"p_max_dbm", r.p_max_dbm},
                   {"scenarios", r.scenarios},
                   {"skipped", r.skipped},
                   {"mean_energy_j",
                    std::isfinite(r.mean_energy_j) ? nlohmann::json(r.mean_energy_j) : nullptr}});
  }
  return arr;
}

void log_stderr(const std::string& line) { std::cerr << "flsim: " << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy/delay resource allocation for federated learning over FDMA"};
  app.require_subcommand(1);

  Common solve_c;
  std::string scenario_path, mode = "weighted", trace_path;
  double deadline = 0.0;
  auto* solve_cmd = app.add_subcommand("solve", "solve one scenario and print the report");
  add_common(solve_cmd, solve_c, "json");
  solve_cmd->add_option("--scenario", scenario_path, "scenario file (generated from the config otherwise)");
  solve_cmd->add_option("--mode", mode, "weighted or fixed")->check(CLI::IsMember({"weighted", "fixed"}));
  solve_cmd->add_option("--deadline", deadline, "total training deadline T in seconds (fixed mode)");
  solve_cmd->add_option("--trace", trace_path, "write Newton iterations as JSON lines");

  Common gen_c;
  auto* gen_cmd = app.add_subcommand("generate", "write a generated scenario file");
  add_common(gen_cmd, gen_c, "csv");

  Common sweep_c;
  std::string spec_path, samples_path;
  std::optional<int> reps, threads;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep and write the summary");
  add_common(sweep_cmd, sweep_c, "csv");
  sweep_cmd->add_option("--spec", spec_path, "sweep spec file")->required();
  sweep_cmd->add_option("--repetitions", reps, "override the spec's repetitions");
  sweep_cmd->add_option("--threads", threads, "worker threads (0: all cores)");

  Common cmp_c;
  ComparisonSpec cmp_spec;
  auto* cmp_cmd = app.add_subcommand("compare", "fixed-deadline energy of joint and baseline schemes");
  add_common(cmp_cmd, cmp_c, "csv");
  cmp_cmd->add_option("--deadlines", cmp_spec.deadlines_s, "total deadlines T in seconds")->delimiter(',');
  cmp_cmd->add_option("--pmax", cmp_spec.p_max_dbm, "maximum powers in dBm")->delimiter(',');
  cmp_cmd->add_option("--repetitions", cmp_spec.repetitions, "scenarios per cell");
  cmp_cmd->add_option("--threads", cmp_spec.threads, "worker threads (0: all cores)");

  Common oracle_c;
  int oracle_n = 2, trials = 20, points = 200;
  auto* oracle_cmd = app.add_subcommand("oracle", "compare the solver with exhaustive grid search");
  add_common(oracle_cmd, oracle_c, "csv");
  oracle_cmd->add_option("--n", oracle_n, "devices per instance")->check(CLI::Range(1, 3));
  oracle_cmd->add_option("--trials", trials, "number of seeded instances")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--points", points, "grid points per axis")->check(CLI::Range(2, 2000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    if (*solve_cmd) {
      const Scenario s = scenario_path.empty() ? generate_scenario(base_config(solve_c))
                                               : load_scenario(scenario_path);
      SolveOptions opt;
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw std::runtime_error("cannot write " + trace_path);
        opt.newton_trace = [&trace](const NewtonStep& st) { trace << format_trace_line(st) << '\n'; };
      }
      if (mode == "fixed") {
        opt.mode = SolveMode::FixedDeadline;
        opt.deadline_total_s = deadline;
      }
      const SolveReport r = solve(s, opt);
      std::ostringstream os;
      if (solve_c.format == "json") {
        os << dump_report(r);
      } else {
        write_report_csv(os, r);
      }
      emit(solve_c, os.str());
    } else if (*gen_cmd) {
      std::ostringstream os;
      write_scenario(os, generate_scenario(base_config(gen_c)));
      emit(gen_c, os.str());
    } else if (*sweep_cmd) {
      SweepSpec spec = load_sweep_spec(spec_path);
      if (!sweep_c.config_path.empty()) {
        const SystemConfig cfg = load_config(sweep_c.config_path);
        spec.base = cfg;
      }
      if (sweep_c.seed) spec.seed_base = *sweep_c.seed;
      if (reps) spec.repetitions = *reps;
      if (threads) spec.threads = *threads;
      const SweepOutput out = run_sweep(spec, log_stderr);
      std::ostringstream os;
      if (sweep_c.format == "json") {
        os << sweep_json(out.rows).dump(2) << '\n';
      } else {
        write_sweep_csv(os, out.rows);
      }
      emit(sweep_c, os.str());
    } else if (*cmp_cmd) {
      cmp_spec.base = base_config(cmp_c);
      if (cmp_c.seed) cmp_spec.seed_base = *cmp_c.seed;
      const ComparisonOutput out = run_comparison(cmp_spec, log_stderr);
      std::ostringstream os;
      if (cmp_c.format == "json") {
        os << comparison_json(out.rows).dump(2) << '\n';
      } else {
        write_comparison_csv(os, out.rows);
      }
      emit(cmp_c, os.str());
    } else if (*oracle_cmd) {
      SystemConfig cfg = base_config(oracle_c);
      cfg.num_devices = oracle_n;
      const std::uint64_t seed0 = oracle_c.seed.value_or(1);
      std::ostringstream os;
      nlohmann::json arr = nlohmann::json::array();
      if (oracle_c.format == "csv") os << "seed,solver_objective,grid_objective,relative_gap\n";
      double worst = -1e300;
      for (int t = 0; t < trials; ++t) {
        cfg.rng_seed = seed0 + static_cast<std::uint64_t>(t);
        const Scenario s = generate_scenario(cfg);
        const double alg = solve(s).cost.objective;
        const double grid = grid_search_joint(s, s.config.validated().weights(), points).objective;
        const double gap = (alg - grid) / grid;
        worst = std::max(worst, gap);
        if (oracle_c.format == "csv") {
          os << cfg.rng_seed << ',' << format_double(alg) << ',' << format_double(grid) << ','
             << format_double(gap) << '\n';
        } else {
          arr.push_back({{"seed", cfg.rng_seed}, {"solver_objective", alg}, {"grid_objective", grid},
                         {"relative_gap", gap}});
        }
      }
      if (oracle_c.format == "json") os << arr.dump(2) << '\n';
      emit(oracle_c, os.str());
      std::fprintf(stderr, "max relative gap (solver - grid) / grid: %.3e\n", worst);
    }
  } catch (const InfeasibleError& e) {
    log_stderr(std::string("infeasible: ") + e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    log_stderr(std::string("error: ") + e.what());
    return kExitError;
  }
  return 0;
}
