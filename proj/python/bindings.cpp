#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "flalloc/harness.hpp"
#include "flalloc/lambert_w.hpp"
#include "flalloc/orchestrator.hpp"
#include "flalloc/report_json.hpp"
#include "flalloc/scenario_io.hpp"

namespace py = pybind11;
using namespace flalloc;

namespace {

template <typename T, typename Writer>
std::string to_text(const T& value, Writer write) {
  std::ostringstream os;
  write(os, value);
  return os.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy/delay resource allocation for federated learning over FDMA";

  // Exception types live as long as the module; the handles stay valid.
  static const py::handle infeasible =
      py::exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError).release();
  static const py::handle parse_error =
      py::exception<ParseError>(m, "ParseError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InfeasibleError& e) {
      py::object exc = infeasible(e.what());
      exc.attr("devices") = py::cast(e.devices());
      py::set_error(infeasible, exc);
    } catch (const ParseError& e) {
      py::object exc = parse_error(e.what());
      exc.attr("line") = e.line();
      exc.attr("field") = e.field();
      py::set_error(parse_error, exc);
    }
  });

  py::class_<Weights>(m, "Weights")
      .def(py::init<double, double>(), py::arg("energy") = 0.5, py::arg("time") = 0.5)
      .def_readwrite("energy", &Weights::energy)
      .def_readwrite("time", &Weights::time);

  py::class_<DeviceProfile>(m, "DeviceProfile")
      .def(py::init<>())
      .def_readwrite("samples_per_device", &DeviceProfile::samples_per_device)
      .def_readwrite("upload_bits", &DeviceProfile::upload_bits)
      .def_readwrite("cycles_min", &DeviceProfile::cycles_min)
      .def_readwrite("cycles_max", &DeviceProfile::cycles_max)
      .def_readwrite("p_min_w", &DeviceProfile::p_min_w)
      .def_readwrite("p_max_w", &DeviceProfile::p_max_w)
      .def_readwrite("f_min_hz", &DeviceProfile::f_min_hz)
      .def_readwrite("f_max_hz", &DeviceProfile::f_max_hz)
      .def_readwrite("shadowing_std_db", &DeviceProfile::shadowing_std_db);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("total_bandwidth_hz", &SystemConfig::total_bandwidth_hz)
      .def_readwrite("noise_psd_w_per_hz", &SystemConfig::noise_psd_w_per_hz)
      .def_readwrite("kappa", &SystemConfig::kappa)
      .def_readwrite("global_rounds", &SystemConfig::global_rounds)
      .def_readwrite("local_iters", &SystemConfig::local_iters)
      .def_readwrite("weight_energy", &SystemConfig::weight_energy)
      .def_readwrite("weight_time", &SystemConfig::weight_time)
      .def_readwrite("num_devices", &SystemConfig::num_devices)
      .def_readwrite("area_radius_km", &SystemConfig::area_radius_km)
      .def_readwrite("rng_seed", &SystemConfig::rng_seed)
      .def_readwrite("profile", &SystemConfig::profile)
      .def("weights", &SystemConfig::weights)
      .def("validated", &SystemConfig::validated)
      .def("to_text", [](const SystemConfig& c) { return to_text(c, write_config); });

  py::class_<Device>(m, "Device")
      .def(py::init<>())
      .def_readwrite("gain", &Device::gain)
      .def_readwrite("cycles_per_sample", &Device::cycles_per_sample)
      .def_readwrite("num_samples", &Device::num_samples)
      .def_readwrite("upload_bits", &Device::upload_bits)
      .def_readwrite("p_min_w", &Device::p_min_w)
      .def_readwrite("p_max_w", &Device::p_max_w)
      .def_readwrite("f_min_hz", &Device::f_min_hz)
      .def_readwrite("f_max_hz", &Device::f_max_hz);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("config", &Scenario::config)
      .def_readwrite("devices", &Scenario::devices)
      .def_readwrite("distances_km", &Scenario::distances_km)
      .def("__len__", &Scenario::size)
      .def("validate", &Scenario::validate)
      .def("to_text", [](const Scenario& s) { return to_text(s, write_scenario); });

  py::class_<Allocation>(m, "Allocation")
      .def(py::init<>())
      .def_readwrite("power_w", &Allocation::power_w)
      .def_readwrite("bandwidth_hz", &Allocation::bandwidth_hz)
      .def_readwrite("freq_hz", &Allocation::freq_hz)
      .def_readwrite("round_deadline_s", &Allocation::round_deadline_s);

  py::class_<CostBreakdown>(m, "CostBreakdown")
      .def_readonly("uplink_time_s", &CostBreakdown::uplink_time_s)
      .def_readonly("comp_time_s", &CostBreakdown::comp_time_s)
      .def_readonly("energy_trans_round_j", &CostBreakdown::energy_trans_round_j)
      .def_readonly("energy_cmp_round_j", &CostBreakdown::energy_cmp_round_j)
      .def_readonly("energy_trans_j", &CostBreakdown::energy_trans_j)
      .def_readonly("energy_cmp_j", &CostBreakdown::energy_cmp_j)
      .def_readonly("total_energy_j", &CostBreakdown::total_energy_j)
      .def_readonly("round_delay_s", &CostBreakdown::round_delay_s)
      .def_readonly("total_delay_s", &CostBreakdown::total_delay_s)
      .def_readonly("objective", &CostBreakdown::objective);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("allocation", &SolveReport::allocation)
      .def_readonly("cost", &SolveReport::cost)
      .def_readonly("weights", &SolveReport::weights)
      .def_readonly("outer_iters", &SolveReport::outer_iters)
      .def_readonly("objective_trace", &SolveReport::objective_trace)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("newton_iters", &SolveReport::newton_iters)
      .def_readonly("scheme", &SolveReport::scheme)
      .def("to_json", [](const SolveReport& r) { return dump_report(r); })
      .def("to_csv", [](const SolveReport& r) { return to_text(r, write_report_csv); });

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("axis", &SweepResult::axis)
      .def_readonly("axis_value", &SweepResult::axis_value)
      .def_readonly("scheme", &SweepResult::scheme)
      .def_readonly("w1", &SweepResult::w1)
      .def_readonly("w2", &SweepResult::w2)
      .def_readonly("repetitions", &SweepResult::repetitions)
      .def_readonly("mean_energy_j", &SweepResult::mean_energy_j)
      .def_readonly("mean_trans_energy_j", &SweepResult::mean_trans_energy_j)
      .def_readonly("mean_cmp_energy_j", &SweepResult::mean_cmp_energy_j)
      .def_readonly("mean_delay_s", &SweepResult::mean_delay_s)
      .def_readonly("mean_objective", &SweepResult::mean_objective)
      .def_readonly("solver_iters_mean", &SweepResult::solver_iters_mean)
      .def_readonly("failures_count", &SweepResult::failures_count);

  m.def("generate_scenario", &generate_scenario, py::arg("config"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("evaluate", py::overload_cast<const Scenario&, const Allocation&, Weights>(&evaluate),
        py::arg("scenario"), py::arg("allocation"), py::arg("weights"));
  m.def(
      "check_feasibility",
      [](const Scenario& s, const Allocation& a) {
        std::vector<std::string> out;
        for (const Violation& v : check_feasibility(s, a)) out.push_back(v.describe());
        return out;
      },
      py::arg("scenario"), py::arg("allocation"), "Descriptions of every violated constraint.");

  m.def(
      "solve",
      [](const Scenario& s, std::optional<double> deadline_total_s, int max_outer, double tolerance) {
        SolveOptions opt;
        opt.max_outer = max_outer;
        opt.tolerance = tolerance;
        if (deadline_total_s) {
          opt.mode = SolveMode::FixedDeadline;
          opt.deadline_total_s = *deadline_total_s;
        }
        py::gil_scoped_release release;
        return solve(s, opt);
      },
      py::arg("scenario"), py::arg("deadline_total_s") = py::none(), py::arg("max_outer") = 20,
      py::arg("tolerance") = 1e-5,
      "Weighted solve, or energy-only under a fixed total deadline when one is given.");

  m.def(
      "run_sweep",
      [](const std::string& spec_path, std::optional<int> repetitions, int threads) {
        SweepSpec spec = load_sweep_spec(spec_path);
        if (repetitions) spec.repetitions = *repetitions;
        spec.threads = threads;
        py::gil_scoped_release release;
        return run_sweep(spec).rows;
      },
      py::arg("spec_path"), py::arg("repetitions") = py::none(), py::arg("threads") = 0);
  m.def("sweep_csv", [](const std::vector<SweepResult>& rows) { return to_text(rows, write_sweep_csv); },
        py::arg("rows"));

  m.def("lambert_w0", &lambert_w0, py::arg("x"));
  m.def("lambert_wm1", &lambert_wm1, py::arg("x"));
}
