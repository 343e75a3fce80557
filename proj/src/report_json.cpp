#include "flalloc/report_json.hpp"

#include <cmath>

#include "flalloc/kv_document.hpp"

namespace flalloc {

namespace {

nlohmann::json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::json numbers(const std::vector<double>& xs) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

}  // namespace

nlohmann::json report_to_json(const SolveReport& r) {
  nlohmann::json j;
  j["scheme"] = r.scheme;
  j["weights"] = {{"w1", r.weights.energy}, {"w2", r.weights.time}};
  j["converged"] = r.converged;
  j["outer_iters"] = r.outer_iters;
  j["newton_iters"] = r.newton_iters;
  j["objective_trace"] = numbers(r.objective_trace);
  j["allocation"] = {
      {"power_w", numbers(r.allocation.power_w)},
      {"bandwidth_hz", numbers(r.allocation.bandwidth_hz)},
      {"freq_hz", numbers(r.allocation.freq_hz)},
      {"round_deadline_s", number(r.allocation.round_deadline_s)},
  };
  const CostBreakdown& c = r.cost;
  j["cost"] = {
      {"uplink_time_s", numbers(c.uplink_time_s)},
      {"comp_time_s", numbers(c.comp_time_s)},
      {"energy_trans_round_j", numbers(c.energy_trans_round_j)},
      {"energy_cmp_round_j", numbers(c.energy_cmp_round_j)},
      {"energy_trans_j", number(c.energy_trans_j)},
      {"energy_cmp_j", number(c.energy_cmp_j)},
      {"total_energy_j", number(c.total_energy_j)},
      {"round_delay_s", number(c.round_delay_s)},
      {"total_delay_s", number(c.total_delay_s)},
      {"objective", number(c.objective)},
  };
  return j;
}

std::string dump_report(const SolveReport& report) { return report_to_json(report).dump(2) + "\n"; }

void write_report_csv(std::ostream& out, const SolveReport& r) {
  out << "device,power_w,bandwidth_hz,freq_hz,uplink_time_s,comp_time_s,energy_trans_round_j,"
         "energy_cmp_round_j\n";
  const Allocation& a = r.allocation;
  const CostBreakdown& c = r.cost;
  for (std::size_t n = 0; n < a.power_w.size(); ++n) {
    out << n << ',' << format_double(a.power_w[n]) << ',' << format_double(a.bandwidth_hz[n]) << ','
        << format_double(a.freq_hz[n]) << ',' << format_double(c.uplink_time_s[n]) << ','
        << format_double(c.comp_time_s[n]) << ',' << format_double(c.energy_trans_round_j[n]) << ','
        << format_double(c.energy_cmp_round_j[n]) << '\n';
  }
}

}  // namespace flalloc
