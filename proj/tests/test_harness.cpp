#include <cmath>
#include <sstream>

#include "doctest.h"
#include "flalloc/harness.hpp"
#include "flalloc/units.hpp"
#include "support.hpp"

using namespace flalloc;

namespace {

SweepSpec small_spec(SweepAxis axis, std::vector<double> values) {
  SweepSpec spec;
  spec.axis = axis;
  spec.axis_values = std::move(values);
  spec.weight_energy = {0.7, 0.3};
  spec.repetitions = 3;
  spec.base.num_devices = 6;
  spec.threads = 2;
  return spec;
}

std::string csv_of(const std::vector<SweepResult>& rows) {
  std::ostringstream out;
  write_sweep_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("axis names") {
  for (SweepAxis a : {SweepAxis::WeightPair, SweepAxis::PMaxDbm, SweepAxis::FMaxGhz,
                      SweepAxis::NumDevices, SweepAxis::RadiusKm, SweepAxis::LocalIters}) {
    CHECK(parse_sweep_axis(to_string(a)) == a);
  }
  CHECK_THROWS_AS(parse_sweep_axis("bandwidth"), std::invalid_argument);
}

TEST_CASE("axis values land in the scenario config") {
  SweepSpec spec = small_spec(SweepAxis::PMaxDbm, {10, 20});
  spec.seed_base = 40;
  SystemConfig c = sweep_config(spec, 20, 2);
  CHECK(c.rng_seed == 42);
  CHECK(c.profile.p_max_w == doctest::Approx(0.1).epsilon(1e-12));
  spec.axis = SweepAxis::NumDevices;
  c = sweep_config(spec, 40, 0);
  CHECK(c.num_devices == 40);
  CHECK(c.profile.samples_per_device == 625.0);
  spec.axis = SweepAxis::FMaxGhz;
  CHECK(sweep_config(spec, 1.5, 0).profile.f_max_hz == 1.5e9);
  spec.axis = SweepAxis::WeightPair;
  c = sweep_config(spec, 0.3, 0);
  CHECK(c.weight_energy == 0.3);
  CHECK(c.weight_time == 0.7);
}

TEST_CASE("spec documents") {
  std::istringstream in(
      "axis = radius_km\nvalues = 0.1 0.2\nweights = 0.5\nrepetitions = 4\nseed_base = 9\n"
      "num_devices = 12\nbenchmark = 0\n");
  const SweepSpec spec = sweep_spec_from_document(KvDocument::parse(in, "spec"));
  CHECK(spec.axis == SweepAxis::RadiusKm);
  CHECK(spec.axis_values == std::vector<double>{0.1, 0.2});
  CHECK(spec.weight_energy == std::vector<double>{0.5});
  CHECK(spec.repetitions == 4);
  CHECK(spec.seed_base == 9);
  CHECK(spec.base.num_devices == 12);
  CHECK(!spec.benchmark);

  std::istringstream bad_axis("axis = nope\nvalues = 1\n");
  CHECK_THROWS_AS(sweep_spec_from_document(KvDocument::parse(bad_axis)), ParseError);
  std::istringstream unsorted("axis = radius_km\nvalues = 0.2 0.1\n");
  CHECK_THROWS_AS(sweep_spec_from_document(KvDocument::parse(unsorted)), ParseError);
  std::istringstream typo("axis = radius_km\nvalues = 0.1\nrepetition = 3\n");
  CHECK_THROWS_AS(sweep_spec_from_document(KvDocument::parse(typo)), ParseError);
}

TEST_CASE("sweep rows aggregate the samples") {
  const SweepSpec spec = small_spec(SweepAxis::PMaxDbm, {6, 12});
  const SweepOutput out = run_sweep(spec);
  // (2 weight pairs + benchmark) per axis value.
  REQUIRE(out.rows.size() == 6);
  REQUIRE(out.samples.size() == 18);
  for (const SweepResult& r : out.rows) {
    CHECK(r.axis == "p_max_dbm");
    CHECK(r.repetitions + r.failures_count == 3);
    double e = 0.0;
    int k = 0;
    for (const SweepSample& s : out.samples) {
      if (s.axis_value == r.axis_value && s.scheme == r.scheme && !s.failed &&
          (r.scheme == "benchmark" || s.w1 == r.w1)) {
        e += s.energy_j;
        ++k;
      }
    }
    CHECK(k == r.repetitions);
    CHECK(r.mean_energy_j == doctest::Approx(e / k).epsilon(1e-12));
    CHECK(r.mean_energy_j == doctest::Approx(r.mean_trans_energy_j + r.mean_cmp_energy_j).epsilon(1e-12));
    if (r.scheme == "benchmark") {
      CHECK(std::isnan(r.w1));
      CHECK(std::isnan(r.mean_objective));
    } else {
      CHECK(r.w2 == doctest::Approx(1.0 - r.w1));
    }
  }
}

TEST_CASE("sweep output does not depend on the thread count") {
  SweepSpec spec = small_spec(SweepAxis::WeightPair, {0.3, 0.7});
  spec.threads = 1;
  const std::string one = csv_of(run_sweep(spec).rows);
  spec.threads = 3;
  CHECK(csv_of(run_sweep(spec).rows) == one);
}

TEST_CASE("sweep CSV round trip") {
  const SweepOutput out = run_sweep(small_spec(SweepAxis::LocalIters, {5}));
  const std::string text = csv_of(out.rows);
  CHECK(text.rfind("axis,axis_value,scheme,w1,w2,repetitions,mean_energy_j,mean_trans_energy_j,"
                   "mean_cmp_energy_j,mean_delay_s,mean_objective,solver_iters_mean,failures_count\n",
                   0) == 0);
  std::istringstream in(text);
  const std::vector<SweepResult> back = read_sweep_csv(in);
  CHECK(csv_of(back) == text);

  std::istringstream bad_header("axis,value\n");
  CHECK_THROWS_AS(read_sweep_csv(bad_header), ParseError);
  std::string short_row = text.substr(0, text.find('\n') + 1) + "p_max_dbm,1,joint\n";
  std::istringstream short_in(short_row);
  CHECK_THROWS_AS(read_sweep_csv(short_in), ParseError);
}

TEST_CASE("comparison table") {
  ComparisonSpec spec;
  spec.deadlines_s = {100, 150};
  spec.repetitions = 2;
  spec.base.num_devices = 8;
  spec.threads = 2;
  std::vector<std::string> log;
  const ComparisonOutput out = run_comparison(spec, [&](const std::string& m) { log.push_back(m); });
  REQUIRE(out.rows.size() == 8);
  for (const ComparisonRow& r : out.rows) {
    CHECK(r.scenarios + r.skipped == 2);
    CHECK(r.p_max_dbm == 10.0);
  }
  for (double T : spec.deadlines_s) {
    double joint = 0.0;
    for (const ComparisonRow& r : out.rows) {
      if (r.deadline_s == T && r.scheme == "joint") joint = r.mean_energy_j;
    }
    for (const ComparisonRow& r : out.rows) {
      if (r.deadline_s == T) CHECK(joint <= r.mean_energy_j * (1 + 1e-9));
    }
  }
  std::ostringstream csv;
  write_comparison_csv(csv, out.rows);
  CHECK(csv.str().rfind("scheme,deadline_s,p_max_dbm,scenarios,skipped,mean_energy_j\n", 0) == 0);
  std::istringstream in(csv.str());
  std::ostringstream again;
  write_comparison_csv(again, read_comparison_csv(in));
  CHECK(again.str() == csv.str());
}

TEST_CASE("infeasible comparison cells are skipped and logged") {
  ComparisonSpec spec;
  spec.deadlines_s = {1.0};
  spec.repetitions = 2;
  spec.base.num_devices = 5;
  std::vector<std::string> log;
  const ComparisonOutput out = run_comparison(spec, [&](const std::string& m) { log.push_back(m); });
  for (const ComparisonRow& r : out.rows) {
    CHECK(r.scenarios == 0);
    CHECK(r.skipped == 2);
    CHECK(std::isnan(r.mean_energy_j));
  }
  CHECK(log.size() == 2);
  CHECK(out.samples.empty());
}

}  // TEST_SUITE
