#include <cmath>
#include <sstream>

#include "doctest.h"
#include "flalloc/kv_document.hpp"
#include "flalloc/scenario_io.hpp"
#include "flalloc/units.hpp"
#include "support.hpp"

using namespace flalloc;

namespace {

KvDocument doc_of(const std::string& text) {
  std::istringstream in(text);
  return KvDocument::parse(in, "test");
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("key-value documents") {
  const KvDocument d = doc_of("# comment\n\na = 1.5   # trailing\nlist = 1 2 3\nname = x\n");
  CHECK(d.get_double("a") == 1.5);
  CHECK(d.get_doubles("list") == std::vector<double>{1, 2, 3});
  CHECK(d.get_string("name") == "x");
  CHECK(d.get_int_or("missing", 7) == 7);
  CHECK(!d.has("missing"));

  auto line_of = [](const std::string& text, const std::string& key) {
    try {
      const KvDocument bad = doc_of(text);
      (void)bad.get_double(key);
    } catch (const ParseError& e) {
      return std::pair<int, std::string>{e.line(), e.field()};
    }
    return std::pair<int, std::string>{-1, ""};
  };
  CHECK(line_of("a = 1\nb = oops\n", "b") == std::pair<int, std::string>{2, "b"});
  CHECK(line_of("a = 1\na = 2\n", "a") == std::pair<int, std::string>{2, "a"});
  CHECK(line_of("a = 1\n\nnonsense\n", "a") == std::pair<int, std::string>{3, ""});
  CHECK(line_of("a =\n", "a") == std::pair<int, std::string>{1, "a"});
  CHECK(line_of("a = 1\n", "b") == std::pair<int, std::string>{0, "b"});
  CHECK_THROWS_AS(doc_of("a = 1 2\n").get_double("a"), ParseError);
  CHECK_THROWS_AS(doc_of("a = 1.5\n").get_int("a"), ParseError);
}

TEST_CASE("unknown keys are rejected with their line") {
  try {
    config_from_document(doc_of("w1 = 0.3\nbandwith = 5\n"));
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.field() == "bandwith");
  }
}

TEST_CASE("config values and units") {
  const SystemConfig c = config_from_document(
      doc_of("p_max_dbm = 20\nnoise_psd_dbm_per_hz = -174\nw1 = 0.2\nw2 = 0.8\nnum_devices = 7\n"));
  CHECK(c.profile.p_max_w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(c.noise_psd_w_per_hz == doctest::Approx(3.981071705534972e-21).epsilon(1e-12));
  CHECK(c.weight_energy == 0.2);
  CHECK(c.num_devices == 7);
  CHECK(c.total_bandwidth_hz == 20e6);

  SystemConfig other;
  other.kappa = 3e-28;
  other.local_iters = 4;
  other.profile.p_min_w = dbm_to_watts(2.5);
  other.area_radius_km = 0.7;
  std::ostringstream out;
  write_config(out, other);
  std::istringstream in(out.str());
  const SystemConfig back = config_from_document(KvDocument::parse(in));
  CHECK(back.kappa == other.kappa);
  CHECK(back.local_iters == 4);
  CHECK(flalloc::testing::rel_diff(back.profile.p_min_w, other.profile.p_min_w) < 1e-14);
  CHECK(flalloc::testing::rel_diff(back.profile.p_max_w, other.profile.p_max_w) < 1e-14);
  CHECK(back.area_radius_km == 0.7);
}

TEST_CASE("scenario files reload exactly") {
  const Scenario s = flalloc::testing::small_scenario(9, 21);
  std::ostringstream out;
  write_scenario(out, s);
  std::istringstream in(out.str());
  const Scenario back = read_scenario(in);
  REQUIRE(back.size() == s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(back.devices[n].gain == s.devices[n].gain);
    CHECK(back.devices[n].cycles_per_sample == s.devices[n].cycles_per_sample);
    CHECK(back.devices[n].p_max_w == s.devices[n].p_max_w);
    CHECK(back.distances_km[n] == s.distances_km[n]);
  }
  CHECK(back.config.rng_seed == s.config.rng_seed);
  std::ostringstream again;
  write_scenario(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("malformed scenarios") {
  const Scenario s = flalloc::testing::small_scenario(3, 2);
  std::ostringstream out;
  write_scenario(out, s);
  const std::string text = out.str();

  std::string short_array = text;
  const auto pos = short_array.find("\ngain =");
  const auto eol = short_array.find('\n', pos + 1);
  short_array.replace(pos, eol - pos, "\ngain = 1e-10 1e-10");
  std::istringstream a(short_array);
  try {
    read_scenario(a, "s.txt");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "gain");
    CHECK(e.line() > 0);
  }

  std::string wrong_format = text;
  wrong_format.replace(wrong_format.find("flalloc-scenario-v1"), 19, "flalloc-scenario-v9");
  std::istringstream b(wrong_format);
  CHECK_THROWS_AS(read_scenario(b), ParseError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.txt"), ParseError);
}

}  // TEST_SUITE
