#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dcovlc/errors.hpp"
#include "dcovlc/harness.hpp"

using namespace dcovlc;

namespace {

Scenario sample() {
  Scenario s = Scenario::reference();
  s.half_subcarriers = 8;
  s.channel.diffuse_scaling = DiffuseScaling::PerRoom;
  s.channel.subcarrier_spacing_hz = 0.1 + 0.2;  // not exactly representable in short decimal
  s.sweep.push_back({{0.8, 10.0, 0.0}, std::nullopt});
  s.sweep.push_back({{kUnbounded, 1.0, 0.0}, SweepRange{"electrical_budget_w", 0.1, 100.0, 7, true}});
  s.sweep.push_back({{1.0, kUnbounded, 0.0}, SweepRange{"se_threshold_bps_per_hz", 0.0, 0.9, 4, false}});
  s.solver.seed = 18446744073709551615ull;
  s.solver.metric = RateMetric::Approx;
  s.solver.rate_curves.subcarriers = {1, 3, 7};
  return s;
}

}  // namespace

TEST_CASE("reference scenario validates") { CHECK_NOTHROW(Scenario::reference().validate()); }

TEST_CASE("dump and parse round trip is lossless") {
  const Scenario s = sample();
  const std::string text = dump_scenario(s);
  const Scenario back = parse_scenario(text);
  CHECK(back == s);
  CHECK(dump_scenario(back) == text);
  CHECK(back.expand_sweep() == s.expand_sweep());
}

TEST_CASE("file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dcovlc_roundtrip.json";
  save_scenario(sample(), path.string());
  const Scenario a = load_scenario(path.string());
  save_scenario(a, path.string());
  CHECK(load_scenario(path.string()) == sample());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_scenario("/nonexistent/dir/x.json"), ValidationError);
}

TEST_CASE("hash is stable under round trip and sensitive to content") {
  const Scenario s = sample();
  CHECK(scenario_hash(parse_scenario(dump_scenario(s))) == scenario_hash(s));
  Scenario t = s;
  t.noise_psd *= 1.0000001;
  CHECK(scenario_hash(t) != scenario_hash(s));
}

TEST_CASE("unbounded budgets use explicit flags") {
  const std::string text = dump_scenario(sample());
  CHECK(text.find("\"optical_unbounded\": true") != std::string::npos);
  CHECK(text.find("\"electrical_unbounded\": true") != std::string::npos);
  CHECK(text.find("inf") == std::string::npos);
}

TEST_CASE("sweep expansion") {
  const auto pts = sample().expand_sweep();
  REQUIRE(pts.size() == 1 + 7 + 4);
  CHECK(pts[0] == SweepPoint{0.8, 10.0, 0.0});
  CHECK(std::isinf(pts[1].optical_w));
  CHECK(pts[1].electrical_w == doctest::Approx(0.1));
  CHECK(pts[4].electrical_w == doctest::Approx(std::sqrt(0.1 * 100.0)));
  CHECK(pts[7].electrical_w == doctest::Approx(100.0));
  CHECK(pts[9].se_threshold == doctest::Approx(0.3));
  CHECK(std::isinf(pts[9].electrical_w));
}

TEST_CASE("parser rejects malformed input") {
  const std::string good = dump_scenario(Scenario::reference());
  CHECK_NOTHROW(parse_scenario(good));
  CHECK_THROWS_AS(parse_scenario("{"), ValidationError);
  CHECK_THROWS_AS(parse_scenario("[]"), ValidationError);

  auto with = [&](const std::string& from, const std::string& to) {
    std::string t = good;
    const auto pos = t.find(from);
    REQUIRE(pos != std::string::npos);
    return t.replace(pos, from.size(), to);
  };
  CHECK_THROWS_AS(parse_scenario(with("\"room_height_m\"", "\"room_heigth_m\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(with("\"qam_order\": 4", "\"qam_order\": \"4\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(with("\"per_led\"", "\"per_wall\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(with("\"metric\": \"exact\"", "\"metric\": \"best\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(with("\"sweep\": []",
                                      "\"sweep\": [{\"optical_budget_w\": 1, \"optical_unbounded\": true, "
                                      "\"electrical_budget_w\": 1}]")),
                  ValidationError);
}

TEST_CASE("validation names the offending field") {
  Scenario s = Scenario::reference();
  s.qam_order = 8;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("qam_order"), ValidationError);
  s = Scenario::reference();
  s.geometry.receiver.x = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = Scenario::reference();
  s.sweep.push_back({{kUnbounded, kUnbounded, 0.0}, std::nullopt});
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = Scenario::reference();
  s.sweep.push_back({{1.0, 1.0, 0.0}, SweepRange{"electrical_budget_w", 0.0, 1.0, 3, true}});
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = Scenario::reference();
  s.solver.quad_order = 4;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
