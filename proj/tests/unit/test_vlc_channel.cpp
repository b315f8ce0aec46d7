#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dcovlc/errors.hpp"
#include "dcovlc/harness.hpp"

using namespace dcovlc;

namespace {

RoomGeometry one_led(Point3 led, Point3 rx) {
  RoomGeometry g;
  g.leds = {led};
  g.receiver = rx;
  return g;
}

}  // namespace

TEST_CASE("60 degree half-power angle gives a first-order Lambertian") {
  OpticalFrontEnd fe;
  CHECK(std::abs(fe.lambertian_order() - 1.0) < 1e-12);
}

TEST_CASE("LOS gain directly below the LED") {
  const auto g = one_led({2.5, 2.5, 3.0}, {2.5, 2.5, 0.0});
  OpticalFrontEnd fe;
  fe.filter_gain = 1.5;
  fe.concentrator_gain = 2.0;
  // (m+1) A / (2 pi h^2) T G with m = 1, h = 3.
  const double expected = 2.0 * 1e-4 / (2.0 * std::numbers::pi * 9.0) * 3.0;
  CHECK(std::abs(los_gain(g, fe, 0, 0.0)) == doctest::Approx(expected).epsilon(1e-12));
  const double tau = 3.0 / kSpeedOfLight;
  const cplx h = los_gain(g, fe, 0, 1e6);
  CHECK(std::arg(h) == doctest::Approx(-2.0 * std::numbers::pi * 1e6 * tau).epsilon(1e-12));
}

TEST_CASE("LOS gain for the first reference LED") {
  const auto s = Scenario::reference();
  // d^2 = 1 + 0.25 + 9, cos(phi) = cos(theta) = 3 / d, m = 1.
  const double d2 = 10.25;
  const double expected = 2.0 * 1e-4 / (2.0 * std::numbers::pi * d2) * (9.0 / d2);
  CHECK(std::abs(los_gain(s.geometry, s.front_end, 0, 0.0)) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(2.7263e-6).epsilon(1e-4));
}

TEST_CASE("LOS gain is exactly zero outside the field of view") {
  auto g = one_led({4.9, 4.9, 3.0}, {0.1, 0.1, 2.0});
  OpticalFrontEnd fe;
  fe.fov_deg = 60.0;  // incidence here is about 78 degrees
  CHECK(los_gain(g, fe, 0, 0.0) == cplx(0.0, 0.0));
  CHECK(los_gain(g, fe, 0, 5e6) == cplx(0.0, 0.0));
  fe.fov_deg = 90.0;
  CHECK(std::abs(los_gain(g, fe, 0, 0.0)) > 0.0);
}

TEST_CASE("diffuse gain: DC value, low-pass decay and monotone magnitude") {
  const auto s = Scenario::reference();
  // A_room = 110 m^2, rho / (1 - rho) = 4.
  const cplx h0 = diffuse_gain(s.geometry, s.front_end, 0.0);
  CHECK(h0.imag() == 0.0);
  CHECK(h0.real() == doctest::Approx(1e-4 / 110.0 * 4.0).epsilon(1e-12));
  CHECK(h0.real() == doctest::Approx(3.636e-6).epsilon(1e-3));
  CHECK(std::abs(diffuse_gain(s.geometry, s.front_end, 1e15)) < 1e-12);
  double prev = std::abs(h0);
  for (double f = 1e5; f < 1e9; f *= 1.7) {
    const double m = std::abs(diffuse_gain(s.geometry, s.front_end, f));
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("reference channel is low-pass and conjugate symmetric") {
  const auto s = Scenario::reference();
  for (auto scaling : {DiffuseScaling::PerLed, DiffuseScaling::PerRoom}) {
    ChannelModelOptions opt;
    opt.diffuse_scaling = scaling;
    const auto g = subcarrier_gains(s.geometry, s.front_end, 16, 1e6, opt);
    CHECK(g.total.size() == 32);
    for (int i = 1; i < 16; ++i) {
      CHECK(std::abs(g.total[i] - std::conj(g.total[32 - i])) < 1e-20);
      if (i > 1) CHECK(std::abs(g.total[i]) <= std::abs(g.total[i - 1]));
    }
    CHECK(std::abs(g.total[1]) >= std::abs(g.total[15]));
    CHECK(g.data_magnitudes_sq().size() == 15);
  }
}

TEST_CASE("per-LED diffuse scaling multiplies the room term by the LED count") {
  const auto s = Scenario::reference();
  ChannelModelOptions per_led, per_room;
  per_led.diffuse_scaling = DiffuseScaling::PerLed;
  per_room.diffuse_scaling = DiffuseScaling::PerRoom;
  const auto a = subcarrier_gains(s.geometry, s.front_end, 8, 1e6, per_led);
  const auto b = subcarrier_gains(s.geometry, s.front_end, 8, 1e6, per_room);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(a.diffuse[i] - 4.0 * b.diffuse[i]) < 1e-20);
}

TEST_CASE("single LED without diffuse light has a flat magnitude") {
  auto g = one_led({1.5, 1.5, 3.0}, {0.5, 1.0, 0.0});
  ChannelModelOptions opt;
  opt.include_diffuse = false;
  const auto gains = subcarrier_gains(g, OpticalFrontEnd{}, 16, 1e6, opt);
  for (int i = 1; i < 16; ++i)
    CHECK(std::abs(gains.total[i]) == doctest::Approx(std::abs(gains.total[1])).epsilon(1e-14));
}

TEST_CASE("subcarrier spacing overrides the bandwidth grid") {
  const auto s = Scenario::reference();
  ChannelModelOptions opt;
  opt.subcarrier_spacing_hz = 5e5;
  const auto g = subcarrier_gains(s.geometry, s.front_end, 4, 1e6, opt);
  CHECK(g.frequency_hz[3] == doctest::Approx(1.5e6));
  CHECK(g.frequency_hz[5] == doctest::Approx(-1.5e6));
}

TEST_CASE("geometry and front-end validation") {
  auto s = Scenario::reference();
  CHECK_NOTHROW(s.geometry.validate());
  auto bad = s.geometry;
  bad.reflectivity = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s.geometry;
  bad.receiver = {6.0, 1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s.geometry;
  bad.leds[0].z = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s.geometry;
  bad.leds.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  auto fe = s.front_end;
  fe.fov_deg = 120.0;
  CHECK_THROWS_AS(fe.validate(), ValidationError);
  fe = s.front_end;
  fe.detector_area_m2 = 0.0;
  CHECK_THROWS_AS(fe.validate(), ValidationError);
  CHECK_THROWS_AS(subcarrier_gains(s.geometry, s.front_end, 1, 1e6), ValidationError);
}
