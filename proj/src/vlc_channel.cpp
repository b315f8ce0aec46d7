#include "dcovlc/vlc_channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

bool finite_point(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

bool inside(const RoomGeometry& g, const Point3& p) {
  return p.x >= 0.0 && p.x <= g.length_m && p.y >= 0.0 && p.y <= g.width_m && p.z >= 0.0 &&
         p.z <= g.height_m;
}

void check_reflectivity(double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("reflectivity must lie in (0, 1), got " + std::to_string(rho));
}

}  // namespace

void RoomGeometry::validate() const {
  if (!(length_m > 0.0 && width_m > 0.0 && height_m > 0.0))
    throw ValidationError("room dimensions must be positive");
  check_reflectivity(reflectivity);
  if (leds.empty()) throw ValidationError("room has no LEDs");
  if (!finite_point(receiver) || !inside(*this, receiver))
    throw ValidationError("receiver lies outside the room");
  for (std::size_t i = 0; i < leds.size(); ++i) {
    const auto& led = leds[i];
    if (!finite_point(led) || !inside(*this, led))
      throw ValidationError("LED " + std::to_string(i) + " lies outside the room");
    if (!(led.z > receiver.z))
      throw ValidationError("LED " + std::to_string(i) + " is not above the receiver plane");
  }
}

double OpticalFrontEnd::lambertian_order() const {
  return -std::log(2.0) / std::log(std::cos(deg2rad(half_power_angle_deg)));
}

void OpticalFrontEnd::validate() const {
  if (!(half_power_angle_deg > 0.0 && half_power_angle_deg < 90.0))
    throw ValidationError("half-power angle must lie in (0, 90) degrees");
  if (!(detector_area_m2 > 0.0)) throw ValidationError("detector area must be positive");
  if (!(fov_deg > 0.0 && fov_deg <= 90.0))
    throw ValidationError("field of view must lie in (0, 90] degrees");
  if (!(filter_gain > 0.0) || !(concentrator_gain > 0.0))
    throw ValidationError("optical gains must be positive");
}

std::vector<double> ChannelGains::data_magnitudes_sq() const {
  std::vector<double> out;
  for (int i = 1; i < half_subcarriers; ++i) out.push_back(magnitude_sq(i));
  return out;
}

cplx los_gain(const RoomGeometry& geom, const OpticalFrontEnd& fe, std::size_t led_index,
              double f) {
  const auto& led = geom.leds.at(led_index);
  const double dx = led.x - geom.receiver.x;
  const double dy = led.y - geom.receiver.y;
  const double dz = led.z - geom.receiver.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(d > 0.0)) throw ValidationError("receiver coincides with LED " + std::to_string(led_index));

  // Downward LED and upward receiver: irradiance and incidence share cos = dz/d.
  const double cos_incidence = dz / d;
  const double cos_irradiance = dz / d;
  if (cos_incidence <= 0.0) return {0.0, 0.0};
  const double incidence = std::acos(std::min(1.0, cos_incidence));
  if (incidence > deg2rad(fe.fov_deg)) return {0.0, 0.0};

  const double m = fe.lambertian_order();
  const double eta = (m + 1.0) * fe.detector_area_m2 * cos_incidence / (2.0 * kPi * d * d) *
                     std::pow(cos_irradiance, m) * fe.filter_gain * fe.concentrator_gain;
  const double tau = d / kSpeedOfLight;
  return std::polar(eta, -2.0 * kPi * f * tau);
}

cplx diffuse_gain(const RoomGeometry& geom, const OpticalFrontEnd& fe, double f) {
  check_reflectivity(geom.reflectivity);
  const double rho = geom.reflectivity;
  const double area = geom.surface_area_m2();
  const double eta = fe.detector_area_m2 / area * rho / (1.0 - rho);
  const double tau = -1.0 / std::log(rho) * 4.0 * geom.volume_m3() / (area * kSpeedOfLight);
  return eta / cplx(1.0, 2.0 * kPi * tau * f);
}

ChannelGains subcarrier_gains(const RoomGeometry& geom, const OpticalFrontEnd& fe,
                              int half_subcarriers, double bandwidth_hz,
                              const ChannelModelOptions& options) {
  if (half_subcarriers < 2) throw ValidationError("need N >= 2");
  if (!(bandwidth_hz > 0.0)) throw ValidationError("subcarrier bandwidth must be positive");
  if (options.subcarrier_spacing_hz < 0.0)
    throw ValidationError("subcarrier spacing must be non-negative");
  geom.validate();
  fe.validate();

  const double spacing =
      options.subcarrier_spacing_hz > 0.0 ? options.subcarrier_spacing_hz : bandwidth_hz;
  const double diffuse_copies =
      options.diffuse_scaling == DiffuseScaling::PerLed ? static_cast<double>(geom.leds.size()) : 1.0;

  ChannelGains out;
  out.half_subcarriers = half_subcarriers;
  const int total = 2 * half_subcarriers;
  out.frequency_hz.resize(total);
  out.los.resize(total);
  out.diffuse.resize(total);
  out.total.resize(total);
  for (int i = 0; i < total; ++i) {
    const int signed_index = i <= half_subcarriers ? i : i - total;
    const double f = signed_index * spacing;
    cplx los{0.0, 0.0};
    for (std::size_t l = 0; l < geom.leds.size(); ++l) los += los_gain(geom, fe, l, f);
    const cplx diffuse = options.include_diffuse ? diffuse_copies * diffuse_gain(geom, fe, f)
                                                 : cplx{0.0, 0.0};
    out.frequency_hz[i] = f;
    out.los[i] = los;
    out.diffuse[i] = diffuse;
    out.total[i] = los + diffuse;
  }
  return out;
}

}  // namespace dcovlc
