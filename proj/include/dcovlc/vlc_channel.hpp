#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace dcovlc {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Rectangular room with ceiling LEDs pointing straight down and an upward
/// facing receiver. Origin at a floor corner.
struct RoomGeometry {
  double length_m = 5.0;
  double width_m = 5.0;
  double height_m = 3.0;
  std::vector<Point3> leds;
  Point3 receiver;
  double reflectivity = 0.8;

  double surface_area_m2() const {
    return 2.0 * (length_m * width_m + length_m * height_m + width_m * height_m);
  }
  double volume_m3() const { return length_m * width_m * height_m; }

  /// Throws ValidationError on a degenerate room, reflectivity outside (0,1),
  /// points outside the box, or an LED not strictly above the receiver.
  void validate() const;
};

struct OpticalFrontEnd {
  double half_power_angle_deg = 60.0;
  double detector_area_m2 = 1e-4;
  double fov_deg = 90.0;
  double filter_gain = 1.0;
  double concentrator_gain = 1.0;

  /// m = -ln 2 / ln cos(half-power angle).
  double lambertian_order() const;
  void validate() const;
};

/// How the per-room diffuse term is combined with the LOS links.
enum class DiffuseScaling {
  PerRoom,  // one diffuse term for the whole room
  PerLed,   // one diffuse term per LED link (scales with LED count)
};

struct ChannelModelOptions {
  bool include_diffuse = true;
  DiffuseScaling diffuse_scaling = DiffuseScaling::PerLed;
  /// Frequency of subcarrier i is i * spacing; 0 selects the subcarrier bandwidth.
  double subcarrier_spacing_hz = 0.0;
};

/// Per-subcarrier complex gains for i = 0..2N-1. Indices above N are the
/// mirrored negative frequencies, so gains[2N-i] == conj(gains[i]).
struct ChannelGains {
  int half_subcarriers = 0;
  std::vector<double> frequency_hz;
  std::vector<cplx> los;
  std::vector<cplx> diffuse;
  std::vector<cplx> total;

  double magnitude_sq(int i) const { return std::norm(total.at(static_cast<std::size_t>(i))); }
  /// |H_i|^2 for the data subcarriers i = 1..N-1, in that order.
  std::vector<double> data_magnitudes_sq() const;
};

/// Lambertian LOS gain of one LED at frequency f (Hz, any sign). Exactly
/// zero when the incidence angle exceeds the field of view.
cplx los_gain(const RoomGeometry& geom, const OpticalFrontEnd& fe, std::size_t led_index, double f);

/// First-order low-pass diffuse gain eta_D / (1 + j 2 pi tau_D f).
cplx diffuse_gain(const RoomGeometry& geom, const OpticalFrontEnd& fe, double f);

ChannelGains subcarrier_gains(const RoomGeometry& geom, const OpticalFrontEnd& fe,
                              int half_subcarriers, double bandwidth_hz,
                              const ChannelModelOptions& options = {});

}  // namespace dcovlc
