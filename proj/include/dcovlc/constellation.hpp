#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcovlc {

using cplx = std::complex<double>;

/// Equiprobable discrete input alphabet normalized to unit average energy.
///
/// Instances are immutable once built. The cached moments are the ones the
/// power-constraint transformations consume: E{|X|} enters the optical budget
/// as E^2{|X|}, and max|X| fixes the worst-case non-clipping DC bias.
class Constellation {
 public:
  /// Builds a constellation from arbitrary distinct points, rescaled so that
  /// the average energy is exactly one. Extension hook for non-QAM alphabets.
  static Constellation from_points(std::vector<cplx> points);

  /// Square M-QAM with Gray labels. Throws ValidationError unless M is a
  /// perfect square >= 4.
  static Constellation qam(int order);

  std::span<const cplx> points() const { return points_; }
  std::span<const std::uint32_t> labels() const { return labels_; }
  int order() const { return static_cast<int>(points_.size()); }

  double mean_abs() const { return mean_abs_; }
  double mean_sq() const { return mean_sq_; }
  double max_abs() const { return max_abs_; }

  /// Ascending per-axis levels when the points form a square grid (QAM), so
  /// that X = A + jB with A, B independent and equiprobable; empty otherwise.
  std::span<const double> axis_levels() const { return axis_levels_; }

 private:
  Constellation(std::vector<cplx> points, std::vector<std::uint32_t> labels);

  std::vector<cplx> points_;
  std::vector<std::uint32_t> labels_;
  double mean_abs_ = 0.0;
  double mean_sq_ = 0.0;
  double max_abs_ = 0.0;
  std::vector<double> axis_levels_;
};

inline Constellation make_qam(int order) { return Constellation::qam(order); }

/// Matrix of |X_n - X_k|^2. Symmetric with an exactly zero diagonal.
Eigen::MatrixXd pairwise_sq_distances(const Constellation& c);

}  // namespace dcovlc
