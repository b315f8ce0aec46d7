#include "dcovlc/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

std::uint32_t gray(std::uint32_t v) { return v ^ (v >> 1); }

int exact_sqrt(int v) {
  if (v < 0) return -1;
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
  return r * r == v ? r : -1;
}

}  // namespace

Constellation::Constellation(std::vector<cplx> points, std::vector<std::uint32_t> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  const double m = static_cast<double>(points_.size());
  double energy = 0.0;
  for (const auto& x : points_) energy += std::norm(x);
  const double scale = 1.0 / std::sqrt(energy / m);
  for (auto& x : points_) x *= scale;

  double sum_abs = 0.0;
  double sum_sq = 0.0;
  for (const auto& x : points_) {
    sum_abs += std::abs(x);
    sum_sq += std::norm(x);
    max_abs_ = std::max(max_abs_, std::abs(x));
  }
  mean_abs_ = sum_abs / m;
  mean_sq_ = sum_sq / m;
}

Constellation Constellation::from_points(std::vector<cplx> points) {
  if (points.size() < 2) throw ValidationError("constellation needs at least 2 points");
  for (const auto& x : points) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
      throw ValidationError("constellation point is not finite");
  }
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      if (points[a] == points[b]) throw ValidationError("constellation points must be distinct");
  double energy = 0.0;
  for (const auto& x : points) energy += std::norm(x);
  if (!(energy > 0.0)) throw ValidationError("constellation has zero energy");

  std::vector<std::uint32_t> labels(points.size());
  std::iota(labels.begin(), labels.end(), 0u);
  return Constellation(std::move(points), std::move(labels));
}

Constellation Constellation::qam(int order) {
  const int side = exact_sqrt(order);
  if (order < 4 || side < 2)
    throw ValidationError("invalid QAM order " + std::to_string(order) +
                          ": must be a perfect square >= 4");

  // Labels are cosmetic; rates depend only on the point set.
  int bits_per_axis = 0;
  while ((1 << bits_per_axis) < side) ++bits_per_axis;
  std::vector<cplx> points;
  std::vector<std::uint32_t> labels;
  points.reserve(static_cast<std::size_t>(order));
  labels.reserve(static_cast<std::size_t>(order));
  for (int ix = 0; ix < side; ++ix) {
    for (int iq = 0; iq < side; ++iq) {
      points.emplace_back(2.0 * ix - (side - 1), 2.0 * iq - (side - 1));
      labels.push_back((gray(static_cast<std::uint32_t>(ix)) << bits_per_axis) |
                       gray(static_cast<std::uint32_t>(iq)));
    }
  }
  Constellation c(std::move(points), std::move(labels));
  const double scale = std::abs(c.points_[0].real()) / (side - 1);
  for (int ix = 0; ix < side; ++ix) c.axis_levels_.push_back((2.0 * ix - (side - 1)) * scale);
  return c;
}

Eigen::MatrixXd pairwise_sq_distances(const Constellation& c) {
  const auto pts = c.points();
  const auto m = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index n = 0; n < m; ++n) {
    for (Eigen::Index k = n + 1; k < m; ++k) {
      const double v = std::norm(pts[n] - pts[k]);
      d(n, k) = v;
      d(k, n) = v;
    }
  }
  return d;
}

}  // namespace dcovlc
