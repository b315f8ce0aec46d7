#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "dcovlc/constellation.hpp"

namespace dcovlc {

/// Which per-subcarrier rate expression a solver optimizes.
enum class RateMetric {
  Exact,       // finite-alphabet mutual information
  LowerBound,  // closed-form Jensen lower bound (may be negative)
  Approx,      // lower bound shifted by the constant gap
};

/// Constant gap between the lower bound and the approximation, in bits per Hz.
inline constexpr double kApproxGap = 1.0 / std::numbers::ln2 - 1.0;

const char* to_string(RateMetric metric);
/// Parses "exact", "lower" or "approx". Throws ValidationError otherwise.
RateMetric parse_metric(const char* name);

/// Tensor-product Gauss-Hermite rule for expectations over Z ~ CN(0, 1).
struct ComplexQuadrature {
  std::vector<cplx> nodes;
  std::vector<double> weights;  // sum to one
};

ComplexQuadrature complex_gauss_hermite(int order);

/// Quantities of the unit-noise channel Y = sqrt(snr) X + Z at one SNR.
struct AlphabetSample {
  double info_nats = 0.0;        // I(X;Y), clamped to [0, ln M]
  double mmse = 0.0;             // E|X - E{X|Y}|^2
  double mmse_derivative = 0.0;  // d mmse / d snr (non-positive)
};

/// Value and first two derivatives of a scalar function.
struct Derivatives {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// Monotone cubic (Fritsch-Carlson) table of log mmse against log snr.
class MmseTable {
 public:
  MmseTable(std::vector<double> log_snr, std::vector<double> log_mmse);

  double min_snr() const { return std::exp(x_.front()); }
  double max_snr() const { return std::exp(x_.back()); }
  double min_mmse() const { return std::exp(y_.back()); }

  /// Valid for snr in [min_snr, max_snr].
  double mmse(double snr) const;
  /// Valid for target in [min_mmse, mmse(min_snr)].
  double inverse(double target) const;

 private:
  double eval(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

/// Normalized (unit noise, unit bandwidth) information measures of one
/// equiprobable constellation. Immutable except for the lazily built
/// interpolation table, whose one-time population is thread-safe.
class AlphabetMetrics {
 public:
  /// Auto integrates square QAM as two independent PAM axes with composite
  /// Gauss-Legendre panels refined at the decision boundaries; other
  /// alphabets, or TensorHermite, use the 2-D Gauss-Hermite product rule.
  enum class Quadrature { Auto, TensorHermite };

  struct Options {
    Quadrature quadrature = Quadrature::Auto;
    int quad_order = 32;  // Gauss-Hermite nodes per dimension
    bool use_mmse_table = false;
    int table_points = 4001;
  };

  explicit AlphabetMetrics(Constellation c);
  AlphabetMetrics(Constellation c, Options options);

  const Constellation& constellation() const { return constellation_; }
  const Options& options() const { return options_; }
  int order() const { return constellation_.order(); }
  double max_info_bits() const { return std::log2(static_cast<double>(order())); }

  /// One quadrature pass yielding I(snr), mmse(snr) and its derivative.
  AlphabetSample evaluate(double snr) const;
  double info_nats(double snr) const { return evaluate(snr).info_nats; }

  /// Conditional-mean estimation error. Served from the interpolation table
  /// when enabled and snr is inside its range.
  double mmse(double snr) const;

  /// snr with mmse(snr) == target. Target 1 maps to 0 exactly; targets
  /// <= 0 throw NumericalError. `hint` optionally seeds the search.
  double mmse_inverse(double target, double hint = -1.0) const;

  /// Jensen lower bound in bits per Hz with derivatives in snr.
  Derivatives lower_bound_bits(double snr) const;

 private:
  const MmseTable& table() const;
  double mmse_inverse_exact(double target, double hint) const;
  AlphabetSample evaluate_tensor(double snr) const;
  AlphabetSample evaluate_axes(double snr) const;

  Constellation constellation_;
  Options options_;
  ComplexQuadrature quad_;
  std::vector<cplx> diff_;     // X_n - X_k, row-major M x M
  std::vector<double> dist_;   // |X_n - X_k|^2 / 2, row-major
  std::vector<double> re_;     // Re X_k
  std::vector<double> im_;     // Im X_k
  std::vector<double> axis_;   // unit-energy PAM levels; empty for the tensor rule
  mutable std::once_flag table_once_;
  mutable std::unique_ptr<MmseTable> table_;
};

/// Physical context of one subcarrier: alphabet, channel and noise.
struct RateContext {
  std::shared_ptr<const AlphabetMetrics> alphabet;
  double gain_sq = 1.0;       // |H_i|^2
  double noise_power = 1.0;   // sigma^2 W
  double bandwidth_hz = 1.0;  // W

  /// Throws ValidationError on missing alphabet, non-positive noise or
  /// bandwidth, negative gain, or quadrature order below 8.
  void validate() const;
  double gain_to_noise() const { return gain_sq / noise_power; }
  double snr(double power) const { return gain_to_noise() * power; }
  double ceiling() const { return bandwidth_hz * alphabet->max_info_bits(); }
};

/// Exact finite-alphabet rate in bits/s, clamped to [0, W log2 M].
double rate_exact(const RateContext& ctx, double power);
/// Closed-form lower bound in bits/s; not clamped.
double rate_lower(const RateContext& ctx, double power);
/// Lower bound plus W times the constant gap.
double rate_approx(const RateContext& ctx, double power);
double rate(RateMetric metric, const RateContext& ctx, double power);

/// Rate and its first two derivatives in power (bits/s, bits/s/W, bits/s/W^2).
/// The exact-rate derivatives use the I-MMSE identity.
Derivatives rate_derivatives(RateMetric metric, const RateContext& ctx, double power);

double mmse(const RateContext& ctx, double snr);
double mmse_inverse(const RateContext& ctx, double target);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Monte-Carlo estimate of the exact rate by sampling the noise directly.
/// Test oracle only; bit-reproducible for a fixed seed.
MonteCarloEstimate rate_mc_oracle(const RateContext& ctx, double power, std::uint64_t samples,
                                  std::uint64_t seed);

}  // namespace dcovlc
