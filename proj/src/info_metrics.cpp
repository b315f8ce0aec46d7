#include "dcovlc/info_metrics.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Table spans this SNR range; outside it the exact quadrature is used.
constexpr double kTableMinSnr = 1e-6;
constexpr double kTableMaxSnr = 1e4;
constexpr double kTableMinMmse = 1e-250;

// Gaussian mass beyond this many standard deviations is below 1e-38, far
// under the smallest mmse the solvers ask for.
constexpr double kAxisHalfWidth = 13.0;
constexpr double kAxisPanel = 0.5;
constexpr int kLegendreOrder = 10;

struct LegendreRule {
  std::vector<double> x;
  std::vector<double> w;
};

const LegendreRule& legendre() {
  static const LegendreRule rule = [] {
    const int n = kLegendreOrder;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double b = k / std::sqrt(4.0 * k * k - 1.0);
      jacobi(k, k - 1) = b;
      jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    LegendreRule r;
    for (int k = 0; k < n; ++k) {
      r.x.push_back(eig.eigenvalues()(k));
      r.w.push_back(2.0 * eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k));
    }
    return r;
  }();
  return rule;
}

// Panel edges on [-H, H] for the noise variable when level `n` is sent. The
// posterior switches between neighbouring levels over a width
// 1 / (amp * gap) around each midpoint; panels shrink geometrically there.
std::vector<double> axis_edges(const std::vector<double>& levels, std::size_t n, double amp) {
  std::vector<double> e;
  for (double z = -kAxisHalfWidth; z <= kAxisHalfWidth + 1e-12; z += kAxisPanel) e.push_back(z);
  if (amp > 0.0) {
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
      const double b = amp * (0.5 * (levels[k] + levels[k + 1]) - levels[n]);
      const double s = 1.0 / (amp * (levels[k + 1] - levels[k]));
      if (std::abs(b) > kAxisHalfWidth + 32.0 * s) continue;
      e.push_back(b);
      for (double f = 0.25; f <= 32.0; f *= 2.0) {
        e.push_back(b - f * s);
        e.push_back(b + f * s);
      }
    }
  }
  for (double& z : e) z = std::clamp(z, -kAxisHalfWidth, kAxisHalfWidth);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(), [](double a, double b) { return b - a < 1e-12; }),
          e.end());
  return e;
}

}  // namespace

const char* to_string(RateMetric metric) {
  switch (metric) {
    case RateMetric::Exact:
      return "exact";
    case RateMetric::LowerBound:
      return "lower";
    case RateMetric::Approx:
      return "approx";
  }
  return "unknown";
}

RateMetric parse_metric(const char* name) {
  if (std::strcmp(name, "exact") == 0) return RateMetric::Exact;
  if (std::strcmp(name, "lower") == 0) return RateMetric::LowerBound;
  if (std::strcmp(name, "approx") == 0) return RateMetric::Approx;
  throw ValidationError(std::string("unknown rate metric '") + name + "'");
}

ComplexQuadrature complex_gauss_hermite(int order) {
  if (order < 1) throw ValidationError("quadrature order must be positive");
  // Golub-Welsch on the Jacobi matrix of the physicists' Hermite weight exp(-x^2).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const Eigen::VectorXd& x = eig.eigenvalues();
  // Weights normalized by sqrt(pi): Z = u + jv with u, v ~ N(0, 1/2).
  Eigen::VectorXd w(order);
  for (int k = 0; k < order; ++k) w(k) = eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k);
  w /= w.sum();

  ComplexQuadrature q;
  q.nodes.reserve(static_cast<std::size_t>(order) * order);
  q.weights.reserve(static_cast<std::size_t>(order) * order);
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      q.nodes.emplace_back(x(a), x(b));
      q.weights.push_back(w(a) * w(b));
    }
  }
  return q;
}

// ---------------------------------------------------------------------------

MmseTable::MmseTable(std::vector<double> log_snr, std::vector<double> log_mmse)
    : x_(std::move(log_snr)), y_(std::move(log_mmse)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw ValidationError("mmse table needs at least two samples");
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  slope_.assign(n, 0.0);
  slope_.front() = delta.front();
  slope_.back() = delta.back();
  for (std::size_t i = 1; i + 1 < n; ++i)
    slope_[i] = delta[i - 1] * delta[i] <= 0.0 ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      slope_[i] = slope_[i + 1] = 0.0;
      continue;
    }
    const double a = slope_[i] / delta[i];
    const double b = slope_[i + 1] / delta[i];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double t = 3.0 / std::sqrt(r);
      slope_[i] = t * a * delta[i];
      slope_[i + 1] = t * b * delta[i];
    }
  }
}

double MmseTable::eval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  i = std::min(i, x_.size() - 2);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * slope_[i + 1];
}

double MmseTable::mmse(double snr) const { return std::exp(eval(std::log(snr))); }

double MmseTable::inverse(double target) const {
  const double y = std::log(target);
  // y_ is non-increasing in x_; locate the bracketing interval.
  std::size_t lo = 0;
  std::size_t hi = x_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (y_[mid] >= y) lo = mid;
    else hi = mid;
  }
  double a = x_[lo];
  double b = x_[hi];
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    if (eval(m) >= y) a = m;
    else b = m;
  }
  return std::exp(0.5 * (a + b));
}

// ---------------------------------------------------------------------------

AlphabetMetrics::AlphabetMetrics(Constellation c) : AlphabetMetrics(std::move(c), Options{}) {}

AlphabetMetrics::AlphabetMetrics(Constellation c, Options options)
    : constellation_(std::move(c)), options_(options) {
  if (options_.quad_order < 8) throw ValidationError("quadrature order must be >= 8");
  if (options_.table_points < 16) throw ValidationError("mmse table needs >= 16 points");
  quad_ = complex_gauss_hermite(options_.quad_order);
  const auto pts = constellation_.points();
  const std::size_t m = pts.size();
  diff_.resize(m * m);
  dist_.resize(m * m);
  for (std::size_t n = 0; n < m; ++n) {
    for (std::size_t k = 0; k < m; ++k) {
      diff_[n * m + k] = pts[n] - pts[k];
      dist_[n * m + k] = 0.5 * std::norm(pts[n] - pts[k]);
    }
  }
  for (const auto& x : pts) {
    re_.push_back(x.real());
    im_.push_back(x.imag());
  }
  if (options_.quadrature == Quadrature::Auto)
    for (double b : constellation_.axis_levels()) axis_.push_back(std::numbers::sqrt2 * b);
}

AlphabetSample AlphabetMetrics::evaluate(double snr) const {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw NumericalError("snr must be finite and >= 0");
  return axis_.empty() ? evaluate_tensor(snr) : evaluate_axes(snr);
}

// Square QAM: each axis is a real channel y = sqrt(snr) a + N(0, 1) with
// unit-energy levels a. I doubles, while mmse and its slope carry over.
AlphabetSample AlphabetMetrics::evaluate_axes(double snr) const {
  const auto& rule = legendre();
  const std::size_t l = axis_.size();
  const double log_l = std::log(static_cast<double>(l));
  const double amp = std::sqrt(snr);
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

  std::vector<double> w(l);
  double info_acc = 0.0;
  double mmse_acc = 0.0;
  double deriv_acc = 0.0;
  for (std::size_t n = 0; n < l; ++n) {
    const auto edges = axis_edges(axis_, n, amp);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      const double half = 0.5 * (edges[p + 1] - edges[p]);
      const double mid = 0.5 * (edges[p + 1] + edges[p]);
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double z = mid + half * rule.x[q];
        const double wq = half * rule.w[q] * inv_sqrt_2pi * std::exp(-0.5 * z * z);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < l; ++k) {
          const double d = axis_[n] - axis_[k];
          w[k] = -amp * d * z - 0.5 * snr * d * d;
          mx = std::max(mx, w[k]);
        }
        double sum = 0.0;
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
          w[k] = std::exp(w[k] - mx);
          sum += w[k];
          m1 += w[k] * axis_[k];
          m2 += w[k] * axis_[k] * axis_[k];
        }
        m1 /= sum;
        const double var = std::max(0.0, m2 / sum - m1 * m1);
        info_acc += wq * (mx + std::log(sum) - log_l);
        mmse_acc += wq * (axis_[n] - m1) * (axis_[n] - m1);
        deriv_acc += wq * var * var;
      }
    }
  }
  const double ld = static_cast<double>(l);
  AlphabetSample out;
  out.info_nats = std::clamp(-2.0 * info_acc / ld, 0.0, 2.0 * log_l);
  out.mmse = std::clamp(mmse_acc / ld, 0.0, 1.0);
  out.mmse_derivative = -deriv_acc / ld;
  return out;
}

AlphabetSample AlphabetMetrics::evaluate_tensor(double snr) const {
  const std::size_t m = re_.size();
  const double log_m = std::log(static_cast<double>(m));
  const double amp = std::sqrt(snr);

  std::vector<double> logits(m);
  double info_acc = 0.0;
  double mmse_acc = 0.0;
  double deriv_acc = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    const cplx* dn = &diff_[n * m];
    for (std::size_t q = 0; q < quad_.nodes.size(); ++q) {
      const cplx z = quad_.nodes[q];
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        logits[k] = -std::norm(amp * dn[k] + z);
        mx = std::max(mx, logits[k]);
      }
      double sum = 0.0;
      double mr = 0.0;
      double mi = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        logits[k] = std::exp(logits[k] - mx);
        sum += logits[k];
        mr += logits[k] * re_[k];
        mi += logits[k] * im_[k];
      }
      mr /= sum;
      mi /= sum;
      double c11 = 0.0;
      double c22 = 0.0;
      double c12 = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double w = logits[k] / sum;
        const double er = re_[k] - mr;
        const double ei = im_[k] - mi;
        c11 += w * er * er;
        c22 += w * ei * ei;
        c12 += w * er * ei;
      }
      const double wq = quad_.weights[q];
      // log((1/M) sum_k exp(-d_nk + |z|^2)); vanishes identically at snr = 0.
      info_acc += wq * (mx + std::log(sum) + std::norm(z) - log_m);
      const double er = re_[n] - mr;
      const double ei = im_[n] - mi;
      mmse_acc += wq * (er * er + ei * ei);
      deriv_acc += wq * (c11 * c11 + 2.0 * c12 * c12 + c22 * c22);
    }
  }
  AlphabetSample out;
  out.info_nats = std::clamp(-info_acc / static_cast<double>(m), 0.0, log_m);
  out.mmse = std::clamp(mmse_acc / static_cast<double>(m), 0.0, 1.0);
  out.mmse_derivative = -2.0 * deriv_acc / static_cast<double>(m);
  return out;
}

const MmseTable& AlphabetMetrics::table() const {
  std::call_once(table_once_, [this] {
    const int n = options_.table_points;
    const double x0 = std::log(kTableMinSnr);
    const double x1 = std::log(kTableMaxSnr);
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      const double x = x0 + (x1 - x0) * i / (n - 1);
      const double v = evaluate(std::exp(x)).mmse;
      if (!(v > kTableMinMmse)) break;
      // Enforce monotonicity against quadrature round-off.
      const double y = ys.empty() ? std::log(v) : std::min(ys.back(), std::log(v));
      xs.push_back(x);
      ys.push_back(y);
    }
    table_ = std::make_unique<MmseTable>(std::move(xs), std::move(ys));
  });
  return *table_;
}

double AlphabetMetrics::mmse(double snr) const {
  if (options_.use_mmse_table) {
    const auto& t = table();
    if (snr >= t.min_snr() && snr <= t.max_snr()) return t.mmse(snr);
  }
  return evaluate(snr).mmse;
}

double AlphabetMetrics::mmse_inverse(double target, double hint) const {
  if (!(target > 0.0)) throw NumericalError("mmse target must be positive; zero is only reached as snr -> inf");
  if (target > 1.0 + 1e-12) throw ValidationError("mmse target must not exceed 1");
  if (target >= 1.0) return 0.0;
  if (options_.use_mmse_table) {
    const auto& t = table();
    if (target >= t.min_mmse() && target <= t.mmse(t.min_snr())) return t.inverse(target);
  }
  return mmse_inverse_exact(target, hint);
}

double AlphabetMetrics::mmse_inverse_exact(double target, double hint) const {
  constexpr double kMaxSnr = 1e15;
  // Bracket [lo, hi] with mmse(lo) >= target >= mmse(hi), grown geometrically.
  double lo = 0.0;
  double hi = 1.0;
  double x = -1.0;
  AlphabetSample at;
  if (hint > 0.0 && std::isfinite(hint)) {
    at = evaluate(hint);
    x = hint;
    if (at.mmse >= target) {
      lo = hint;
      hi = 2.0 * hint;
    } else {
      hi = hint;
      lo = 0.5 * hint;
      while (lo > 1e-12 && evaluate(lo).mmse < target) {
        hi = lo;
        lo *= 0.5;
      }
      if (lo <= 1e-12) lo = 0.0;
    }
  }
  while (evaluate(hi).mmse > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxSnr) throw NumericalError("mmse target below numerical resolution");
  }
  if (x < lo || x > hi) {
    x = 0.5 * (lo + hi);
    at = evaluate(x);
  }

  // Newton on log mmse, safeguarded by bisection.
  const double log_target = std::log(target);
  for (int it = 0; it < 300; ++it) {
    const double f = at.mmse - target;
    if (std::abs(f) <= 1e-14 * target) return x;
    if (f > 0.0) lo = x;
    else hi = x;
    if (hi - lo <= 1e-15 * hi) return x;

    double next = 0.5 * (lo + hi);
    if (at.mmse > 0.0 && at.mmse_derivative < 0.0) {
      const double step = (std::log(at.mmse) - log_target) / (at.mmse_derivative / at.mmse);
      const double cand = x - step;
      if (cand > lo && cand < hi) next = cand;
    }
    x = next;
    at = evaluate(x);
  }
  return x;
}

Derivatives AlphabetMetrics::lower_bound_bits(double snr) const {
  const std::size_t m = re_.size();
  const double mm = static_cast<double>(m);
  double log_sum = 0.0;
  double mean_acc = 0.0;
  double var_acc = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    const double* dn = &dist_[n * m];
    // The k = n term is exp(0) = 1 and dominates, so no max shift is needed.
    double s = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double e = std::exp(-snr * dn[k]);
      s += e;
      s1 += e * dn[k];
      s2 += e * dn[k] * dn[k];
    }
    const double mean = s1 / s;
    log_sum += std::log(s);
    mean_acc += mean;
    var_acc += s2 / s - mean * mean;
  }
  Derivatives out;
  out.value = std::log2(mm) + 1.0 - 1.0 / kLn2 - log_sum / (mm * kLn2);
  out.first = mean_acc / (mm * kLn2);
  out.second = -var_acc / (mm * kLn2);
  return out;
}

// ---------------------------------------------------------------------------

void RateContext::validate() const {
  if (!alphabet) throw ValidationError("rate context has no alphabet");
  if (!(noise_power > 0.0) || !std::isfinite(noise_power))
    throw ValidationError("noise power must be positive");
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
    throw ValidationError("bandwidth must be positive");
  if (!(gain_sq >= 0.0) || !std::isfinite(gain_sq))
    throw ValidationError("channel gain must be finite");
  if (alphabet->options().quad_order < 8) throw ValidationError("quadrature order must be >= 8");
}

namespace {

void check_power(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("power must be finite and >= 0");
}

}  // namespace

double rate_exact(const RateContext& ctx, double power) {
  check_power(power);
  const double bits = ctx.alphabet->evaluate(ctx.snr(power)).info_nats / kLn2;
  return std::clamp(ctx.bandwidth_hz * bits, 0.0, ctx.ceiling());
}

double rate_lower(const RateContext& ctx, double power) {
  check_power(power);
  return ctx.bandwidth_hz * ctx.alphabet->lower_bound_bits(ctx.snr(power)).value;
}

double rate_approx(const RateContext& ctx, double power) {
  return rate_lower(ctx, power) + ctx.bandwidth_hz * kApproxGap;
}

double rate(RateMetric metric, const RateContext& ctx, double power) {
  switch (metric) {
    case RateMetric::Exact:
      return rate_exact(ctx, power);
    case RateMetric::LowerBound:
      return rate_lower(ctx, power);
    case RateMetric::Approx:
      return rate_approx(ctx, power);
  }
  throw ValidationError("unknown metric");
}

Derivatives rate_derivatives(RateMetric metric, const RateContext& ctx, double power) {
  check_power(power);
  const double g = ctx.gain_to_noise();
  const double snr = g * power;
  const double w = ctx.bandwidth_hz;
  Derivatives out;
  if (metric == RateMetric::Exact) {
    const auto s = ctx.alphabet->evaluate(snr);
    out.value = std::clamp(w * s.info_nats / kLn2, 0.0, ctx.ceiling());
    out.first = w / kLn2 * g * s.mmse;
    out.second = w / kLn2 * g * g * s.mmse_derivative;
  } else {
    const auto lb = ctx.alphabet->lower_bound_bits(snr);
    out.value = w * lb.value + (metric == RateMetric::Approx ? w * kApproxGap : 0.0);
    out.first = w * g * lb.first;
    out.second = w * g * g * lb.second;
  }
  return out;
}

double mmse(const RateContext& ctx, double snr) { return ctx.alphabet->mmse(snr); }

double mmse_inverse(const RateContext& ctx, double target) {
  return ctx.alphabet->mmse_inverse(target);
}

MonteCarloEstimate rate_mc_oracle(const RateContext& ctx, double power, std::uint64_t samples,
                                  std::uint64_t seed) {
  check_power(power);
  if (samples < 2) throw ValidationError("Monte-Carlo oracle needs at least 2 samples");
  const auto pts = ctx.alphabet->constellation().points();
  const std::size_t m = pts.size();
  const double mm = static_cast<double>(m);
  const double amp = std::sqrt(ctx.snr(power));
  const double w = ctx.bandwidth_hz;
  const double base = w * (std::log2(mm) - 1.0 / kLn2);

  std::mt19937_64 rng(seed);
  // CN(0, 1) in noise-normalized units: each component has variance 1/2.
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<double> logits(m);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const cplx z(normal(rng), normal(rng));
    double acc = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        logits[k] = -std::norm(amp * (pts[n] - pts[k]) + z);
        mx = std::max(mx, logits[k]);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += std::exp(logits[k] - mx);
      acc += (mx + std::log(sum)) / kLn2;
    }
    const double value = base - w / mm * acc;
    // Welford running moments.
    const double delta = value - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (value - mean);
  }
  MonteCarloEstimate out;
  out.mean = mean;
  out.samples = samples;
  out.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  return out;
}

}  // namespace dcovlc
