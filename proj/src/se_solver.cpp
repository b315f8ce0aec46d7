#include "dcovlc/se_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;
// Beyond this MMSE the remaining rate is far below any reported precision,
// so the water level stops pouring into a subcarrier there.
constexpr double kSaturationMmse = 1e-12;

void check_powers(const Link& link, const std::vector<double>& powers) {
  if (powers.size() != link.size())
    throw ValidationError("expected " + std::to_string(link.size()) + " powers, got " +
                          std::to_string(powers.size()));
  for (double p : powers)
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("powers must be finite and >= 0");
}

void check_budget(double v, const char* what) {
  if (std::isinf(v) && v > 0.0) return;
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string(what) + " budget must be positive or unbounded");
}

}  // namespace

void SystemConfig::validate() const {
  check_budget(budgets.optical_w, "optical");
  check_budget(budgets.electrical_w, "electrical");
  if (std::isinf(budgets.optical_w) && std::isinf(budgets.electrical_w))
    throw ValidationError("optical and electrical budgets cannot both be unbounded");
  if (!(circuit_power_w > 0.0) || !std::isfinite(circuit_power_w))
    throw ValidationError("circuit power must be positive");
  if (!std::isfinite(se_threshold)) throw ValidationError("SE threshold must be finite");
}

Link::Link(int half_subcarriers, std::vector<RateContext> data_subcarriers)
    : n_(half_subcarriers), ctx_(std::move(data_subcarriers)) {
  if (n_ < 2) throw ValidationError("need N >= 2");
  if (ctx_.size() != static_cast<std::size_t>(n_ - 1))
    throw ValidationError("a link with N = " + std::to_string(n_) + " has " +
                          std::to_string(n_ - 1) + " data subcarriers");
  for (const auto& c : ctx_) c.validate();
  const double w = ctx_.front().bandwidth_hz;
  for (const auto& c : ctx_)
    if (c.bandwidth_hz != w) throw ValidationError("subcarriers must share one bandwidth");
}

Link Link::from_gains(std::vector<double> gains_sq, std::shared_ptr<const AlphabetMetrics> alphabet,
                      double noise_psd, double bandwidth_hz) {
  if (!(noise_psd > 0.0)) throw ValidationError("noise PSD must be positive");
  std::vector<RateContext> ctx;
  for (double g : gains_sq) ctx.push_back(RateContext{alphabet, g, noise_psd * bandwidth_hz, bandwidth_hz});
  return Link(static_cast<int>(gains_sq.size()) + 1, std::move(ctx));
}

Link Link::from_channel(const ChannelGains& gains, std::shared_ptr<const AlphabetMetrics> alphabet,
                        double noise_psd, double bandwidth_hz) {
  return from_gains(gains.data_magnitudes_sq(), std::move(alphabet), noise_psd, bandwidth_hz);
}

std::vector<double> Link::optical_coeffs() const {
  std::vector<double> a;
  for (const auto& c : ctx_) {
    const double m = c.alphabet->constellation().mean_abs();
    a.push_back(m * m);
  }
  return a;
}

std::vector<double> Link::magnitudes() const {
  std::vector<double> h;
  for (const auto& c : ctx_) h.push_back(std::sqrt(c.gain_sq));
  return h;
}

double Link::total_rate(RateMetric metric, const std::vector<double>& powers) const {
  check_powers(*this, powers);
  double r = 0.0;
  for (std::size_t i = 0; i < ctx_.size(); ++i) r += rate(metric, ctx_[i], powers[i]);
  return r;
}

double Link::spectral_efficiency(RateMetric metric, const std::vector<double>& powers) const {
  return total_rate(metric, powers) / (2.0 * n_ * bandwidth_hz());
}

double Link::se_ceiling(RateMetric metric) const {
  double bits = 0.0;
  for (const auto& c : ctx_) {
    bits += c.alphabet->max_info_bits();
    if (metric == RateMetric::LowerBound) bits += 1.0 - 1.0 / kLn2;
  }
  return bits / (2.0 * n_);
}

double optical_rhs(const Link& link, const Budgets& b) {
  const double n = link.half_subcarriers();
  return n * b.optical_w * b.optical_w / (2.0 * (n - 1.0));
}

double electrical_rhs(const Link& link, const Budgets& b) {
  return b.electrical_w / (4.0 * link.half_subcarriers() - 2.0);
}

FeasibleSet linear_feasible_set(const Link& link, const Budgets& b) {
  SystemConfig{b, 1.0, 0.0}.validate();
  FeasibleSet set;
  set.optical_coeffs = link.optical_coeffs();
  set.optical_rhs = optical_rhs(link, b);
  set.electrical_rhs = electrical_rhs(link, b);
  return set;
}

double dc_bias(const Link& link, const std::vector<double>& powers) {
  check_powers(link, powers);
  double s = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i)
    s += std::sqrt(powers[i]) * link.context(i).alphabet->constellation().max_abs();
  return std::sqrt(2.0 / link.half_subcarriers()) * s;
}

PowerAllocation PowerAllocation::from_powers(const Link& link, std::vector<double> powers) {
  PowerAllocation a;
  a.dc_bias = dcovlc::dc_bias(link, powers);
  a.powers = std::move(powers);
  double sum = 0.0;
  for (double p : a.powers) sum += p;
  a.dc_power = 2.0 * link.half_subcarriers() * a.dc_bias * a.dc_bias;
  a.information_power = 2.0 * sum;
  a.optical_power = a.dc_bias;
  a.electrical_power = a.information_power + a.dc_power;
  return a;
}

SeSolution solve_se(RateMetric metric, const Link& link, const Budgets& budgets,
                    const BarrierOptions& options) {
  const FeasibleSet set = linear_feasible_set(link, budgets);
  const double scale = 1.0 / (2.0 * link.half_subcarriers() * link.bandwidth_hz());
  SeparableObjective obj;
  obj.dimension = link.size();
  obj.term = [&link, metric, scale](std::size_t i, double p) {
    Derivatives d = rate_derivatives(metric, link.context(i), p);
    d.value *= scale;
    d.first *= scale;
    d.second *= scale;
    return d;
  };
  SeSolution out;
  out.report = maximize_concave(obj, set, options);
  out.se = out.report.objective;
  out.allocation = PowerAllocation::from_powers(link, out.report.powers);
  return out;
}

// ---------------------------------------------------------------------------
// Mercury water-filling.

namespace {

class WaterLevels {
 public:
  explicit WaterLevels(const Link& link) : link_(link), a_(link.optical_coeffs()) {
    for (std::size_t i = 0; i < link.size(); ++i) {
      const auto& ctx = link.context(i);
      g_.push_back(ctx.gain_to_noise());
      saturation_.push_back(ctx.alphabet->mmse_inverse(kSaturationMmse));
    }
    hint_.assign(link.size(), -1.0);
  }

  double gain(std::size_t i) const { return g_[i]; }
  double coeff(std::size_t i) const { return a_[i]; }
  std::size_t size() const { return g_.size(); }

  // p_i(lambda_1, lambda_2); zero gains never receive power.
  std::vector<double> powers(double l1, double l2) {
    std::vector<double> p(size(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      if (!(g_[i] > 0.0)) continue;
      const double level = l1 * a_[i] + l2;
      const double target = level / g_[i];
      if (target >= 1.0) continue;
      double snr;
      if (target <= kSaturationMmse) {
        snr = saturation_[i];
      } else {
        snr = link_.context(i).alphabet->mmse_inverse(target, hint_[i]);
        hint_[i] = snr > 0.0 ? snr : -1.0;
      }
      p[i] = snr / g_[i];
    }
    return p;
  }

  double optical_use(const std::vector<double>& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += a_[i] * p[i];
    return s;
  }

 private:
  const Link& link_;
  std::vector<double> a_;
  std::vector<double> g_;
  std::vector<double> saturation_;
  std::vector<double> hint_;
};

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

bool narrow(double lo, double hi, double tol) { return hi - lo <= tol * std::max(1.0, hi); }

struct InnerResult {
  double l2 = 0.0;
  std::vector<double> powers;
  int steps = 0;
};

// Smallest lambda_2 >= 0 meeting the electrical budget at fixed lambda_1.
InnerResult solve_electrical(WaterLevels& w, double l1, double budget, const MercuryOptions& opt) {
  InnerResult r;
  r.powers = w.powers(l1, 0.0);
  if (!std::isfinite(budget) || sum(r.powers) <= budget) return r;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) hi = std::max(hi, w.gain(i));
  std::vector<double> at_hi(w.size(), 0.0);
  for (int it = 0; it < opt.max_bisection && !narrow(lo, hi, opt.lambda_tolerance); ++it) {
    const double mid = 0.5 * (lo + hi);
    auto p = w.powers(l1, mid);
    if (sum(p) <= budget) {
      hi = mid;
      at_hi = std::move(p);
    } else {
      lo = mid;
    }
    ++r.steps;
  }
  r.l2 = hi;
  r.powers = std::move(at_hi);
  return r;
}

}  // namespace

SeSolution solve_se_exact(const Link& link, const Budgets& budgets, const MercuryOptions& options) {
  const FeasibleSet set = linear_feasible_set(link, budgets);
  WaterLevels w(link);
  const double b1 = set.optical_rhs;
  const double b2 = set.electrical_rhs;

  int inner_steps = 0;
  int outer_steps = 0;
  InnerResult best = solve_electrical(w, 0.0, b2, options);
  inner_steps += best.steps;
  double l1 = 0.0;
  if (std::isfinite(b1) && w.optical_use(best.powers) > b1) {
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) hi = std::max(hi, w.gain(i) / w.coeff(i));
    InnerResult at_hi{0.0, std::vector<double>(w.size(), 0.0), 0};
    for (int it = 0; it < options.max_bisection && !narrow(lo, hi, options.lambda_tolerance); ++it) {
      const double mid = 0.5 * (lo + hi);
      InnerResult r = solve_electrical(w, mid, b2, options);
      inner_steps += r.steps;
      if (w.optical_use(r.powers) <= b1) {
        hi = mid;
        at_hi = std::move(r);
      } else {
        lo = mid;
      }
      ++outer_steps;
    }
    l1 = hi;
    best = std::move(at_hi);
  }

  SeSolution out;
  out.allocation = PowerAllocation::from_powers(link, best.powers);
  out.se = link.spectral_efficiency(RateMetric::Exact, best.powers);
  auto& rep = out.report;
  rep.powers = best.powers;
  rep.objective = out.se;
  // Water levels are in nats per watt of the unit-bandwidth problem; SE per
  // watt divides by 2N ln 2.
  const double to_se = 1.0 / (2.0 * link.half_subcarriers() * kLn2);
  rep.optical_dual = l1 * to_se;
  rep.electrical_dual = best.l2 * to_se;
  rep.kkt_residual = mercury_stationarity(link, best.powers, l1, best.l2);
  rep.iterations = inner_steps;
  rep.outer_iterations = outer_steps;
  rep.status = SolveStatus::Converged;
  rep.objective_trace.push_back(out.se);
  return out;
}

double mercury_stationarity(const Link& link, const std::vector<double>& powers,
                            double optical_dual_nats, double electrical_dual_nats) {
  check_powers(link, powers);
  const auto a = link.optical_coeffs();
  double worst = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] > 0.0)) continue;
    const auto& ctx = link.context(i);
    const double level = optical_dual_nats * a[i] + electrical_dual_nats;
    const double snr = ctx.snr(powers[i]);
    const double m = ctx.alphabet->mmse(snr);
    // A saturated subcarrier sits on the flat tail; its slope is below the
    // resolution the level can be compared against.
    if (level <= 0.0 && m <= kSaturationMmse * 1.000001) continue;
    const double lhs = ctx.gain_to_noise() * m;
    worst = std::max(worst, std::abs(lhs - level) / std::max(level, 1e-300));
  }
  return worst;
}

TimeDomainStats simulate_time_domain(const Link& link, const std::vector<double>& powers,
                                     std::uint64_t symbols, std::uint64_t seed) {
  check_powers(link, powers);
  if (symbols < 1) throw ValidationError("need at least one OFDM symbol");
  const int n = link.half_subcarriers();
  const int len = 2 * n;
  const std::size_t data = link.size();

  std::vector<double> cosv(static_cast<std::size_t>(len) * data);
  std::vector<double> sinv(cosv.size());
  for (int k = 0; k < len; ++k)
    for (std::size_t i = 0; i < data; ++i) {
      const double ph = kPi * k * static_cast<double>(i + 1) / n;
      cosv[k * data + i] = std::cos(ph);
      sinv[k * data + i] = std::sin(ph);
    }
  std::vector<double> amp(data);
  for (std::size_t i = 0; i < data; ++i) amp[i] = std::sqrt(2.0 / n) * std::sqrt(powers[i]);

  TimeDomainStats st;
  st.dc_bias = dc_bias(link, powers);
  st.symbols = symbols;
  st.min_x = std::numeric_limits<double>::infinity();
  const double clip_tol = 1e-12 * std::max(1.0, st.dc_bias);

  std::mt19937_64 rng(seed);
  std::vector<cplx> x(data);
  double acc = 0.0;
  double acc_sq = 0.0;
  for (std::uint64_t s = 0; s < symbols; ++s) {
    for (std::size_t i = 0; i < data; ++i) {
      const auto pts = link.context(i).alphabet->constellation().points();
      std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
      x[i] = pts[pick(rng)];
    }
    for (int k = 0; k < len; ++k) {
      double v = 0.0;
      for (std::size_t i = 0; i < data; ++i)
        v += amp[i] * (x[i].real() * cosv[k * data + i] - x[i].imag() * sinv[k * data + i]);
      st.min_x = std::min(st.min_x, v);
      const double biased = v + st.dc_bias;
      if (biased < -clip_tol) ++st.clipping_events;
      acc += biased;
      acc_sq += biased * biased;
    }
  }
  const double count = static_cast<double>(symbols);
  st.mean_x_dc = acc / (count * len);
  st.sum_mean_x_dc_sq = acc_sq / count;
  return st;
}

}  // namespace dcovlc
