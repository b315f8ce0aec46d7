#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dcovlc/convex_core.hpp"
#include "dcovlc/info_metrics.hpp"
#include "dcovlc/vlc_channel.hpp"

namespace dcovlc {

/// Average optical (W) and total electrical (W) budgets. kUnbounded drops one.
struct Budgets {
  double optical_w = kUnbounded;
  double electrical_w = kUnbounded;
};

struct SystemConfig {
  Budgets budgets;
  double circuit_power_w = 0.1;
  double se_threshold = 0.0;  // bits/s/Hz; <= 0 disables the constraint

  void validate() const;
};

/// The N-1 data subcarriers of one DCO-OFDM link (DC and Nyquist carriers
/// are left empty). Each subcarrier may carry its own alphabet.
class Link {
 public:
  Link(int half_subcarriers, std::vector<RateContext> data_subcarriers);

  /// Builds contexts for i = 1..N-1 from channel gains and noise PSD (A^2/Hz).
  static Link from_channel(const ChannelGains& gains,
                           std::shared_ptr<const AlphabetMetrics> alphabet, double noise_psd,
                           double bandwidth_hz);
  /// Flat-alphabet link from raw |H_i|^2 values for i = 1..N-1.
  static Link from_gains(std::vector<double> gains_sq,
                         std::shared_ptr<const AlphabetMetrics> alphabet, double noise_psd,
                         double bandwidth_hz);

  int half_subcarriers() const { return n_; }
  std::size_t size() const { return ctx_.size(); }
  const RateContext& context(std::size_t i) const { return ctx_.at(i); }
  double bandwidth_hz() const { return ctx_.front().bandwidth_hz; }

  /// E^2{|X_i|} per data subcarrier.
  std::vector<double> optical_coeffs() const;
  /// |H_i| per data subcarrier.
  std::vector<double> magnitudes() const;

  /// Sum of per-subcarrier rates in bits/s.
  double total_rate(RateMetric metric, const std::vector<double>& powers) const;
  /// Total rate over 2NW, in bits/s/Hz.
  double spectral_efficiency(RateMetric metric, const std::vector<double>& powers) const;
  /// The SE that saturated subcarriers reach: (N-1)/(2N) log2 M for one alphabet.
  double se_ceiling(RateMetric metric) const;

 private:
  int n_;
  std::vector<RateContext> ctx_;
};

/// Optical budget mapped onto sum a_i p_i (Cauchy-Schwarz on the DC bias).
double optical_rhs(const Link& link, const Budgets& b);
/// Electrical budget mapped onto sum p_i.
double electrical_rhs(const Link& link, const Budgets& b);

/// Linear part of the feasible set; the threshold is attached by callers.
FeasibleSet linear_feasible_set(const Link& link, const Budgets& b);

/// Non-clipping DC bias sqrt(2/N) sum_i sqrt(p_i) max_k |X_{i,k}|.
double dc_bias(const Link& link, const std::vector<double>& powers);

struct PowerAllocation {
  std::vector<double> powers;  // p_1..p_{N-1}
  double dc_bias = 0.0;
  double dc_power = 0.0;           // 2N I_dc^2
  double information_power = 0.0;  // 2 sum p_i
  double optical_power = 0.0;      // E{x_dc} = I_dc
  double electrical_power = 0.0;   // information + DC

  static PowerAllocation from_powers(const Link& link, std::vector<double> powers);
};

struct SeSolution {
  PowerAllocation allocation;
  double se = 0.0;  // bits/s/Hz under the solved metric
  SolveReport report;  // duals in SE units per watt
};

/// SE maximization through the barrier solver, for any metric. The exact
/// metric uses the analytic MMSE gradient and its derivative.
SeSolution solve_se(RateMetric metric, const Link& link, const Budgets& budgets,
                    const BarrierOptions& options = {});

struct MercuryOptions {
  double lambda_tolerance = 1e-9;  // outer and inner bracket width, relative to max(1, lambda)
  int max_bisection = 200;
};

/// Exact-rate SE maximization by multi-level mercury water-filling: nested
/// bisection on the optical and electrical multipliers with
/// p_i = MMSE^-1((lambda_1 a_i + lambda_2) / g_i) / g_i.
SeSolution solve_se_exact(const Link& link, const Budgets& budgets,
                          const MercuryOptions& options = {});

/// max_i |g_i mmse(snr_i) - (lambda_1 a_i + lambda_2)| / (lambda_1 a_i + lambda_2)
/// over active subcarriers, with multipliers in the nats-per-watt units of
/// the water-filling equations (duals from solve_se_exact times 2N ln 2).
double mercury_stationarity(const Link& link, const std::vector<double>& powers,
                            double optical_dual_nats, double electrical_dual_nats);

struct TimeDomainStats {
  double dc_bias = 0.0;
  double min_x = 0.0;            // sample min of x_k
  double mean_x_dc = 0.0;        // sample mean of x_k + I_dc
  double sum_mean_x_dc_sq = 0.0;  // sum_k of sample E{(x_k + I_dc)^2}
  std::uint64_t clipping_events = 0;
  std::uint64_t symbols = 0;
};

/// Draws OFDM symbols with equiprobable data, builds the real IFFT output
/// x_k = sqrt(2/N) sum_i sqrt(p_i) Re(X_i e^{j pi k i / N}) and measures the
/// biased signal. Bit-reproducible for a fixed seed.
TimeDomainStats simulate_time_domain(const Link& link, const std::vector<double>& powers,
                                     std::uint64_t symbols, std::uint64_t seed);

}  // namespace dcovlc
