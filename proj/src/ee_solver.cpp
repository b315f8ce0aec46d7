#include "dcovlc/ee_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void check_circuit(double pc) {
  if (!(pc > 0.0) || !std::isfinite(pc)) throw ValidationError("circuit power must be positive");
}

}  // namespace

double ee_denominator(const Link& link, const std::vector<double>& powers, double circuit_power_w) {
  check_circuit(circuit_power_w);
  return (4.0 * link.half_subcarriers() - 2.0) * sum(powers) + circuit_power_w;
}

double evaluate_ee(RateMetric metric, const Link& link, const std::vector<double>& powers,
                   double circuit_power_w) {
  const double den = ee_denominator(link, powers, circuit_power_w);
  return link.total_rate(metric, powers) / den;
}

double evaluate_ee_exact_denominator(RateMetric metric, const Link& link,
                                     const std::vector<double>& powers, double circuit_power_w) {
  check_circuit(circuit_power_w);
  const auto alloc = PowerAllocation::from_powers(link, powers);
  return link.total_rate(metric, powers) / (alloc.electrical_power + circuit_power_w);
}

EeSolution solve_ee(RateMetric metric, const Link& link, const SystemConfig& config,
                    const EeOptions& options) {
  config.validate();
  if (!(options.tolerance > 0.0) || options.max_iterations < 1)
    throw ValidationError("Dinkelbach tolerance and iteration cap must be positive");

  FeasibleSet set = linear_feasible_set(link, config.budgets);
  const double bw_total = 2.0 * link.half_subcarriers() * link.bandwidth_hz();
  const double den_slope = 4.0 * link.half_subcarriers() - 2.0;
  const double pc = config.circuit_power_w;

  // Everything below is in SE units: the rate is divided by 2NW.
  // The objective and the threshold share one term; the barrier asks for both
  // at every trial point, so the last evaluation per subcarrier is reused.
  auto last_p = std::make_shared<std::vector<double>>(link.size(), -1.0);
  auto last_d = std::make_shared<std::vector<Derivatives>>(link.size());
  const SeparableTerm se_term = [&link, metric, bw_total, last_p, last_d](std::size_t i,
                                                                          double p) {
    if ((*last_p)[i] == p) return (*last_d)[i];
    Derivatives d = rate_derivatives(metric, link.context(i), p);
    d.value /= bw_total;
    d.first /= bw_total;
    d.second /= bw_total;
    (*last_p)[i] = p;
    (*last_d)[i] = d;
    return d;
  };
  if (config.se_threshold > 0.0) set.threshold = ThresholdConstraint{se_term, config.se_threshold};

  EeSolution out;
  double q = 0.0;
  double q_solved = 0.0;  // parameter of the last subproblem
  BarrierOptions inner = options.inner;
  for (int it = 0; it < options.max_iterations; ++it) {
    SeparableObjective obj{link.size(), se_term, q * den_slope / bw_total, q * pc / bw_total};
    SolveReport rep = maximize_concave(obj, set, inner);
    out.iterations = it + 1;
    if (rep.status == SolveStatus::Infeasible) {
      out.status = SolveStatus::Infeasible;
      out.message = rep.message;
      out.last_inner = std::move(rep);
      return out;
    }
    const double q_next = evaluate_ee(metric, link, rep.powers, pc);
    out.q_trace.push_back(q_next);
    const bool done = std::abs(q_next - q) <= options.tolerance * std::max(1.0, std::abs(q_next));
    out.last_inner = std::move(rep);
    q_solved = q;
    q = q_next;
    if (done) {
      out.status = SolveStatus::Converged;
      break;
    }
  }
  if (out.status != SolveStatus::Converged) out.message = "Dinkelbach iteration cap reached";

  const auto& p = out.last_inner.powers;
  out.allocation = PowerAllocation::from_powers(link, p);
  out.ee = q;
  out.ee_exact_denominator = evaluate_ee_exact_denominator(metric, link, p, pc);
  out.se = link.spectral_efficiency(metric, p);
  // Dinkelbach root: the optimal value of the last subproblem tends to zero.
  const double f = link.total_rate(metric, p) - q_solved * ee_denominator(link, p, pc);
  out.root_residual = std::abs(f) / std::max(q * pc, 1e-300);
  return out;
}

}  // namespace dcovlc
