#pragma once

#include <string>
#include <vector>

#include "dcovlc/se_solver.hpp"

namespace dcovlc {

/// (4N-2) sum p_i + P_c: the DC power replaced by its Cauchy-Schwarz bound.
double ee_denominator(const Link& link, const std::vector<double>& powers, double circuit_power_w);

/// Total rate over the bounded denominator, in bits/J. This is the solved model.
double evaluate_ee(RateMetric metric, const Link& link, const std::vector<double>& powers,
                   double circuit_power_w);

/// Total rate over 2 sum p_i + 2N I_dc^2 + P_c. Reporting only; never smaller
/// than evaluate_ee because the bound overestimates the DC power.
double evaluate_ee_exact_denominator(RateMetric metric, const Link& link,
                                     const std::vector<double>& powers, double circuit_power_w);

struct EeOptions {
  double tolerance = 1e-8;  // on |q_{n+1} - q_n| / max(1, |q_{n+1}|)
  int max_iterations = 100;
  BarrierOptions inner;
};

struct EeSolution {
  PowerAllocation allocation;
  double ee = 0.0;                   // bits/J, bounded denominator
  double ee_exact_denominator = 0.0;  // bits/J, diagnostic
  double se = 0.0;                   // bits/s/Hz under the solved metric
  std::vector<double> q_trace;       // q after each subproblem
  double root_residual = 0.0;        // |f(p, q_prev)| / (q P_c), q_prev of the last subproblem
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  SolveReport last_inner;
};

/// Dinkelbach iterations on max R(p) / ((4N-2) sum p + P_c) under both
/// budgets and SE(p) >= se_threshold (dropped when the threshold is <= 0).
/// Starts from q = 0, so the first subproblem is the SE maximization and
/// doubles as the feasibility check of the threshold.
EeSolution solve_ee(RateMetric metric, const Link& link, const SystemConfig& config,
                    const EeOptions& options = {});

}  // namespace dcovlc
