#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcovlc/info_metrics.hpp"

namespace dcovlc {

/// Per-coordinate concave term: returns value and derivatives at `power`.
using SeparableTerm = std::function<Derivatives(std::size_t index, double power)>;

/// sum_i term(i, p_i) - linear_cost * sum_i p_i - constant.
struct SeparableObjective {
  std::size_t dimension = 0;
  SeparableTerm term;
  double linear_cost = 0.0;
  double constant = 0.0;
};

/// sum_i term(i, p_i) >= threshold, with each term concave.
struct ThresholdConstraint {
  SeparableTerm term;
  double threshold = 0.0;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// { p >= 0, sum a_i p_i <= optical_rhs, sum p_i <= electrical_rhs, [threshold] }.
/// An infinite right-hand side drops that constraint.
struct FeasibleSet {
  std::vector<double> optical_coeffs;
  double optical_rhs = kUnbounded;
  double electrical_rhs = kUnbounded;
  std::optional<ThresholdConstraint> threshold;
};

enum class SolveStatus { Converged, Infeasible, MaxIterations };

const char* to_string(SolveStatus status);

struct SolveReport {
  std::vector<double> powers;
  double objective = 0.0;
  double optical_dual = 0.0;
  double electrical_dual = 0.0;
  double threshold_dual = 0.0;
  double kkt_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;        // Newton steps
  int outer_iterations = 0;  // barrier updates
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<double> objective_trace;  // objective after each centering
  std::string message;
};

struct BarrierOptions {
  double tolerance = 1e-8;  // on the duality-gap estimate m / t
  double mu = 10.0;
  int max_newton_per_center = 200;
  int max_outer = 60;
  /// Starting point; must be strictly feasible if given.
  std::optional<std::vector<double>> start;
};

/// Maximizes a separable concave objective over a FeasibleSet with a
/// log-barrier interior-point method (damped Newton centering, barrier
/// parameter multiplied by `mu` per outer step).
///
/// A threshold constraint that the default start violates triggers a phase-I
/// maximization of the threshold term; if even its maximum misses the
/// threshold the report comes back with status Infeasible. Throws
/// NumericalError on non-finite objective values or derivatives.
SolveReport maximize_concave(const SeparableObjective& objective, const FeasibleSet& set,
                             const BarrierOptions& options = {});

}  // namespace dcovlc
