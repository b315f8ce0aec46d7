#include "dcovlc/convex_core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "dcovlc/errors.hpp"

namespace dcovlc {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::MaxIterations:
      return "max-iter";
  }
  return "unknown";
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kArmijo = 0.01;
constexpr double kBacktrack = 0.5;
constexpr double kCenteringDecrement = 1e-20;
constexpr double kStallDecrement = 1e-6;

struct TermSums {
  double value = 0.0;
  Vec grad;
  Vec hess;  // diagonal
};

TermSums sum_terms(const SeparableTerm& term, const Vec& p) {
  TermSums out;
  const auto n = p.size();
  out.grad.resize(n);
  out.hess.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Derivatives d = term(static_cast<std::size_t>(i), p(i));
    if (!std::isfinite(d.value) || !std::isfinite(d.first) || !std::isfinite(d.second))
      throw NumericalError("objective term is not finite at coordinate " + std::to_string(i));
    out.value += d.value;
    out.grad(i) = d.first;
    out.hess(i) = d.second;
  }
  return out;
}

// Objective and constraint values at one point, with everything the Newton
// system needs.
struct Point {
  Vec p;
  TermSums obj;  // raw term sums, before the linear part
  TermSums thr;
  double slack_optical = kUnbounded;
  double slack_electrical = kUnbounded;
  double slack_threshold = kUnbounded;

  double objective(const SeparableObjective& o) const {
    return obj.value - o.linear_cost * p.sum() - o.constant;
  }
};

class BarrierProblem {
 public:
  BarrierProblem(const SeparableObjective& objective, const FeasibleSet& set)
      : obj_(objective), set_(set), n_(static_cast<Eigen::Index>(objective.dimension)) {
    a_ = Vec::Ones(n_);
    if (!set.optical_coeffs.empty()) {
      if (set.optical_coeffs.size() != objective.dimension)
        throw ValidationError("optical coefficient count does not match dimension");
      for (Eigen::Index i = 0; i < n_; ++i) a_(i) = set.optical_coeffs[static_cast<std::size_t>(i)];
    }
    has_optical_ = std::isfinite(set.optical_rhs);
    has_electrical_ = std::isfinite(set.electrical_rhs);
    has_threshold_ = set.threshold.has_value();
  }

  Eigen::Index dimension() const { return n_; }
  bool has_threshold() const { return has_threshold_; }
  const Vec& optical_coeffs() const { return a_; }

  double constraint_count() const {
    return static_cast<double>(n_) + (has_optical_ ? 1 : 0) + (has_electrical_ ? 1 : 0) +
           (has_threshold_ ? 1 : 0);
  }

  // Linear feasibility only (cheap).
  bool linear_interior(const Vec& p) const {
    if ((p.array() <= 0.0).any()) return false;
    if (has_optical_ && !(set_.optical_rhs - a_.dot(p) > 0.0)) return false;
    if (has_electrical_ && !(set_.electrical_rhs - p.sum() > 0.0)) return false;
    return true;
  }

  Point evaluate(const Vec& p) const {
    Point pt;
    pt.p = p;
    if (has_optical_) pt.slack_optical = set_.optical_rhs - a_.dot(p);
    if (has_electrical_) pt.slack_electrical = set_.electrical_rhs - p.sum();
    fill_terms(pt);
    return pt;
  }

  // Point at cur + s dir. Slacks are updated by the step itself rather than
  // recomputed as rhs - a.p, which would cancel catastrophically once the
  // barrier pushes them to ~1e-10 of the budget.
  std::optional<Point> step(const Point& cur, const Vec& dir, double s) const {
    Point pt;
    pt.p = cur.p + s * dir;
    if ((pt.p.array() <= 0.0).any()) return std::nullopt;
    if (has_optical_) {
      pt.slack_optical = cur.slack_optical - s * a_.dot(dir);
      if (!(pt.slack_optical > 0.0)) return std::nullopt;
    }
    if (has_electrical_) {
      pt.slack_electrical = cur.slack_electrical - s * dir.sum();
      if (!(pt.slack_electrical > 0.0)) return std::nullopt;
    }
    return pt;
  }

  void fill_terms(Point& pt) const {
    pt.obj = sum_terms(obj_.term, pt.p);
    if (has_threshold_) {
      pt.thr = sum_terms(set_.threshold->term, pt.p);
      pt.slack_threshold = pt.thr.value - set_.threshold->threshold;
    }
  }

  bool interior(const Point& pt) const {
    return (pt.p.array() > 0.0).all() && pt.slack_optical > 0.0 && pt.slack_electrical > 0.0 &&
           (!has_threshold_ || pt.slack_threshold > 0.0);
  }

  Vec objective_gradient(const Point& pt) const {
    return pt.obj.grad - Vec::Constant(n_, obj_.linear_cost);
  }

  // Gradient of the log-barrier terms only.
  Vec barrier_gradient(const Point& pt) const {
    Vec g = pt.p.cwiseInverse();
    if (has_optical_) g -= a_ / pt.slack_optical;
    if (has_electrical_) g -= Vec::Constant(n_, 1.0 / pt.slack_electrical);
    if (has_threshold_) g += pt.thr.grad / pt.slack_threshold;
    return g;
  }

  // Negated Hessian of t*F + barrier; positive definite in the interior.
  Mat negated_hessian(const Point& pt, double t) const {
    Vec diag = -t * pt.obj.hess + pt.p.array().square().inverse().matrix();
    if (has_threshold_) diag -= pt.thr.hess / pt.slack_threshold;
    Mat h = diag.asDiagonal();
    if (has_optical_) h += (a_ * a_.transpose()) / (pt.slack_optical * pt.slack_optical);
    if (has_electrical_)
      h.array() += 1.0 / (pt.slack_electrical * pt.slack_electrical);
    if (has_threshold_)
      h += (pt.thr.grad * pt.thr.grad.transpose()) /
           (pt.slack_threshold * pt.slack_threshold);
    return h;
  }

  // phi(next) - phi(cur) accumulated term by term to limit cancellation.
  double barrier_increase(const Point& cur, const Point& next, double t) const {
    double d = t * ((next.obj.value - cur.obj.value) -
                    obj_.linear_cost * (next.p.sum() - cur.p.sum()));
    d += (next.p.array().log() - cur.p.array().log()).sum();
    if (has_optical_) d += std::log(next.slack_optical / cur.slack_optical);
    if (has_electrical_) d += std::log(next.slack_electrical / cur.slack_electrical);
    if (has_threshold_) d += std::log(next.slack_threshold / cur.slack_threshold);
    return d;
  }

  const SeparableObjective& objective() const { return obj_; }
  const FeasibleSet& set() const { return set_; }
  bool has_optical() const { return has_optical_; }
  bool has_electrical() const { return has_electrical_; }

 private:
  const SeparableObjective& obj_;
  const FeasibleSet& set_;
  Eigen::Index n_;
  Vec a_;
  bool has_optical_ = false;
  bool has_electrical_ = false;
  bool has_threshold_ = false;
};

struct CenterResult {
  Point point;
  int newton_steps = 0;
};

CenterResult center(const BarrierProblem& prob, Point cur, double t, double stationarity_tol,
                    int max_steps) {
  CenterResult res;
  double last_decrement = kUnbounded;
  int stalled = 0;
  for (int step = 0; step < max_steps; ++step) {
    const Vec grad_f = prob.objective_gradient(cur);
    const Vec grad = t * grad_f + prob.barrier_gradient(cur);
    const double scale = t * std::max(1.0, grad_f.lpNorm<Eigen::Infinity>());
    if (grad.lpNorm<Eigen::Infinity>() <= stationarity_tol * scale) break;

    const Mat h = prob.negated_hessian(cur, t);
    Eigen::LDLT<Mat> ldlt(h);
    Vec dir = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !dir.allFinite()) {
      // Fall back to a scaled gradient step.
      dir = grad.cwiseQuotient(h.diagonal().cwiseMax(1e-300));
    }
    const double decrement = grad.dot(dir);
    if (!std::isfinite(decrement)) throw NumericalError("Newton decrement is not finite");
    if (decrement / 2.0 <= kCenteringDecrement) break;
    // Near the center a nonlinear slack that has shrunk to round-off level
    // stops the decrement from improving; further steps only shuffle noise.
    stalled = decrement < kStallDecrement && decrement > 0.25 * last_decrement ? stalled + 1 : 0;
    if (stalled >= 3) break;
    last_decrement = decrement;

    double s = 1.0;
    while (!prob.step(cur, dir, s) && s > 1e-30) s *= kBacktrack;
    bool moved = false;
    while (s > 1e-20) {
      if (auto next = prob.step(cur, dir, s)) {
        prob.fill_terms(*next);
        if (prob.interior(*next)) {
          // phi is concave along the ray, so a non-negative slope at the trial
          // point certifies ascent even when the value change is round-off.
          const double slope =
              (t * prob.objective_gradient(*next) + prob.barrier_gradient(*next)).dot(dir);
          if (slope >= 0.0 || prob.barrier_increase(cur, *next, t) >= kArmijo * s * decrement) {
            cur = std::move(*next);
            moved = true;
            break;
          }
        }
      }
      s *= kBacktrack;
    }
    ++res.newton_steps;
    if (!moved) break;  // no representable ascent left
  }
  res.point = std::move(cur);
  return res;
}

Vec default_start(const BarrierProblem& prob) {
  const auto n = prob.dimension();
  double level = kUnbounded;
  if (prob.has_optical()) level = std::min(level, prob.set().optical_rhs / prob.optical_coeffs().sum());
  if (prob.has_electrical())
    level = std::min(level, prob.set().electrical_rhs / static_cast<double>(n));
  return Vec::Constant(n, 0.5 * level);
}

SolveReport infeasible(std::string message) {
  SolveReport r;
  r.status = SolveStatus::Infeasible;
  r.message = std::move(message);
  return r;
}

}  // namespace

SolveReport maximize_concave(const SeparableObjective& objective, const FeasibleSet& set,
                             const BarrierOptions& options) {
  if (objective.dimension == 0) throw ValidationError("empty power vector");
  if (!objective.term) throw ValidationError("objective has no term");
  if (!(options.tolerance > 0.0) || !(options.mu > 1.0))
    throw ValidationError("barrier tolerance must be positive and mu > 1");
  if (!std::isfinite(set.optical_rhs) && !std::isfinite(set.electrical_rhs))
    throw ValidationError("at least one power budget must be finite");
  if (set.optical_rhs <= 0.0 || set.electrical_rhs <= 0.0)
    return infeasible("power budget is not positive");
  for (double a : set.optical_coeffs)
    if (!(a > 0.0)) throw ValidationError("optical coefficients must be positive");

  const BarrierProblem prob(objective, set);
  const auto n = prob.dimension();

  Vec start;
  if (options.start) {
    if (options.start->size() != objective.dimension)
      throw ValidationError("start point has wrong dimension");
    start = Eigen::Map<const Vec>(options.start->data(), n);
    if (!prob.linear_interior(start)) throw ValidationError("start point is not strictly feasible");
  } else {
    start = default_start(prob);
  }

  Point cur = prob.evaluate(start);
  int phase1_steps = 0;
  if (prob.has_threshold() && !prob.interior(cur)) {
    // Phase I: maximize the threshold term alone over the linear constraints.
    SeparableObjective phase1_obj{objective.dimension, set.threshold->term, 0.0, 0.0};
    FeasibleSet linear = set;
    linear.threshold.reset();
    BarrierOptions phase1_opts = options;
    phase1_opts.start = std::vector<double>(start.data(), start.data() + n);
    const SolveReport ph = maximize_concave(phase1_obj, linear, phase1_opts);
    phase1_steps = ph.iterations;
    const double best = ph.objective;
    const double gamma = set.threshold->threshold;
    if (!(best > gamma)) {
      SolveReport r = infeasible("threshold " + std::to_string(gamma) +
                                 " exceeds its maximum " + std::to_string(best));
      r.powers = ph.powers;
      r.iterations = phase1_steps;
      return r;
    }
    // Concavity: the blend keeps the threshold value above the midpoint.
    const Vec best_p = Eigen::Map<const Vec>(ph.powers.data(), n);
    const double start_value = cur.thr.value;
    const double goal = gamma + 0.5 * (best - gamma);
    const double theta = std::clamp((goal - start_value) / (best - start_value), 0.0, 1.0);
    cur = prob.evaluate(theta * best_p + (1.0 - theta) * start);
    if (!prob.interior(cur)) cur = prob.evaluate(best_p);
    if (!prob.interior(cur)) return infeasible("phase I produced no interior point");
  }

  const double m = prob.constraint_count();
  const Vec grad_f = prob.objective_gradient(cur);
  const Vec grad_b = prob.barrier_gradient(cur);
  double t = grad_b.norm() / std::max(grad_f.norm(), 1e-300);
  t = std::clamp(t, 1e-8, 1e8);

  SolveReport report;
  report.iterations = phase1_steps;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    CenterResult c = center(prob, std::move(cur), t, 1e-2 * options.tolerance,
                            options.max_newton_per_center);
    cur = std::move(c.point);
    report.iterations += c.newton_steps;
    report.outer_iterations = outer + 1;
    report.objective_trace.push_back(cur.objective(objective));
    if (m / t <= options.tolerance) break;
    t *= options.mu;
  }

  report.powers.assign(cur.p.data(), cur.p.data() + n);
  report.objective = cur.objective(objective);
  report.duality_gap = m / t;
  if (prob.has_optical()) report.optical_dual = 1.0 / (t * cur.slack_optical);
  if (prob.has_electrical()) report.electrical_dual = 1.0 / (t * cur.slack_electrical);

  // Stationarity of the Lagrangian with barrier-implied multipliers. The
  // threshold multiplier is refit by least squares because 1/(t slack) carries
  // the round-off of a slack computed as a difference of O(1) values.
  const Vec gf = prob.objective_gradient(cur);
  Vec residual = gf + cur.p.cwiseInverse() / t;
  if (prob.has_optical()) residual -= report.optical_dual * prob.optical_coeffs();
  if (prob.has_electrical()) residual.array() -= report.electrical_dual;
  if (prob.has_threshold()) {
    const Vec& gs = cur.thr.grad;
    const double barrier_dual = 1.0 / (t * cur.slack_threshold);
    const double denom = gs.squaredNorm();
    const double fit = denom > 0.0 ? -residual.dot(gs) / denom : barrier_dual;
    report.threshold_dual = std::max(0.0, fit);
    residual += report.threshold_dual * gs;
  }
  report.kkt_residual = residual.lpNorm<Eigen::Infinity>() / std::max(1.0, gf.lpNorm<Eigen::Infinity>());

  const bool gap_ok = report.duality_gap <= options.tolerance;
  const bool kkt_ok = report.kkt_residual <= options.tolerance;
  report.status = gap_ok && kkt_ok ? SolveStatus::Converged : SolveStatus::MaxIterations;
  if (!gap_ok) report.message = "barrier parameter did not reach the gap tolerance";
  else if (!kkt_ok) report.message = "centering left a stationarity residual above tolerance";
  return report;
}

}  // namespace dcovlc
