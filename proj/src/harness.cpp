#include "dcovlc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

#include "dcovlc/errors.hpp"

namespace dcovlc {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Run {
  const Scenario& scenario;
  RateMetric metric;
  std::uint64_t seed;
  int quad_order;
  int jobs;
  std::shared_ptr<const AlphabetMetrics> alphabet;
};

Run make_run(const Scenario& s, const RunOptions& o, RateMetric fallback_metric) {
  const int quad = o.quad_order.value_or(s.solver.quad_order);
  if (quad < 8) throw ValidationError("quadrature order must be >= 8");
  if (o.jobs < 1) throw ValidationError("--jobs must be >= 1");
  AlphabetMetrics::Options ao;
  ao.quad_order = quad;
  ao.use_mmse_table = s.solver.use_mmse_table;
  return Run{s,
             o.metric.value_or(fallback_metric),
             o.seed.value_or(s.solver.seed),
             quad,
             o.jobs,
             std::make_shared<const AlphabetMetrics>(make_qam(s.qam_order), ao)};
}

Link make_link(const Run& r, int half_subcarriers) {
  const auto& s = r.scenario;
  const auto gains =
      subcarrier_gains(s.geometry, s.front_end, half_subcarriers, s.bandwidth_hz, s.channel);
  return Link::from_channel(gains, r.alphabet, s.noise_psd, s.bandwidth_hz);
}

void header(std::ostream& os, std::string_view command, const Run& r, bool with_metric,
            bool with_seed) {
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(scenario_hash(r.scenario)));
  os << "# command: " << command << "\n";
  os << "# scenario_fnv1a64: " << hash << "\n";
  if (with_metric) os << "# metric: " << to_string(r.metric) << "\n";
  if (with_seed) os << "# seed: " << r.seed << "\n";
  os << "# quad_order: " << r.quad_order << "\n";
}

// Runs body(i) for i in [0, n) on `jobs` threads. Results land in per-index
// slots, so output order never depends on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string power_columns(std::size_t count) {
  std::string s;
  for (std::size_t i = 1; i <= count; ++i) s += ",p_" + std::to_string(i) + "_w";
  return s;
}

std::string power_values(const std::vector<double>& p, std::size_t count) {
  std::string s;
  for (std::size_t i = 0; i < count; ++i) s += "," + (i < p.size() ? num(p[i]) : std::string("nan"));
  return s;
}

SeSolution solve_se_for(const Run& r, const Link& link, const Budgets& b) {
  if (r.metric == RateMetric::Exact) return solve_se_exact(link, b);
  BarrierOptions opt;
  opt.tolerance = r.scenario.solver.tolerance;
  return solve_se(r.metric, link, b, opt);
}

// ---------------------------------------------------------------------------

CommandOutcome cmd_channel(const Scenario& s, const RunOptions& o) {
  const Run r = make_run(s, o, s.solver.metric);
  const auto gains =
      subcarrier_gains(s.geometry, s.front_end, s.half_subcarriers, s.bandwidth_hz, s.channel);
  std::ostringstream os;
  header(os, "channel", r, false, false);
  os << "subcarrier,frequency_hz,magnitude,phase_rad,los_magnitude,diffuse_magnitude\n";
  for (int i = 1; i < s.half_subcarriers; ++i) {
    const auto k = static_cast<std::size_t>(i);
    os << i << "," << num(gains.frequency_hz[k]) << "," << num(std::abs(gains.total[k])) << ","
       << num(std::arg(gains.total[k])) << "," << num(std::abs(gains.los[k])) << ","
       << num(std::abs(gains.diffuse[k])) << "\n";
  }
  return {os.str(), kExitOk, ""};
}

CommandOutcome cmd_rate_curves(const Scenario& s, const RunOptions& o) {
  const Run r = make_run(s, o, s.solver.metric);
  const Link link = make_link(r, s.half_subcarriers);
  const auto& spec = s.solver.rate_curves;
  for (int i : spec.subcarriers)
    if (i < 1 || i >= s.half_subcarriers)
      throw ValidationError("subcarrier " + std::to_string(i) + " is outside 1.." +
                            std::to_string(s.half_subcarriers - 1));

  const std::size_t points = static_cast<std::size_t>(spec.power_points);
  const std::size_t rows = spec.subcarriers.size() * points;
  std::vector<std::string> lines(rows);
  parallel_for(rows, r.jobs, [&](std::size_t row) {
    const int sub = spec.subcarriers[row / points];
    const std::size_t k = row % points;
    const double p = points == 1 ? spec.power_min_w
                                 : spec.power_min_w + (spec.power_max_w - spec.power_min_w) *
                                                          static_cast<double>(k) / (points - 1);
    const auto& ctx = link.context(static_cast<std::size_t>(sub - 1));
    const auto exact = rate_derivatives(RateMetric::Exact, ctx, p);
    const auto lower = rate_derivatives(RateMetric::LowerBound, ctx, p);
    lines[row] = std::to_string(sub) + "," + num(p) + "," + num(exact.value) + "," +
                 num(lower.value) + "," + num(rate_approx(ctx, p)) + "," +
                 num(exact.first) + "," + num(lower.first) + "\n";
  });
  std::ostringstream os;
  header(os, "rate-curves", r, false, false);
  os << "subcarrier,power_w,rate_exact_bps,rate_lower_bps,rate_approx_bps,"
        "grad_exact_bps_per_w,grad_approx_bps_per_w\n";
  for (const auto& l : lines) os << l;
  return {os.str(), kExitOk, ""};
}

CommandOutcome cmd_se(const Scenario& s, const RunOptions& o) {
  const Run r = make_run(s, o, s.solver.metric);
  const Link link = make_link(r, s.half_subcarriers);
  const auto pts = s.expand_sweep();
  std::vector<std::string> lines(pts.size());
  parallel_for(pts.size(), r.jobs, [&](std::size_t k) {
    const auto& pt = pts[k];
    const SeSolution sol = solve_se_for(r, link, {pt.optical_w, pt.electrical_w});
    const auto& rep = sol.report;
    lines[k] = std::to_string(k) + "," + num(pt.optical_w) + "," + num(pt.electrical_w) + "," +
               to_string(r.metric) + "," + to_string(rep.status) + "," + num(sol.se) + "," +
               num(rep.optical_dual) + "," + num(rep.electrical_dual) + "," +
               std::to_string(rep.iterations) + "," + num(rep.kkt_residual) + "," +
               num(sol.allocation.dc_bias) + "," + num(sol.allocation.electrical_power) +
               power_values(sol.allocation.powers, link.size()) + "\n";
  });
  std::ostringstream os;
  header(os, "se", r, true, false);
  os << "point,optical_budget_w,electrical_budget_w,metric,status,se_bps_per_hz,optical_dual,"
        "electrical_dual,iterations,kkt_residual,dc_bias,electrical_power_w"
     << power_columns(link.size()) << "\n";
  for (const auto& l : lines) os << l;
  return {os.str(), kExitOk, ""};
}

CommandOutcome cmd_ee(const Scenario& s, const RunOptions& o) {
  const Run r = make_run(s, o, s.solver.metric);
  const Link link = make_link(r, s.half_subcarriers);
  const auto pts = s.expand_sweep();
  std::vector<std::string> lines(pts.size());
  std::vector<char> infeasible(pts.size(), 0);
  parallel_for(pts.size(), r.jobs, [&](std::size_t k) {
    const auto& pt = pts[k];
    SystemConfig cfg{{pt.optical_w, pt.electrical_w}, s.circuit_power_w, pt.se_threshold};
    EeOptions opt;
    opt.inner.tolerance = s.solver.tolerance;
    const EeSolution sol = solve_ee(r.metric, link, cfg, opt);
    std::string line = std::to_string(k) + "," + num(pt.optical_w) + "," + num(pt.electrical_w) +
                       "," + num(pt.se_threshold) + "," + to_string(r.metric) + "," +
                       to_string(sol.status) + ",";
    if (sol.status == SolveStatus::Infeasible) {
      infeasible[k] = 1;
      line += "nan,nan,nan," + std::to_string(sol.iterations) + ",nan" +
              power_values({}, link.size());
    } else {
      line += num(sol.ee) + "," + num(sol.ee_exact_denominator) + "," + num(sol.se) + "," +
              std::to_string(sol.q_trace.size()) + "," + num(sol.root_residual) +
              power_values(sol.allocation.powers, link.size());
    }
    lines[k] = line + "\n";
  });
  std::ostringstream os;
  header(os, "ee", r, true, false);
  os << "point,optical_budget_w,electrical_budget_w,se_threshold_bps_per_hz,metric,status,"
        "ee_bits_per_j,ee_exact_denominator_bits_per_j,se_bps_per_hz,q_iterations,root_residual"
     << power_columns(link.size()) << "\n";
  for (const auto& l : lines) os << l;
  bool all_infeasible = !pts.empty();
  for (char f : infeasible) all_infeasible = all_infeasible && f;
  if (all_infeasible) return {os.str(), kExitInfeasible, "every sweep point is infeasible"};
  return {os.str(), kExitOk, ""};
}

CommandOutcome cmd_verify_tightness(const Scenario& s, const RunOptions& o) {
  // The reference check is stated for the lower-bound problem.
  const Run r = make_run(s, o, RateMetric::LowerBound);
  const Link link = make_link(r, s.half_subcarriers);
  const auto pts = s.expand_sweep();
  std::vector<std::string> lines(pts.size());
  std::atomic<std::uint64_t> clipped{0};
  parallel_for(pts.size(), r.jobs, [&](std::size_t k) {
    const auto& pt = pts[k];
    const SeSolution sol = solve_se_for(r, link, {pt.optical_w, pt.electrical_w});
    const auto st = simulate_time_domain(link, sol.allocation.powers, s.solver.trials, r.seed + k);
    clipped += st.clipping_events;
    lines[k] = std::to_string(k) + "," + num(pt.optical_w) + "," + num(pt.electrical_w) + "," +
               to_string(r.metric) + "," + num(st.dc_bias) + "," + num(st.min_x) + "," +
               num(st.mean_x_dc) + "," + num(st.mean_x_dc / pt.optical_w) + "," +
               num(st.sum_mean_x_dc_sq) + "," + num(st.sum_mean_x_dc_sq / pt.electrical_w) + "," +
               std::to_string(st.clipping_events) + "," + std::to_string(st.symbols) + "\n";
  });
  std::ostringstream os;
  header(os, "verify-tightness", r, true, true);
  os << "point,optical_budget_w,electrical_budget_w,metric,dc_bias,min_x,mean_x_dc_w,"
        "optical_budget_use,sum_mean_x_dc_sq_w,electrical_budget_use,clipping_events,symbols\n";
  for (const auto& l : lines) os << l;
  if (clipped > 0) return {os.str(), kExitNumerical, "clipping observed in the time-domain check"};
  return {os.str(), kExitOk, ""};
}

CommandOutcome cmd_bench(const Scenario& s, const RunOptions& o) {
  const Run r = make_run(s, o, s.solver.metric);
  const auto pts = s.expand_sweep();
  const SweepPoint pt = pts.empty() ? SweepPoint{5.0, 20.0, 0.0} : pts.front();
  struct Row {
    int n;
    std::string scheme;
    double value;
    double ms;
  };
  std::vector<Row> rows;
  for (int n : s.solver.bench_half_subcarriers) {
    const Link link = make_link(r, n);
    const Budgets b{pt.optical_w, pt.electrical_w};
    const SystemConfig cfg{b, s.circuit_power_w, pt.se_threshold};
    BarrierOptions bopt;
    bopt.tolerance = s.solver.tolerance;
    EeOptions eopt;
    eopt.inner = bopt;
    const std::vector<std::pair<std::string, std::function<double()>>> schemes = {
        {"se-exact", [&] { return solve_se_exact(link, b).se; }},
        {"se-approx", [&] { return solve_se(RateMetric::Approx, link, b, bopt).se; }},
        {"ee-exact", [&] { return solve_ee(RateMetric::Exact, link, cfg, eopt).ee; }},
        {"ee-approx", [&] { return solve_ee(RateMetric::Approx, link, cfg, eopt).ee; }},
    };
    for (const auto& [name, fn] : schemes) {
      double value = 0.0;
      const auto t0 = std::chrono::steady_clock::now();
      for (int rep = 0; rep < s.solver.bench_repeats; ++rep) value = fn();
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
          s.solver.bench_repeats;
      rows.push_back({n, name, value, ms});
    }
  }
  std::ostringstream os;
  header(os, "bench", r, false, false);
  os << "# mean_ms is wall-clock and machine dependent\n";
  os << "half_subcarriers,scheme,value,mean_ms,approx_faster\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    std::string faster = "";
    if (row.scheme.ends_with("-approx")) faster = row.ms < rows[i - 1].ms ? "yes" : "no";
    os << row.n << "," << row.scheme << "," << num(row.value) << "," << num(row.ms) << ","
       << faster << "\n";
  }
  return {os.str(), kExitOk, ""};
}

using Command = CommandOutcome (*)(const Scenario&, const RunOptions&);

const std::vector<std::pair<std::string, Command>>& registry() {
  static const std::vector<std::pair<std::string, Command>> r = {
      {"channel", cmd_channel},   {"rate-curves", cmd_rate_curves},
      {"se", cmd_se},             {"ee", cmd_ee},
      {"verify-tightness", cmd_verify_tightness}, {"bench", cmd_bench},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : registry()) v.push_back(name);
    return v;
  }();
  return names;
}

CommandOutcome run_command(std::string_view name, const Scenario& scenario,
                           const RunOptions& options) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    try {
      scenario.validate();
      return fn(scenario, options);
    } catch (const ValidationError& e) {
      return {"", kExitValidation, e.what()};
    } catch (const NumericalError& e) {
      return {"", kExitNumerical, e.what()};
    } catch (const std::exception& e) {
      return {"", kExitNumerical, e.what()};
    }
  }
  return {"", kExitValidation, "unknown command '" + std::string(name) + "'"};
}

}  // namespace dcovlc
