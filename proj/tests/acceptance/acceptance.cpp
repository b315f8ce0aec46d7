// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset; the exit status is non-zero if any selected
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>

#include "../support.hpp"
#include "dcovlc/ee_solver.hpp"
#include "dcovlc/harness.hpp"

using namespace dcovlc;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Scenario scenario(const char* name) {
  return load_scenario(std::string(DCOVLC_SCENARIO_DIR) + "/" + name + ".json");
}

Link scenario_link(const Scenario& s) {
  const auto gains =
      subcarrier_gains(s.geometry, s.front_end, s.half_subcarriers, s.bandwidth_hz, s.channel);
  AlphabetMetrics::Options o;
  o.quad_order = s.solver.quad_order;
  o.use_mmse_table = s.solver.use_mmse_table;
  return Link::from_channel(gains, std::make_shared<const AlphabetMetrics>(make_qam(s.qam_order), o),
                            s.noise_psd, s.bandwidth_hz);
}

// Two data subcarriers with gain-to-noise ratios 4 and 1 per watt.
Link two_carrier_link() {
  return Link::from_gains({4e-12, 1e-12}, testing::qam4(), 1e-18, 1e6);
}

RateContext unit_context() { return {testing::qam4(), 1.0, 1.0, 1.0}; }

// ---------------------------------------------------------------------------

Verdict c1_immse() {
  const auto ctx = unit_context();
  const double to_nats = std::numbers::ln2;  // W = 1
  double worst = 0.0;
  for (double snr : {0.1, 1.0, 10.0}) {
    const double h = 1e-4 * snr;
    const double fd = (rate_exact(ctx, snr + h) - rate_exact(ctx, snr - h)) * to_nats / (2 * h);
    const double m = ctx.alphabet->mmse(snr);
    worst = std::max(worst, std::abs(fd - m) / m);
  }
  return {worst <= 1e-4, "max_rel_err=" + fmt("%.2e", worst) + " tol=1e-4"};
}

Verdict c2_bounds() {
  const auto ctx = unit_context();
  const double w = ctx.bandwidth_hz;
  int violations = 0;
  for (int k = 0; k < 40; ++k) {
    const double snr = std::pow(10.0, (-30.0 + 70.0 * k / 39.0) / 10.0);
    const double l = rate_lower(ctx, snr);
    const double f = rate_exact(ctx, snr);
    const double a = rate_approx(ctx, snr);
    if (l > f + 1e-12 * w || f > std::min(a, ctx.ceiling()) + 1e-12 * w) ++violations;
  }
  const double gap_lo = std::abs(rate_approx(ctx, 1e-3) - rate_exact(ctx, 1e-3));
  const double gap_hi = std::abs(rate_approx(ctx, 1e4) - rate_exact(ctx, 1e4));
  const bool pass = violations == 0 && gap_lo < 1e-2 * w && gap_hi < 1e-2 * w;
  return {pass, "order_violations=" + std::to_string(violations) + " gap(-30dB)=" +
                    fmt("%.2e", gap_lo / w) + "W gap(+40dB)=" + fmt("%.2e", gap_hi / w) +
                    "W tol=1e-2W"};
}

Verdict c3_monte_carlo() {
  const auto ctx = unit_context();
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double snr = std::pow(10.0, (-10.0 + 30.0 * k / 9.0) / 10.0);
    const auto est = rate_mc_oracle(ctx, snr, 1000000, 20240601 + k);
    const double z = est.std_error > 0 ? std::abs(est.mean - rate_exact(ctx, snr)) / est.std_error
                                       : std::abs(est.mean - rate_exact(ctx, snr)) / 1e-15;
    worst = std::max(worst, z);
  }
  return {worst <= 3.0, "max_deviation=" + fmt("%.2f", worst) + " std_err tol=3"};
}

Verdict c4_crossover() {
  const Scenario s = scenario("table1");
  const Link link = scenario_link(s);
  const auto& c1 = link.context(0);
  const auto& c15 = link.context(14);
  auto diff = [&](double p) {
    return rate_derivatives(RateMetric::Exact, c1, p).first -
           rate_derivatives(RateMetric::Exact, c15, p).first;
  };
  double lo = 1e-6, hi = 0.2;
  if (!(diff(lo) > 0 && diff(hi) < 0)) return {false, "gradient curves do not cross in (1e-6, 0.2) W"};
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) > 0 ? lo : hi) = mid;
  }
  const double p = 0.5 * (lo + hi);
  const double rel = std::abs(p - 5.134e-3) / 5.134e-3;
  return {rel <= 0.10, "crossover=" + fmt("%.4f", p * 1e3) + "mW target=5.134mW rel_err=" +
                           fmt("%.3f", rel) + " tol=0.10"};
}

Verdict c5_mercury_vs_convex() {
  const Link link = two_carrier_link();
  double worst_se = 0.0;
  double worst_kkt = 0.0;
  for (Budgets b : {Budgets{1.0, 10.0}, Budgets{kUnbounded, 6.0}, Budgets{0.3, kUnbounded}}) {
    const auto merc = solve_se_exact(link, b);
    const auto oracle = solve_se(RateMetric::Exact, link, b);
    worst_se = std::max(worst_se, std::abs(merc.se - oracle.se) / oracle.se);
    const double scale = 2.0 * link.half_subcarriers() * std::numbers::ln2;
    worst_kkt = std::max(worst_kkt,
                         mercury_stationarity(link, merc.allocation.powers,
                                              merc.report.optical_dual * scale,
                                              merc.report.electrical_dual * scale));
  }
  return {worst_se <= 1e-3 && worst_kkt <= 1e-6,
          "se_rel_diff=" + fmt("%.2e", worst_se) + " tol=1e-3 kkt=" + fmt("%.2e", worst_kkt) +
              " tol=1e-6"};
}

Verdict c6_regimes() {
  const Scenario s = scenario("fig3");
  const Link link = scenario_link(s);
  const auto pts = s.expand_sweep();
  const auto mags = link.magnitudes();
  const double low = testing::spearman(
      solve_se_exact(link, {pts.at(0).optical_w, pts.at(0).electrical_w}).allocation.powers, mags);
  const double high = testing::spearman(
      solve_se_exact(link, {pts.at(1).optical_w, pts.at(1).electrical_w}).allocation.powers, mags);
  return {low > 0 && high < 0,
          "spearman(Pe=2W)=" + fmt("%+.3f", low) + " spearman(Pe=50W)=" + fmt("%+.3f", high)};
}

Verdict c7_tightness() {
  const Scenario s = scenario("table2");
  const Link link = scenario_link(s);
  const auto pts = s.expand_sweep();
  const RateMetric metric = s.solver.metric;
  auto stats = [&](std::size_t k) {
    const auto sol = solve_se(metric, link, {pts.at(k).optical_w, pts.at(k).electrical_w});
    return simulate_time_domain(link, sol.allocation.powers, s.solver.trials, s.solver.seed + k);
  };
  const auto a = stats(0);
  const auto b = stats(1);
  const double ea = std::abs(a.mean_x_dc - 0.4991) / 0.4991;
  const double eb = std::abs(b.sum_mean_x_dc_sq - 9.9698) / 9.9698;
  const auto clips = a.clipping_events + b.clipping_events;
  const bool enough = a.symbols >= 10000 && b.symbols >= 10000;
  return {ea <= 0.03 && eb <= 0.03 && clips == 0 && enough,
          "E{x_dc}=" + fmt("%.4f", a.mean_x_dc) + "W (0.4991) sumE{x_dc^2}=" +
              fmt("%.4f", b.sum_mean_x_dc_sq) + "W (9.9698) tol=3% clipping=" +
              std::to_string(clips) + " symbols=" + std::to_string(a.symbols) + "+" +
              std::to_string(b.symbols) + " metric=" + to_string(metric)};
}

Verdict c8_dinkelbach() {
  const Scenario s = scenario("fig5");
  const Link link = scenario_link(s);
  const auto pts = s.expand_sweep();
  const auto mags = link.magnitudes();
  bool monotone = true;
  bool converged = true;
  int max_iter = 0;
  std::vector<double> rho;
  for (const auto& pt : pts) {
    const auto sol =
        solve_ee(RateMetric::Exact, link, {{pt.optical_w, pt.electrical_w}, s.circuit_power_w, pt.se_threshold});
    converged = converged && sol.status == SolveStatus::Converged && sol.iterations <= 100;
    max_iter = std::max(max_iter, sol.iterations);
    for (std::size_t k = 1; k < sol.q_trace.size(); ++k)
      monotone = monotone && sol.q_trace[k] >= sol.q_trace[k - 1] * (1 - 1e-8);
    rho.push_back(testing::spearman(sol.allocation.powers, mags));
  }
  const bool pass = monotone && converged && rho.size() == 3 && rho.front() > 0 && rho.back() < 0;
  std::string d = std::string("monotone=") + (monotone ? "yes" : "no") +
                  " max_iterations=" + std::to_string(max_iter) + " spearman(gamma=";
  for (std::size_t k = 0; k < rho.size(); ++k)
    d += (k ? "," : "") + fmt("%g", pts[k].se_threshold);
  d += ")=";
  for (std::size_t k = 0; k < rho.size(); ++k) d += (k ? "," : "") + fmt("%+.3f", rho[k]);
  return {pass, d};
}

Verdict c9_ee_grid() {
  const Link link = two_carrier_link();
  const SystemConfig cfg{{2.0, 30.0}, 0.3, 0.0};
  const auto sol = solve_ee(RateMetric::Exact, link, cfg);
  const double grid = testing::grid_max(
      2000, [&](double p) { return rate_exact(link.context(0), p); },
      [&](double p) { return rate_exact(link.context(1), p); }, 1.0, 1.0,
      optical_rhs(link, cfg.budgets), electrical_rhs(link, cfg.budgets),
      [&](double a, double b, double sum) { return (a + b) / (10.0 * sum + cfg.circuit_power_w); });
  const double rel = std::abs(sol.ee - grid) / grid;
  return {sol.status == SolveStatus::Converged && rel <= 1e-3,
          "ee=" + fmt("%.6e", sol.ee) + " grid=" + fmt("%.6e", grid) + " rel_diff=" +
              fmt("%.2e", rel) + " tol=1e-3"};
}

Verdict c10_saturation() {
  const Scenario s = scenario("fig4");
  const Link link = scenario_link(s);
  const auto pts = s.expand_sweep();
  std::vector<double> free_se, capped_se, free_pe, capped_pe;
  for (const auto& pt : pts) {
    const double se = solve_se_exact(link, {pt.optical_w, pt.electrical_w}).se;
    if (std::isinf(pt.optical_w)) {
      free_se.push_back(se);
      free_pe.push_back(pt.electrical_w);
    } else {
      capped_se.push_back(se);
      capped_pe.push_back(pt.electrical_w);
    }
  }
  bool monotone = true;
  for (std::size_t k = 1; k < free_se.size(); ++k) monotone = monotone && free_se[k] >= free_se[k - 1] - 1e-12;
  const double ceiling = link.se_ceiling(RateMetric::Exact);
  const double tail = std::abs(free_se.back() - ceiling);
  bool below = true;
  for (std::size_t k = 0; k < capped_se.size(); ++k)
    for (std::size_t j = 0; j < free_se.size(); ++j)
      if (capped_pe[k] > 20.0 && capped_pe[k] == free_pe[j]) below = below && capped_se[k] <= free_se[j] + 1e-12;
  return {monotone && tail <= 1e-3 && below,
          std::string("monotone=") + (monotone ? "yes" : "no") + " se(Pe=" +
              fmt("%g", free_pe.back()) + ")=" + fmt("%.5f", free_se.back()) + " ceiling=" +
              fmt("%.5f", ceiling) + " tol=1e-3 capped_below=" + (below ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "I-MMSE identity", 1, c1_immse},
      {2, "bound ordering and gap", 5, c2_bounds},
      {3, "Monte-Carlo oracle", 30, c3_monte_carlo},
      {4, "gradient crossover", 10, c4_crossover},
      {5, "mercury water-filling vs convex oracle", 30, c5_mercury_vs_convex},
      {6, "regime behaviour", 60, c6_regimes},
      {7, "constraint tightness", 60, c7_tightness},
      {8, "Dinkelbach convergence", 300, c8_dinkelbach},
      {9, "EE brute-force oracle", 60, c9_ee_grid},
      {10, "SE saturation", 300, c10_saturation},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("C%-2d %s  %s: %s time=%.2fs limit=%gs%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), secs, c.time_limit_s, in_time ? "" : " (too slow)");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
