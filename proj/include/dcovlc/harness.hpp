#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcovlc/ee_solver.hpp"

namespace dcovlc {

/// One (P_o, P_e, gamma) experiment point. kUnbounded encodes an infinite budget.
struct SweepPoint {
  double optical_w = kUnbounded;
  double electrical_w = kUnbounded;
  double se_threshold = 0.0;  // bits/s/Hz

  bool operator==(const SweepPoint&) const = default;
};

/// Replaces one field of `base` by `count` values from start to stop.
struct SweepRange {
  std::string key;  // optical_budget_w, electrical_budget_w or se_threshold_bps_per_hz
  double start = 0.0;
  double stop = 0.0;
  int count = 1;
  bool log_spacing = false;

  bool operator==(const SweepRange&) const = default;
};

struct SweepEntry {
  SweepPoint base;
  std::optional<SweepRange> range;

  bool operator==(const SweepEntry&) const = default;
};

struct RateCurveSpec {
  std::vector<int> subcarriers{1, 15};
  double power_min_w = 0.0;
  double power_max_w = 0.02;
  int power_points = 201;

  bool operator==(const RateCurveSpec&) const = default;
};

struct SolverSettings {
  double tolerance = 1e-8;
  int quad_order = 32;
  std::uint64_t seed = 1;
  RateMetric metric = RateMetric::Exact;
  std::uint64_t trials = 10000;  // OFDM symbols per time-domain check
  bool use_mmse_table = false;
  RateCurveSpec rate_curves;
  std::vector<int> bench_half_subcarriers{4, 8, 16};
  int bench_repeats = 3;

  bool operator==(const SolverSettings&) const = default;
};

struct Scenario {
  RoomGeometry geometry;
  OpticalFrontEnd front_end;
  ChannelModelOptions channel;
  int half_subcarriers = 16;
  double bandwidth_hz = 1e6;
  double noise_psd = 1e-18;  // A^2/Hz
  int qam_order = 4;
  double circuit_power_w = 0.1;
  std::vector<SweepEntry> sweep;
  SolverSettings solver;

  /// The four-LED room of the reference setup with an empty sweep.
  static Scenario reference();

  /// Checks every block; throws ValidationError naming the offending field.
  void validate() const;
  std::vector<SweepPoint> expand_sweep() const;
};

bool operator==(const Point3& a, const Point3& b);
bool operator==(const RoomGeometry& a, const RoomGeometry& b);
bool operator==(const OpticalFrontEnd& a, const OpticalFrontEnd& b);
bool operator==(const ChannelModelOptions& a, const ChannelModelOptions& b);
bool operator==(const Scenario& a, const Scenario& b);

/// JSON text <-> Scenario. Unknown keys are rejected so typos surface.
Scenario parse_scenario(std::string_view json_text);
std::string dump_scenario(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
/// FNV-1a over the canonical dump.
std::uint64_t scenario_hash(const Scenario& s);

struct RunOptions {
  std::optional<RateMetric> metric;
  std::optional<std::uint64_t> seed;
  std::optional<int> quad_order;
  int jobs = 1;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitInfeasible = 3,
  kExitNumerical = 4,
};

struct CommandOutcome {
  std::string csv;
  int exit_code = kExitOk;
  std::string message;  // set on failure
};

/// Runs one subcommand: channel, rate-curves, se, ee, verify-tightness or
/// bench. Library exceptions are mapped onto exit codes; on failure `csv`
/// is empty.
CommandOutcome run_command(std::string_view name, const Scenario& scenario,
                           const RunOptions& options);

const std::vector<std::string>& command_names();

}  // namespace dcovlc
