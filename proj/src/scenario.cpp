#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dcovlc/errors.hpp"
#include "dcovlc/harness.hpp"

namespace dcovlc {

using nlohmann::json;

namespace {

const char* const kVaryKeys[] = {"optical_budget_w", "electrical_budget_w",
                                 "se_threshold_bps_per_hz"};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

// Reads a JSON object field by field and rejects leftovers.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }
  // Rejects keys that were never read.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(where_, "unknown key '" + it.key() + "'");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(where_, "missing key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail(where_, "'" + key + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(where_, "'" + key + "' must be a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(where_, "'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned()) fail(where_, "'" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(where_, "'" + key + "' must be true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail(where_, "'" + key + "' must be a string");
    return v.get<std::string>();
  }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Point3 point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(where, "expected [x, y, z]");
  for (const auto& v : j)
    if (!v.is_number()) fail(where, "coordinates must be numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json point_to(const Point3& p) { return json::array({p.x, p.y, p.z}); }

// A budget is either "<key>": value or "<prefix>_unbounded": true.
double budget_from(Reader& r, const std::string& key, const std::string& flag) {
  const bool unbounded = r.boolean(flag, false);
  if (unbounded) {
    if (r.has(key)) fail(r.where(), "both '" + key + "' and '" + flag + "' given");
    return kUnbounded;
  }
  if (!r.has(key)) fail(r.where(), "need '" + key + "' or '" + flag + "': true");
  return r.number(key);
}

void budget_to(json& j, const std::string& key, const std::string& flag, double v) {
  if (std::isinf(v)) j[flag] = true;
  else j[key] = v;
}

SweepEntry entry_from(const json& j, const std::string& where) {
  Reader r(j, where);
  SweepEntry e;
  const bool has_range = r.has("vary");
  std::string vary_key;
  if (has_range) {
    Reader v(r.raw("vary"), where + ".vary");
    SweepRange range;
    range.key = v.string("key", "");
    bool known = false;
    for (const char* k : kVaryKeys) known = known || range.key == k;
    if (!known) fail(v.where(), "key must name a budget or the SE threshold");
    range.start = v.number("start");
    range.stop = v.number("stop");
    range.count = static_cast<int>(v.integer("count", 1));
    const std::string spacing = v.string("spacing", "linear");
    if (spacing != "linear" && spacing != "log") fail(v.where(), "spacing must be linear or log");
    range.log_spacing = spacing == "log";
    v.done();
    vary_key = range.key;
    e.range = range;
  }
  // The varied field may be omitted from the base point.
  if (vary_key == "optical_budget_w" && !r.has("optical_budget_w") && !r.has("optical_unbounded"))
    e.base.optical_w = 0.0;
  else
    e.base.optical_w = budget_from(r, "optical_budget_w", "optical_unbounded");
  if (vary_key == "electrical_budget_w" && !r.has("electrical_budget_w") &&
      !r.has("electrical_unbounded"))
    e.base.electrical_w = 0.0;
  else
    e.base.electrical_w = budget_from(r, "electrical_budget_w", "electrical_unbounded");
  e.base.se_threshold = r.number("se_threshold_bps_per_hz", 0.0);
  r.done();
  return e;
}

json entry_to(const SweepEntry& e) {
  json j = json::object();
  // The base value of a varied field is written too, so dumps round-trip.
  budget_to(j, "optical_budget_w", "optical_unbounded", e.base.optical_w);
  budget_to(j, "electrical_budget_w", "electrical_unbounded", e.base.electrical_w);
  j["se_threshold_bps_per_hz"] = e.base.se_threshold;
  if (e.range) {
    j["vary"] = {{"key", e.range->key},
                 {"start", e.range->start},
                 {"stop", e.range->stop},
                 {"count", e.range->count},
                 {"spacing", e.range->log_spacing ? "log" : "linear"}};
  }
  return j;
}

std::vector<int> int_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) fail(where, "expected a list of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  Reader top(root, "scenario");

  {
    Reader g(top.raw("geometry"), "geometry");
    s.geometry.length_m = g.number("room_length_m");
    s.geometry.width_m = g.number("room_width_m");
    s.geometry.height_m = g.number("room_height_m");
    s.geometry.reflectivity = g.number("reflectivity");
    const json& leds = g.raw("leds_m");
    if (!leds.is_array()) fail("geometry.leds_m", "expected a list of [x, y, z]");
    for (std::size_t i = 0; i < leds.size(); ++i)
      s.geometry.leds.push_back(point_from(leds[i], "geometry.leds_m[" + std::to_string(i) + "]"));
    s.geometry.receiver = point_from(g.raw("receiver_m"), "geometry.receiver_m");
    g.done();
  }
  if (top.has("front_end")) {
    Reader f(top.raw("front_end"), "front_end");
    auto& fe = s.front_end;
    fe.half_power_angle_deg = f.number("half_power_angle_deg", fe.half_power_angle_deg);
    fe.detector_area_m2 = f.number("detector_area_m2", fe.detector_area_m2);
    fe.fov_deg = f.number("fov_deg", fe.fov_deg);
    fe.filter_gain = f.number("filter_gain_linear", fe.filter_gain);
    fe.concentrator_gain = f.number("concentrator_gain_linear", fe.concentrator_gain);
    f.done();
  }
  if (top.has("channel")) {
    Reader c(top.raw("channel"), "channel");
    s.channel.include_diffuse = c.boolean("include_diffuse", s.channel.include_diffuse);
    const std::string scaling = c.string("diffuse_scaling", "per_led");
    if (scaling == "per_led") s.channel.diffuse_scaling = DiffuseScaling::PerLed;
    else if (scaling == "per_room") s.channel.diffuse_scaling = DiffuseScaling::PerRoom;
    else fail("channel.diffuse_scaling", "expected per_led or per_room");
    s.channel.subcarrier_spacing_hz = c.number("subcarrier_spacing_hz", 0.0);
    c.done();
  }
  {
    Reader y(top.raw("system"), "system");
    s.half_subcarriers = static_cast<int>(y.integer("half_subcarriers", s.half_subcarriers));
    s.bandwidth_hz = y.number("bandwidth_hz", s.bandwidth_hz);
    s.noise_psd = y.number("noise_psd_a2_per_hz", s.noise_psd);
    s.qam_order = static_cast<int>(y.integer("qam_order", s.qam_order));
    s.circuit_power_w = y.number("circuit_power_w", s.circuit_power_w);
    y.done();
  }
  if (top.has("sweep")) {
    const json& sw = top.raw("sweep");
    if (!sw.is_array()) fail("sweep", "expected a list");
    for (std::size_t i = 0; i < sw.size(); ++i)
      s.sweep.push_back(entry_from(sw[i], "sweep[" + std::to_string(i) + "]"));
  }
  if (top.has("solver")) {
    Reader v(top.raw("solver"), "solver");
    auto& so = s.solver;
    so.tolerance = v.number("tolerance", so.tolerance);
    so.quad_order = static_cast<int>(v.integer("quad_order", so.quad_order));
    so.seed = v.unsigned_integer("seed", so.seed);
    so.metric = parse_metric(v.string("metric", to_string(so.metric)).c_str());
    so.trials = v.unsigned_integer("trials", so.trials);
    so.use_mmse_table = v.boolean("use_mmse_table", so.use_mmse_table);
    if (v.has("rate_curves")) {
      Reader rc(v.raw("rate_curves"), "solver.rate_curves");
      auto& c = so.rate_curves;
      if (rc.has("subcarriers")) c.subcarriers = int_list(rc.raw("subcarriers"), rc.where());
      c.power_min_w = rc.number("power_min_w", c.power_min_w);
      c.power_max_w = rc.number("power_max_w", c.power_max_w);
      c.power_points = static_cast<int>(rc.integer("power_points", c.power_points));
      rc.done();
    }
    if (v.has("bench")) {
      Reader b(v.raw("bench"), "solver.bench");
      if (b.has("half_subcarriers"))
        so.bench_half_subcarriers = int_list(b.raw("half_subcarriers"), b.where());
      so.bench_repeats = static_cast<int>(b.integer("repeats", so.bench_repeats));
      b.done();
    }
    v.done();
  }
  top.done();
  s.validate();
  return s;
}

std::string dump_scenario(const Scenario& s) {
  json j;
  json leds = json::array();
  for (const auto& p : s.geometry.leds) leds.push_back(point_to(p));
  j["geometry"] = {{"room_length_m", s.geometry.length_m},
                   {"room_width_m", s.geometry.width_m},
                   {"room_height_m", s.geometry.height_m},
                   {"reflectivity", s.geometry.reflectivity},
                   {"leds_m", leds},
                   {"receiver_m", point_to(s.geometry.receiver)}};
  j["front_end"] = {{"half_power_angle_deg", s.front_end.half_power_angle_deg},
                    {"detector_area_m2", s.front_end.detector_area_m2},
                    {"fov_deg", s.front_end.fov_deg},
                    {"filter_gain_linear", s.front_end.filter_gain},
                    {"concentrator_gain_linear", s.front_end.concentrator_gain}};
  j["channel"] = {{"include_diffuse", s.channel.include_diffuse},
                  {"diffuse_scaling",
                   s.channel.diffuse_scaling == DiffuseScaling::PerLed ? "per_led" : "per_room"},
                  {"subcarrier_spacing_hz", s.channel.subcarrier_spacing_hz}};
  j["system"] = {{"half_subcarriers", s.half_subcarriers},
                 {"bandwidth_hz", s.bandwidth_hz},
                 {"noise_psd_a2_per_hz", s.noise_psd},
                 {"qam_order", s.qam_order},
                 {"circuit_power_w", s.circuit_power_w}};
  json sweep = json::array();
  for (const auto& e : s.sweep) sweep.push_back(entry_to(e));
  j["sweep"] = sweep;
  const auto& so = s.solver;
  j["solver"] = {{"tolerance", so.tolerance},
                 {"quad_order", so.quad_order},
                 {"seed", so.seed},
                 {"metric", to_string(so.metric)},
                 {"trials", so.trials},
                 {"use_mmse_table", so.use_mmse_table},
                 {"rate_curves",
                  {{"subcarriers", so.rate_curves.subcarriers},
                   {"power_min_w", so.rate_curves.power_min_w},
                   {"power_max_w", so.rate_curves.power_max_w},
                   {"power_points", so.rate_curves.power_points}}},
                 {"bench",
                  {{"half_subcarriers", so.bench_half_subcarriers}, {"repeats", so.bench_repeats}}}};
  return j.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file " + path);
  out << dump_scenario(s);
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump_scenario(s)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------

Scenario Scenario::reference() {
  Scenario s;
  s.geometry.leds = {{1.5, 1.5, 3.0}, {1.5, 3.5, 3.0}, {3.5, 1.5, 3.0}, {3.5, 3.5, 3.0}};
  s.geometry.receiver = {0.5, 1.0, 0.0};
  return s;
}

void Scenario::validate() const {
  geometry.validate();
  front_end.validate();
  if (channel.subcarrier_spacing_hz < 0.0 || !std::isfinite(channel.subcarrier_spacing_hz))
    fail("channel.subcarrier_spacing_hz", "must be finite and >= 0");
  if (half_subcarriers < 2) fail("system.half_subcarriers", "must be >= 2");
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) fail("system.bandwidth_hz", "must be positive");
  if (!(noise_psd > 0.0) || !std::isfinite(noise_psd)) fail("system.noise_psd_a2_per_hz", "must be positive");
  if (!(circuit_power_w > 0.0) || !std::isfinite(circuit_power_w))
    fail("system.circuit_power_w", "must be positive");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(qam_order))));
  if (qam_order < 4 || side * side != qam_order) fail("system.qam_order", "must be a perfect square >= 4");

  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& e = sweep[i];
    const std::string where = "sweep[" + std::to_string(i) + "]";
    if (e.range) {
      const auto& r = *e.range;
      if (r.count < 1) fail(where, "vary.count must be >= 1");
      if (!std::isfinite(r.start) || !std::isfinite(r.stop)) fail(where, "vary bounds must be finite");
      if (r.log_spacing && !(r.start > 0.0 && r.stop > 0.0))
        fail(where, "log spacing needs positive bounds");
    }
  }
  for (const auto& p : expand_sweep()) {
    SystemConfig cfg{{p.optical_w, p.electrical_w}, circuit_power_w, p.se_threshold};
    cfg.validate();
    if (p.se_threshold < 0.0) fail("sweep", "SE threshold must be >= 0");
  }

  if (!(solver.tolerance > 0.0) || solver.tolerance >= 1.0) fail("solver.tolerance", "must lie in (0, 1)");
  if (solver.quad_order < 8 || solver.quad_order > 200) fail("solver.quad_order", "must lie in [8, 200]");
  if (solver.trials < 1) fail("solver.trials", "must be >= 1");
  const auto& rc = solver.rate_curves;
  if (rc.power_points < 1) fail("solver.rate_curves.power_points", "must be >= 1");
  if (!(rc.power_min_w >= 0.0) || !(rc.power_max_w >= rc.power_min_w) || !std::isfinite(rc.power_max_w))
    fail("solver.rate_curves", "need 0 <= power_min_w <= power_max_w");
  for (int n : solver.bench_half_subcarriers)
    if (n < 2) fail("solver.bench.half_subcarriers", "entries must be >= 2");
  if (solver.bench_repeats < 1) fail("solver.bench.repeats", "must be >= 1");
}

std::vector<SweepPoint> Scenario::expand_sweep() const {
  std::vector<SweepPoint> out;
  for (const auto& e : sweep) {
    if (!e.range) {
      out.push_back(e.base);
      continue;
    }
    const auto& r = *e.range;
    for (int k = 0; k < r.count; ++k) {
      const double f = r.count == 1 ? 0.0 : static_cast<double>(k) / (r.count - 1);
      const double v = r.log_spacing ? r.start * std::pow(r.stop / r.start, f)
                                     : r.start + (r.stop - r.start) * f;
      SweepPoint p = e.base;
      if (r.key == "optical_budget_w") p.optical_w = v;
      else if (r.key == "electrical_budget_w") p.electrical_w = v;
      else p.se_threshold = v;
      out.push_back(p);
    }
  }
  return out;
}

bool operator==(const Point3& a, const Point3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

bool operator==(const RoomGeometry& a, const RoomGeometry& b) {
  return a.length_m == b.length_m && a.width_m == b.width_m && a.height_m == b.height_m &&
         a.leds == b.leds && a.receiver == b.receiver && a.reflectivity == b.reflectivity;
}

bool operator==(const OpticalFrontEnd& a, const OpticalFrontEnd& b) {
  return a.half_power_angle_deg == b.half_power_angle_deg &&
         a.detector_area_m2 == b.detector_area_m2 && a.fov_deg == b.fov_deg &&
         a.filter_gain == b.filter_gain && a.concentrator_gain == b.concentrator_gain;
}

bool operator==(const ChannelModelOptions& a, const ChannelModelOptions& b) {
  return a.include_diffuse == b.include_diffuse && a.diffuse_scaling == b.diffuse_scaling &&
         a.subcarrier_spacing_hz == b.subcarrier_spacing_hz;
}

bool operator==(const Scenario& a, const Scenario& b) {
  return a.geometry == b.geometry && a.front_end == b.front_end && a.channel == b.channel &&
         a.half_subcarriers == b.half_subcarriers && a.bandwidth_hz == b.bandwidth_hz &&
         a.noise_psd == b.noise_psd && a.qam_order == b.qam_order &&
         a.circuit_power_w == b.circuit_power_w && a.sweep == b.sweep && a.solver == b.solver;
}

}  // namespace dcovlc
