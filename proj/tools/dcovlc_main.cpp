#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "dcovlc/errors.hpp"
#include "dcovlc/harness.hpp"

int main(int argc, char** argv) {
  using namespace dcovlc;

  CLI::App app{"DCO-OFDM VLC rate and power-allocation experiments"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string metric_name;
  std::string out_path;
  std::uint64_t seed = 0;
  int quad_order = 0;
  int jobs = 1;

  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    sub->add_option("--metric", metric_name, "Rate metric")
        ->check(CLI::IsMember({"exact", "lower", "approx"}));
    sub->add_option("--out", out_path, "CSV output path (stdout if omitted)");
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--quad-order", quad_order, "Gauss-Hermite nodes per dimension");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunOptions opts;
  opts.jobs = jobs;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--quad-order")) opts.quad_order = quad_order;

  Scenario scenario;
  try {
    if (!metric_name.empty()) opts.metric = parse_metric(metric_name.c_str());
    scenario = load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  const CommandOutcome res = run_command(sub->get_name(), scenario, opts);
  if (!res.message.empty()) std::cerr << (res.exit_code ? "error: " : "") << res.message << "\n";
  if (res.csv.empty()) return res.exit_code;

  if (out_path.empty()) {
    std::cout << res.csv;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return kExitValidation;
    }
    f << res.csv;
  }
  return res.exit_code;
}
