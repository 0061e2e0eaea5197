// Command-line entry point: calibrate, gen-trace, simulate, compare.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smartcharge/experiment.hpp"

namespace fs = std::filesystem;
using namespace smartcharge;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

void print_model_summary(const DailyModel& model, std::ostream& out) {
  char line[128];
  for (int wd = 0; wd < kWeekdays; ++wd) {
    out << weekday_name(wd) << " (expected arrivals " << model.expected_daily_arrivals(wd) << ")\n";
    std::snprintf(line, sizeof line, "  %-5s %-13s %10s %12s %12s\n", "bin", "window", "arrivals", "stay_slots",
                  "energy_kwh");
    out << line;
    for (int b = 0; b < kArrivalBins; ++b) {
      const auto& bin = model.bin(wd, b);
      std::snprintf(line, sizeof line, "  %-5d %02d:00-%02d:00   %10.3f %12.3f %12.3f\n", b, 2 * b, 2 * b + 2,
                    bin.expected_count, bin.mean_stay_slots, bin.mean_energy_kwh);
      out << line;
    }
  }
}

int cmd_calibrate(const std::string& trace_path, const std::string& out_path, int num_evse) {
  SessionTrace trace;
  try {
    trace = read_trace(trace_path, num_evse);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  const DailyModel model = calibrate_daily_model(trace);
  write_daily_model(model, out_path);
  print_model_summary(model, std::cout);
  return kOk;
}

int cmd_gen_trace(const std::string& model_path, int days, std::uint64_t seed, const std::string& out_path,
                  int num_evse, double scale, bool weekdays_only) {
  DailyModel model;
  try {
    model = model_path == "default" ? default_daily_model() : read_daily_model(model_path);
    model.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  GenerationOptions options;
  options.scale = scale;
  options.weekdays_only = weekdays_only;
  const auto trace = generate_synthetic_trace(model, days, num_evse, seed, options);
  write_trace(trace, fs::path(out_path));
  std::cout << "wrote " << trace.sessions.size() << " sessions over " << days << " days to " << out_path << '\n';
  return kOk;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> days;
};

/// Loads the configuration and trace; any problem here is a usage error.
std::optional<std::pair<RunConfig, SessionTrace>> prepare(const std::string& config_path, const Overrides& o) {
  try {
    RunConfig config = load_run_config(config_path);
    if (o.seed) config.experiment.seeds = {*o.seed};
    if (o.days) config.trace.days = *o.days;
    SessionTrace trace = load_trace(config);
    return std::pair{std::move(config), std::move(trace)};
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

int cmd_compare(const std::string& config_path, const std::string& out_dir, int jobs,
                const std::optional<std::string>& strategy, const Overrides& o) {
  auto prepared = prepare(config_path, o);
  if (!prepared) return kUsage;
  auto& [config, trace] = *prepared;
  if (strategy) {
    try {
      config.experiment.strategies = {parse_strategy(*strategy)};
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsage;
    }
  }
  const auto cells = expand_cells(config.experiment);
  std::cout << "running " << cells.size() << " cells on " << trace.sessions.size() << " sessions\n";
  CompareReport report;
  try {
    report = run_compare(config, trace, out_dir, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  print_ranking(report, std::cout);
  return report.all_ok() ? kOk : kRuntime;
}

int cmd_simulate(const std::string& config_path, const std::string& strategy, const std::string& out_dir,
                 const Overrides& o) {
  auto prepared = prepare(config_path, o);
  if (!prepared) return kUsage;
  const auto& [config, trace] = *prepared;
  Cell cell;
  try {
    cell.strategy = parse_strategy(strategy);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  cell.capacity_kw = config.experiment.capacities_kw.front();
  cell.sigma_slots = cell.strategy == StrategyKind::Rtsc ? config.experiment.sigmas.front() : 0.0;
  cell.seed = cell.strategy == StrategyKind::Rtsc ? config.experiment.seeds.front() : 0;
  try {
    const auto result = run_cell(cell, config, trace, planning_model(config, trace));
    write_cell_outputs(cell, result, out_dir, config.grid);
    const auto& m = result.total;
    std::cout << cell.label() << ": energy " << m.energy_delivered_kwh << " kWh, cost/kWh " << m.cost_per_kwh
              << ", demand charge " << m.demand_charge << ", profit " << m.profit << ", peak " << m.peak_load_kw
              << " kW, objective " << result.realized_objective << '\n';
    if (!result.solve_times.empty()) {
      auto times = result.solve_times;
      std::sort(times.begin(), times.end());
      std::cout << "planning solves " << times.size() << ", median " << times[times.size() / 2] << " s, max "
                << times.back() << " s\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging facility scheduler and simulator"};
  app.require_subcommand(1);

  std::string trace_path, out_path, model_path = "default", config_path, strategy;
  std::optional<std::string> strategy_filter;
  int num_evse = 57, days = 10, jobs = 1;
  std::uint64_t seed = 1;
  double scale = 1.0;
  bool weekdays_only = false;
  Overrides overrides;

  auto* calibrate = app.add_subcommand("calibrate", "Build a daily arrival model from a session trace");
  calibrate->add_option("trace", trace_path, "Trace CSV")->required();
  calibrate->add_option("--out", out_path, "Model JSON to write")->required();
  calibrate->add_option("--num-evse", num_evse, "Charger count used to validate concurrency");

  auto* gen = app.add_subcommand("gen-trace", "Generate a synthetic session trace");
  gen->add_option("--model", model_path, "Model JSON, or 'default'");
  gen->add_option("--days", days, "Days to generate")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out_path, "Trace CSV to write")->required();
  gen->add_option("--num-evse", num_evse, "Charger count");
  gen->add_option("--scale", scale, "Arrival rate multiplier")->check(CLI::PositiveNumber);
  gen->add_flag("--weekdays-only", weekdays_only, "Leave weekends empty");

  auto* compare = app.add_subcommand("compare", "Run every strategy/sigma/capacity/seed cell of a configuration");
  compare->add_option("--config", config_path, "Run configuration (TOML)")->required();
  compare->add_option("--out", out_path, "Output directory")->required();
  compare->add_option("--jobs", jobs, "Cells run concurrently")->check(CLI::PositiveNumber);
  compare->add_option("--strategy", strategy_filter, "Run only this strategy");
  compare->add_option("--seed", overrides.seed, "Replace the configured scenario seeds");
  compare->add_option("--days", overrides.days, "Replace the synthetic trace length")->check(CLI::NonNegativeNumber);

  auto* simulate = app.add_subcommand("simulate", "Run a single strategy");
  simulate->add_option("--config", config_path, "Run configuration (TOML)")->required();
  simulate->add_option("--strategy", strategy, "offline, rtsc, uncontrolled, llf or edf")->required();
  simulate->add_option("--out", out_path, "Output directory")->required();
  simulate->add_option("--seed", overrides.seed, "Scenario seed");
  simulate->add_option("--days", overrides.days, "Synthetic trace length")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*calibrate) return cmd_calibrate(trace_path, out_path, num_evse);
    if (*gen) return cmd_gen_trace(model_path, days, seed, out_path, num_evse, scale, weekdays_only);
    if (*compare) return cmd_compare(config_path, out_path, jobs, strategy_filter, overrides);
    if (*simulate) return cmd_simulate(config_path, strategy, out_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
