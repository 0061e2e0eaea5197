#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartcharge/simulator.hpp"

namespace smartcharge {

/// Where the sessions come from: a CSV file or the synthetic generator.
struct TraceSource {
  std::optional<std::filesystem::path> path;        // replay this file when set
  std::optional<std::filesystem::path> model_path;  // generator model, built-in profile when unset
  int days = 12;
  std::uint64_t seed = 1;
  GenerationOptions generation{.weekdays_only = true};
};

enum class PlanningModelSource {
  Auto,       // the generator model for synthetic traces, otherwise calibrated from the trace
  Default,    // built-in profile
  Calibrate,  // calibrated from the simulated trace
  File,
};

struct ExperimentGrid {
  std::vector<StrategyKind> strategies{StrategyKind::Offline, StrategyKind::Rtsc, StrategyKind::Llf,
                                       StrategyKind::Edf, StrategyKind::Uncontrolled};
  std::vector<double> sigmas{0.0};        // departure noise for rtsc cells, slots
  std::vector<double> capacities_kw;      // transformer limits; facility value when empty
  std::vector<std::uint64_t> seeds{0};    // scenario sampling seeds for rtsc cells
};

struct RunConfig {
  FacilityConfig facility;
  TimeGrid grid;
  std::string weights_preset = "u1";
  ObjectiveWeights weights = ObjectiveWeights::u1();
  ExperimentGrid experiment;
  RtscOptions rtsc;
  OfflineOptions offline;
  TraceSource trace;
  PlanningModelSource planning_model = PlanningModelSource::Auto;
  std::optional<std::filesystem::path> planning_model_path;
};

/// Parses a TOML run configuration. Relative paths resolve against base_dir.
/// Unknown tables or keys and out-of-range values raise Error(InvalidConfig).
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Reads or generates the trace the configuration describes.
SessionTrace load_trace(const RunConfig& config);
/// The daily model RTSC plans with for the given trace.
DailyModel planning_model(const RunConfig& config, const SessionTrace& trace);

}  // namespace smartcharge
