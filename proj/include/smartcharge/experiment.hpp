#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smartcharge/config.hpp"

namespace smartcharge {

/// One run of the comparison grid.
struct Cell {
  StrategyKind strategy = StrategyKind::Rtsc;
  double sigma_slots = 0.0;  // only meaningful for rtsc
  double capacity_kw = 0.0;
  std::uint64_t seed = 0;    // only meaningful for rtsc

  /// File-name safe identifier, e.g. "rtsc_s20_c160_r0" or "llf_c100".
  std::string label() const;
};

/// Expands the experiment grid. Deterministic strategies run once per capacity;
/// rtsc runs for every sigma, capacity and seed.
std::vector<Cell> expand_cells(const ExperimentGrid& grid);

SimulationResult run_cell(const Cell& cell, const RunConfig& config, const SessionTrace& trace,
                          const DailyModel& model);

struct CellOutcome {
  Cell cell;
  bool ok = false;
  std::string error;
  MetricsReport total;
  double realized_objective = 0.0;
  std::vector<double> solve_times;
};

struct CompareReport {
  std::vector<CellOutcome> cells;  // in expansion order
  bool all_ok() const;
};

/// Runs every cell on up to `jobs` threads and writes, under out_dir:
///   cells/<label>.json   per-cell metrics
///   loads/<label>.csv    per-slot facility load
///   summary.csv          one row per successful cell
/// A failing cell is reported and skipped; the others still complete.
CompareReport run_compare(const RunConfig& config, const SessionTrace& trace, const std::filesystem::path& out_dir,
                          int jobs = 1);

/// Writes the per-cell exports of one result.
void write_cell_outputs(const Cell& cell, const SimulationResult& result, const std::filesystem::path& out_dir,
                        const TimeGrid& grid);

/// Human-readable ranking by profit, then realized objective.
void print_ranking(const CompareReport& report, std::ostream& out);

inline constexpr const char* kSummaryCsvHeader =
    "label,strategy,sigma_slots,capacity_kw,seed,energy_kwh,tou_cost,cost_per_kwh,demand_charge,revenue,profit,"
    "peak_kw,unmet_kwh,objective";

}  // namespace smartcharge
