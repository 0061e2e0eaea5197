#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smartcharge/baselines.hpp"
#include "smartcharge/offline.hpp"
#include "smartcharge/rtsc.hpp"
#include "smartcharge/traces.hpp"

namespace smartcharge {

enum class StrategyKind { Offline, Rtsc, Uncontrolled, Llf, Edf };

const char* to_string(StrategyKind kind);
/// Throws Error(InvalidConfig) for an unknown name.
StrategyKind parse_strategy(std::string_view name);

struct MetricsReport {
  double energy_delivered_kwh = 0.0;
  double tou_cost = 0.0;
  double cost_per_kwh = 0.0;
  double demand_charge = 0.0;
  double revenue = 0.0;
  double profit = 0.0;
  double peak_load_kw = 0.0;
  double unmet_demand_kwh = 0.0;
};

struct SimulationResult {
  std::string strategy;
  int days = 0;
  Schedule schedule;                     // [session][day * slots_per_day + slot], kWh
  std::vector<double> facility_load_kw;  // per column, EV load plus base load
  std::vector<double> delivered_kwh;     // per session
  DemandTracker tracker;
  std::vector<MetricsReport> daily;      // demand charge prorated over the days
  MetricsReport total;                   // demand charge assessed once
  ComponentUtilities components;         // realized utilities over the window
  double realized_objective = 0.0;
  std::vector<double> solve_times;       // seconds per planning solve
};

struct SimulationOptions {
  RtscOptions rtsc;
  OfflineOptions offline;
  DailyModel model = default_daily_model();
};

/// Replays the trace slot by slot: departures, then arrivals, then setpoints.
/// Delivered energy is the setpoint times the slot length, capped by what the
/// EV still needs. Throws StrategyError (with the slot) when a strategy breaks
/// an EVSE or transformer limit.
SimulationResult run_simulation(const SessionTrace& trace, ChargingStrategy& strategy, const FacilityConfig& config,
                                const ObjectiveWeights& weights, const TimeGrid& grid = {});

/// Builds the named strategy. The offline strategy is solved up front and its
/// schedule realized directly.
SimulationResult run_simulation(const SessionTrace& trace, StrategyKind kind, const FacilityConfig& config,
                                const ObjectiveWeights& weights, const SimulationOptions& options = {},
                                const TimeGrid& grid = {});

/// Fills daily, total, components and realized_objective from the schedule.
void compute_metrics(SimulationResult& result, const SessionTrace& trace, const FacilityConfig& config,
                     const ObjectiveWeights& weights, const TimeGrid& grid = {});

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const ComponentUtilities& c);
/// Metrics summary without wall-clock data, so it is reproducible byte for byte.
nlohmann::json metrics_json(const SimulationResult& result);
/// Rows `day,slot,load_kw,strategy` without the header.
void write_load_rows(const SimulationResult& result, std::ostream& out, const TimeGrid& grid = {});
inline constexpr const char* kLoadCsvHeader = "day,slot,load_kw,strategy";

}  // namespace smartcharge
