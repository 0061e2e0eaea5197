#pragma once

#include <span>

#include "smartcharge/objectives.hpp"
#include "smartcharge/program_builder.hpp"

namespace smartcharge {

struct OfflineOptions {
  LogModel log_model = LogModel::Exact;
  SolveOptions solve{1e-9, 1e-9, 10000};
};

struct OfflineResult {
  Schedule schedule;  // [session][day * slots_per_day + slot]
  double objective_value = 0.0;
  ComponentUtilities per_component;
  int solves = 0;
  double solve_seconds = 0.0;
};

/// Optimal schedule with full knowledge of every session. Days are solved one
/// at a time with the peak carried forward, unless a demand-charge weight
/// couples them, in which case the whole window is one program.
/// objective_value is the composite utility of the returned schedule.
OfflineResult solve_offline(std::span<const ChargingSession> sessions, const ObjectiveWeights& weights,
                            const ObjectiveContext& ctx, const OfflineOptions& options = {});

/// Number of days covered by the sessions (max day + 1, at least 1).
int window_days(std::span<const ChargingSession> sessions);

}  // namespace smartcharge
