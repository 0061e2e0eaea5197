#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smartcharge/domain.hpp"
#include "smartcharge/objectives.hpp"
#include "smartcharge/program.hpp"

namespace smartcharge {

/// How the owner-utility logarithm enters the program.
enum class LogModel {
  TangentCuts,  // epigraph variable under a family of tangent lines
  Exact,        // smooth log term handled by the solver
};

struct DepartureScenario {
  int departure = 0;    // exclusive column
  double weight = 1.0;  // normalized across an EV's scenarios
};

/// One EV as seen by a planning program. Columns are on the program's axis,
/// where slot of day = column % slots_per_day.
struct PlanningEv {
  std::string id;
  int first_column = 0;
  std::vector<DepartureScenario> scenarios;
  double delivered_kwh = 0.0;              // already delivered before first_column
  std::optional<double> remaining_cap_kwh;  // cap on further delivery per scenario
  double min_delivery_kwh = 0.0;           // only for certainty-equivalent arrivals
  double log_domain_kwh = 0.0;             // upper end of the tangent-cut range, total kWh
  bool is_model = false;

  int last_departure() const;
};

struct PlanningProblem {
  TimeGrid grid;
  FacilityConfig config;
  ObjectiveWeights weights;
  int start_column = 0;
  int end_column = 96;
  std::vector<PlanningEv> evs;
  double previous_peak_kw = 0.0;  // peak already paid for in this billing period
  LogModel log_model = LogModel::TangentCuts;
  int log_cuts = kDefaultLogCuts;
};

/// A program together with the variable layout needed to read a schedule back.
struct BuiltProgram {
  ConvexProgram program;
  int start_column = 0;
  int end_column = 0;
  std::vector<std::vector<int>> energy_vars;  // [ev][column - start], -1 where the EV cannot charge
  int peak_var = -1;
  std::vector<double> min_delivery_kwh;  // per EV after the capacity pre-check

  /// Rows follow problem.evs; columns cover [start_column, end_column).
  Schedule extract(const Solution& solution) const;
};

/// Assembles the planning program. Minimum deliveries that cannot all be met
/// under the transformer cap are scaled down by a common factor first.
BuiltProgram build_program(const PlanningProblem& problem);

/// Largest factor in [0, 1] such that every EV can receive factor * min_delivery
/// under the per-EVSE and transformer caps, using a least-laxity-first witness.
double feasible_min_delivery_factor(const PlanningProblem& problem);

}  // namespace smartcharge
