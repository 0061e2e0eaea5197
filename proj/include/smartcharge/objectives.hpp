#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smartcharge/domain.hpp"

namespace smartcharge {

/// Everything the utility functions need beside the schedule itself. Schedule
/// columns map to slot of day as column % grid.slots_per_day.
struct ObjectiveContext {
  FacilityConfig config;
  TimeGrid grid;
  DemandTracker tracker;                        // peak_kw is ê_old
  std::vector<std::optional<double>> demands;   // d_i, kWh
  std::vector<std::pair<int, int>> availability;  // per session [begin, end) columns

  /// Base load in kWh for the slot at the given schedule column.
  double base_energy(std::size_t column) const;
  double tou(std::size_t column) const;
  double retail(std::size_t column) const;
};

/// Context for a set of sessions laid out on a schedule that starts at day 0.
ObjectiveContext make_context(const FacilityConfig& config, const TimeGrid& grid,
                              std::span<const ChargingSession> sessions, DemandTracker tracker = {});

double eval_owner_utility(const Schedule& schedule);
double eval_quick_charging(const Schedule& schedule, const TimeGrid& grid);
double eval_profit(const Schedule& schedule, const ObjectiveContext& ctx);
double eval_demand_charge(const Schedule& schedule, const ObjectiveContext& ctx);
double eval_load_flattening(const Schedule& schedule, const ObjectiveContext& ctx);
double eval_equal_sharing(const Schedule& schedule);
double eval_energy_deficit(const Schedule& schedule, const ObjectiveContext& ctx);

struct ComponentUtilities {
  double owner_utility = 0.0;
  double quick_charging = 0.0;
  double profit = 0.0;
  double demand_charge = 0.0;
  double load_flattening = 0.0;
  double equal_sharing = 0.0;
  double energy_deficit = 0.0;

  double weighted(const ObjectiveWeights& w) const;
};

/// Evaluates the components with nonzero weight; the others stay 0.
ComponentUtilities eval_components(const Schedule& schedule, const ObjectiveWeights& weights,
                                   const ObjectiveContext& ctx);

double eval_composite(const Schedule& schedule, const ObjectiveWeights& weights, const ObjectiveContext& ctx);

/// Tangent line of log(x + 1): value = slope * x + intercept.
struct AffineCut {
  double slope = 1.0;
  double intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

/// Tangents of log(x + 1) at num_cuts points of [0, max_total_kwh], spaced
/// evenly in log(1 + x). The first is the line x itself.
std::vector<AffineCut> tangent_cuts(double max_total_kwh, int num_cuts);

/// Pointwise minimum of the cuts: a concave upper envelope of log(x + 1).
double envelope_value(std::span<const AffineCut> cuts, double x);

inline constexpr int kDefaultLogCuts = 32;

}  // namespace smartcharge
