#include "smartcharge/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smartcharge {

namespace {

std::size_t slot_of_day(std::size_t column, const TimeGrid& grid) {
  return column % static_cast<std::size_t>(grid.slots_per_day);
}

}  // namespace

double ObjectiveContext::base_energy(std::size_t column) const {
  return grid.to_kwh(config.base_kw(static_cast<int>(slot_of_day(column, grid))));
}

double ObjectiveContext::tou(std::size_t column) const {
  return config.tou(static_cast<int>(slot_of_day(column, grid)));
}

double ObjectiveContext::retail(std::size_t column) const {
  return config.retail(static_cast<int>(slot_of_day(column, grid)));
}

ObjectiveContext make_context(const FacilityConfig& config, const TimeGrid& grid,
                              std::span<const ChargingSession> sessions, DemandTracker tracker) {
  ObjectiveContext ctx{config, grid, tracker, {}, {}};
  ctx.demands.reserve(sessions.size());
  ctx.availability.reserve(sessions.size());
  for (const auto& s : sessions) {
    ctx.demands.push_back(s.energy_kwh);
    const int offset = s.day * grid.slots_per_day;
    ctx.availability.emplace_back(offset + s.arrival_slot, offset + s.departure_slot);
  }
  return ctx;
}

double eval_owner_utility(const Schedule& schedule) {
  double u = 0.0;
  for (std::size_t i = 0; i < schedule.sessions(); ++i) u += std::log(schedule.session_total(i) + 1.0);
  return u;
}

double eval_quick_charging(const Schedule& schedule, const TimeGrid& grid) {
  // 1-based weight (T - t + 1) / T becomes (T - t) / T for 0-based t.
  const double horizon = grid.slots_per_day;
  double u = 0.0;
  for (std::size_t col = 0; col < schedule.slots(); ++col) {
    const double t = static_cast<double>(slot_of_day(col, grid));
    u += (horizon - t) / horizon * schedule.slot_total(col);
  }
  return u;
}

double eval_profit(const Schedule& schedule, const ObjectiveContext& ctx) {
  double u = 0.0;
  for (std::size_t col = 0; col < schedule.slots(); ++col) {
    const double ev = schedule.slot_total(col);
    u += ctx.retail(col) * ev - ctx.tou(col) * (ev + ctx.base_energy(col));
  }
  return u;
}

double eval_demand_charge(const Schedule& schedule, const ObjectiveContext& ctx) {
  double increase = 0.0;
  for (std::size_t col = 0; col < schedule.slots(); ++col) {
    const double load_kw = ctx.grid.to_kw(schedule.slot_total(col) + ctx.base_energy(col));
    increase = std::max(increase, load_kw - ctx.tracker.peak_kw);
  }
  return -ctx.config.demand_charge_rate * increase;
}

double eval_load_flattening(const Schedule& schedule, const ObjectiveContext& ctx) {
  double u = 0.0;
  for (std::size_t col = 0; col < schedule.slots(); ++col) {
    const double load = schedule.slot_total(col) + ctx.base_energy(col);
    u -= load * load;
  }
  return u;
}

double eval_equal_sharing(const Schedule& schedule) {
  double u = 0.0;
  for (std::size_t i = 0; i < schedule.sessions(); ++i) {
    for (double e : schedule.row(i)) u -= e * e;
  }
  return u;
}

double eval_energy_deficit(const Schedule& schedule, const ObjectiveContext& ctx) {
  if (ctx.demands.size() != schedule.sessions()) {
    throw Error(ErrorKind::DimensionMismatch, "demand vector does not match schedule rows");
  }
  double u = 0.0;
  for (std::size_t i = 0; i < schedule.sessions(); ++i) {
    if (!ctx.demands[i]) throw Error(ErrorKind::MissingDemand, "energy deficit needs every session's demand");
    u -= std::abs(schedule.session_total(i) - *ctx.demands[i]);
  }
  return u;
}

double ComponentUtilities::weighted(const ObjectiveWeights& w) const {
  double total = 0.0;
  if (w.owner_utility != 0.0) total += w.owner_utility * owner_utility;
  if (w.quick_charging != 0.0) total += w.quick_charging * quick_charging;
  if (w.profit != 0.0) total += w.profit * profit;
  if (w.demand_charge != 0.0) total += w.demand_charge * demand_charge;
  if (w.load_flattening != 0.0) total += w.load_flattening * load_flattening;
  if (w.equal_sharing != 0.0) total += w.equal_sharing * equal_sharing;
  if (w.energy_deficit != 0.0) total += w.energy_deficit * energy_deficit;
  return total;
}

ComponentUtilities eval_components(const Schedule& schedule, const ObjectiveWeights& w,
                                   const ObjectiveContext& ctx) {
  ComponentUtilities c;
  if (w.owner_utility != 0.0) c.owner_utility = eval_owner_utility(schedule);
  if (w.quick_charging != 0.0) c.quick_charging = eval_quick_charging(schedule, ctx.grid);
  if (w.profit != 0.0) c.profit = eval_profit(schedule, ctx);
  if (w.demand_charge != 0.0) c.demand_charge = eval_demand_charge(schedule, ctx);
  if (w.load_flattening != 0.0) c.load_flattening = eval_load_flattening(schedule, ctx);
  if (w.equal_sharing != 0.0) c.equal_sharing = eval_equal_sharing(schedule);
  if (w.energy_deficit != 0.0) c.energy_deficit = eval_energy_deficit(schedule, ctx);
  return c;
}

double eval_composite(const Schedule& schedule, const ObjectiveWeights& weights, const ObjectiveContext& ctx) {
  return eval_components(schedule, weights, ctx).weighted(weights);
}

std::vector<AffineCut> tangent_cuts(double max_total_kwh, int num_cuts) {
  if (!(max_total_kwh > 0.0) || num_cuts < 2) {
    throw Error(ErrorKind::InvalidConfig, "tangent cuts need a positive domain and at least two cuts");
  }
  std::vector<AffineCut> cuts;
  cuts.reserve(static_cast<std::size_t>(num_cuts));
  // tangent points evenly spaced in log(1 + g)
  const double log_span = std::log1p(max_total_kwh);
  for (int k = 0; k < num_cuts; ++k) {
    const double g = k == num_cuts - 1 ? max_total_kwh : std::expm1(log_span * k / (num_cuts - 1));
    cuts.push_back({1.0 / (g + 1.0), std::log(g + 1.0) - g / (g + 1.0)});
  }
  return cuts;
}

double envelope_value(std::span<const AffineCut> cuts, double x) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& c : cuts) v = std::min(v, c(x));
  return v;
}

}  // namespace smartcharge
