#include "smartcharge/offline.hpp"

#include <algorithm>

namespace smartcharge {

int window_days(std::span<const ChargingSession> sessions) {
  int days = 1;
  for (const auto& s : sessions) days = std::max(days, s.day + 1);
  return days;
}

namespace {

PlanningEv planning_ev(const ChargingSession& s, const TimeGrid& grid, double per_evse) {
  if (!s.energy_kwh) throw Error(ErrorKind::MissingDemand, "offline planning needs the demand of " + s.id);
  const int offset = s.day * grid.slots_per_day;
  PlanningEv ev;
  ev.id = s.id;
  ev.first_column = offset + s.arrival_slot;
  ev.scenarios = {{offset + s.departure_slot, 1.0}};
  ev.remaining_cap_kwh = *s.energy_kwh;
  ev.log_domain_kwh = std::min(*s.energy_kwh, per_evse * s.stay_slots());
  return ev;
}

}  // namespace

OfflineResult solve_offline(std::span<const ChargingSession> sessions, const ObjectiveWeights& weights,
                            const ObjectiveContext& ctx, const OfflineOptions& options) {
  const auto& grid = ctx.grid;
  const int spd = grid.slots_per_day;
  const double per_evse = grid.to_kwh(ctx.config.evse_max_kw);
  for (const auto& s : sessions) {
    validate_session(s, grid);
    if (!s.energy_kwh) throw Error(ErrorKind::MissingDemand, "offline planning needs the demand of " + s.id);
  }
  const int days = window_days(sessions);
  const bool coupled = weights.demand_charge > 0.0 && ctx.config.demand_charge_rate > 0.0;

  OfflineResult result;
  result.schedule = Schedule(sessions.size(), static_cast<std::size_t>(days * spd));
  double peak_kw = ctx.tracker.peak_kw;

  auto solve_window = [&](int first_day, int last_day) {
    PlanningProblem pb;
    pb.grid = grid;
    pb.config = ctx.config;
    pb.weights = weights;
    pb.start_column = first_day * spd;
    pb.end_column = (last_day + 1) * spd;
    pb.previous_peak_kw = peak_kw;
    pb.log_model = options.log_model;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      if (sessions[i].day >= first_day && sessions[i].day <= last_day) {
        pb.evs.push_back(planning_ev(sessions[i], grid, per_evse));
        rows.push_back(i);
      }
    }
    const BuiltProgram built = build_program(pb);
    const Solution sol = solve(built.program, options.solve);
    ++result.solves;
    result.solve_seconds += sol.solve_time;
    if (sol.status == SolveStatus::Infeasible) {
      throw Error(ErrorKind::StrategyError, "offline program infeasible for days " + std::to_string(first_day) + "-" +
                                                std::to_string(last_day));
    }
    if (sol.status != SolveStatus::Optimal && sol.max_violation > 1e-6) {
      throw Error(ErrorKind::StrategyError, "offline solve did not converge for days " + std::to_string(first_day) +
                                                "-" + std::to_string(last_day));
    }
    const Schedule part = built.extract(sol);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t c = 0; c < part.slots(); ++c) {
        result.schedule.at(rows[k], static_cast<std::size_t>(pb.start_column) + c) = std::min(part.at(k, c), per_evse);
      }
    }
    for (int col = pb.start_column; col < pb.end_column; ++col) {
      const double load = result.schedule.slot_total(static_cast<std::size_t>(col));
      peak_kw = std::max(peak_kw, grid.to_kw(load) + ctx.config.base_kw(col % spd));
    }
  };

  if (coupled) {
    solve_window(0, days - 1);
  } else {
    for (int d = 0; d < days; ++d) solve_window(d, d);
  }
  result.per_component = eval_components(result.schedule, weights, ctx);
  result.objective_value = result.per_component.weighted(weights);
  return result;
}

}  // namespace smartcharge
