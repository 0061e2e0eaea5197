#include "smartcharge/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

namespace smartcharge {

namespace {

constexpr double kLimitTol = 1e-6;

std::string slot_label(int day, int slot) {
  return "day " + std::to_string(day) + " slot " + std::to_string(slot);
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

SimulationResult empty_result(const SessionTrace& trace, const std::string& name, const TimeGrid& grid) {
  SimulationResult r;
  r.strategy = name;
  r.days = std::max(trace.days, window_days(trace.sessions));
  const auto columns = static_cast<std::size_t>(r.days) * static_cast<std::size_t>(grid.slots_per_day);
  r.schedule = Schedule(trace.sessions.size(), columns);
  r.facility_load_kw.assign(columns, 0.0);
  r.delivered_kwh.assign(trace.sessions.size(), 0.0);
  return r;
}

double true_remaining(const ChargingSession& s, double delivered) {
  return s.energy_kwh ? std::max(0.0, *s.energy_kwh - delivered) : std::numeric_limits<double>::infinity();
}

}  // namespace

const char* to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Offline: return "offline";
    case StrategyKind::Rtsc: return "rtsc";
    case StrategyKind::Uncontrolled: return "uncontrolled";
    case StrategyKind::Llf: return "llf";
    case StrategyKind::Edf: return "edf";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::Offline, StrategyKind::Rtsc, StrategyKind::Uncontrolled, StrategyKind::Llf,
                 StrategyKind::Edf}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + std::string(name) + "'");
}

SimulationResult run_simulation(const SessionTrace& trace, ChargingStrategy& strategy, const FacilityConfig& config,
                                const ObjectiveWeights& weights, const TimeGrid& grid) {
  SimulationResult r = empty_result(trace, strategy.name(), grid);
  const auto& sessions = trace.sessions;

  // Sessions in replay order: by day, arrival slot, then id.
  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = sessions[a];
    const auto& y = sessions[b];
    if (x.day != y.day) return x.day < y.day;
    if (x.arrival_slot != y.arrival_slot) return x.arrival_slot < y.arrival_slot;
    return x.id < y.id;
  });

  std::size_t next = 0;
  std::vector<std::size_t> plugged;
  for (int day = 0; day < r.days; ++day) {
    for (int t = 0; t < grid.slots_per_day; ++t) {
      std::erase_if(plugged, [&](std::size_t i) { return sessions[i].departure_slot <= t; });
      while (next < order.size() && sessions[order[next]].day == day && sessions[order[next]].arrival_slot == t) {
        plugged.push_back(order[next++]);
      }

      const auto column = static_cast<std::size_t>(day) * static_cast<std::size_t>(grid.slots_per_day) +
                          static_cast<std::size_t>(t);
      double ev_kw = 0.0;
      if (!plugged.empty()) {
        LotState lot{day, t, {}, r.tracker};
        lot.plugged.reserve(plugged.size());
        for (auto i : plugged) lot.plugged.push_back({i, sessions[i], r.delivered_kwh[i]});

        const auto kw = strategy.setpoints_kw(lot);
        if (kw.size() != plugged.size()) {
          throw Error(ErrorKind::StrategyError, slot_label(day, t) + ": setpoint count does not match plugged EVs");
        }
        double total_kw = 0.0;
        for (std::size_t k = 0; k < kw.size(); ++k) {
          if (!(kw[k] >= -kLimitTol) || kw[k] > config.evse_max_kw + kLimitTol) {
            throw Error(ErrorKind::StrategyError,
                        slot_label(day, t) + ": setpoint " + shortest(kw[k]) + " kW outside the EVSE rating");
          }
          total_kw += std::max(0.0, kw[k]);
        }
        if (total_kw > config.transformer_kw + kLimitTol) {
          throw Error(ErrorKind::StrategyError,
                      slot_label(day, t) + ": setpoints total " + shortest(total_kw) + " kW above the transformer limit");
        }
        for (std::size_t k = 0; k < kw.size(); ++k) {
          const auto i = plugged[k];
          const double energy =
              std::min(grid.to_kwh(std::clamp(kw[k], 0.0, config.evse_max_kw)),
                       true_remaining(sessions[i], r.delivered_kwh[i]));
          r.schedule.at(i, column) = energy;
          r.delivered_kwh[i] += energy;
          ev_kw += grid.to_kw(energy);
        }
      }
      const double load = ev_kw + config.base_kw(t);
      r.facility_load_kw[column] = load;
      r.tracker.update(load);
    }
  }

  compute_metrics(r, trace, config, weights, grid);
  return r;
}

SimulationResult run_simulation(const SessionTrace& trace, StrategyKind kind, const FacilityConfig& config,
                                const ObjectiveWeights& weights, const SimulationOptions& options,
                                const TimeGrid& grid) {
  switch (kind) {
    case StrategyKind::Rtsc: {
      RtscStrategy rtsc(config, grid, weights, options.model, options.rtsc);
      auto r = run_simulation(trace, rtsc, config, weights, grid);
      r.solve_times = rtsc.solve_times();
      return r;
    }
    case StrategyKind::Uncontrolled:
    case StrategyKind::Llf:
    case StrategyKind::Edf: {
      const Priority p = kind == StrategyKind::Uncontrolled ? Priority::Arrival
                         : kind == StrategyKind::Llf        ? Priority::LeastLaxity
                                                            : Priority::EarliestDeadline;
      PriorityStrategy strategy(p, config, grid);
      return run_simulation(trace, strategy, config, weights, grid);
    }
    case StrategyKind::Offline: break;
  }

  SimulationResult r = empty_result(trace, to_string(kind), grid);
  if (!trace.sessions.empty()) {
    const auto ctx = make_context(config, grid, trace.sessions);
    const OfflineResult off = solve_offline(trace.sessions, weights, ctx, options.offline);
    r.solve_times.push_back(off.solve_seconds);
    for (std::size_t i = 0; i < trace.sessions.size(); ++i) {
      double remaining = true_remaining(trace.sessions[i], 0.0);
      for (std::size_t c = 0; c < off.schedule.slots() && c < r.schedule.slots(); ++c) {
        const double e = std::min(std::max(0.0, off.schedule.at(i, c)), remaining);
        r.schedule.at(i, c) = e;
        remaining -= e;
        r.delivered_kwh[i] += e;
      }
    }
  }
  for (std::size_t c = 0; c < r.facility_load_kw.size(); ++c) {
    const int slot = static_cast<int>(c % static_cast<std::size_t>(grid.slots_per_day));
    r.facility_load_kw[c] = grid.to_kw(r.schedule.slot_total(c)) + config.base_kw(slot);
    r.tracker.update(r.facility_load_kw[c]);
  }
  compute_metrics(r, trace, config, weights, grid);
  return r;
}

void compute_metrics(SimulationResult& result, const SessionTrace& trace, const FacilityConfig& config,
                     const ObjectiveWeights& weights, const TimeGrid& grid) {
  const auto spd = static_cast<std::size_t>(grid.slots_per_day);
  const int days = result.days;
  result.daily.assign(static_cast<std::size_t>(days), MetricsReport{});
  MetricsReport total;

  for (std::size_t c = 0; c < result.facility_load_kw.size(); ++c) {
    const int slot = static_cast<int>(c % spd);
    auto& day = result.daily[c / spd];
    const double energy = result.schedule.slot_total(c);
    const double base_kwh = grid.to_kwh(config.base_kw(slot));
    day.energy_delivered_kwh += energy;
    day.revenue += config.retail(slot) * energy;
    day.tou_cost += config.tou(slot) * (energy + base_kwh);
    day.peak_load_kw = std::max(day.peak_load_kw, result.facility_load_kw[c]);
  }
  for (std::size_t i = 0; i < trace.sessions.size(); ++i) {
    const auto& s = trace.sessions[i];
    if (!s.energy_kwh) continue;
    const auto d = static_cast<std::size_t>(std::clamp(s.day, 0, std::max(0, days - 1)));
    if (d < result.daily.size()) result.daily[d].unmet_demand_kwh += std::max(0.0, *s.energy_kwh - result.delivered_kwh[i]);
  }

  // The billing period is the whole window and starts from a zero peak.
  total.demand_charge = config.demand_charge_rate * std::max(0.0, result.tracker.peak_kw);
  const double prorated = days > 0 ? total.demand_charge / days : 0.0;
  for (auto& day : result.daily) {
    day.demand_charge = prorated;
    day.profit = day.revenue - day.tou_cost - day.demand_charge;
    day.cost_per_kwh = day.energy_delivered_kwh > 0.0 ? day.tou_cost / day.energy_delivered_kwh : 0.0;
    total.energy_delivered_kwh += day.energy_delivered_kwh;
    total.revenue += day.revenue;
    total.tou_cost += day.tou_cost;
    total.unmet_demand_kwh += day.unmet_demand_kwh;
    total.peak_load_kw = std::max(total.peak_load_kw, day.peak_load_kw);
  }
  total.profit = total.revenue - total.tou_cost - total.demand_charge;
  total.cost_per_kwh = total.energy_delivered_kwh > 0.0 ? total.tou_cost / total.energy_delivered_kwh : 0.0;
  result.total = total;

  const auto ctx = make_context(config, grid, trace.sessions);
  result.components = eval_components(result.schedule, weights, ctx);
  result.realized_objective = result.components.weighted(weights);
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"energy_delivered_kwh", m.energy_delivered_kwh},
          {"tou_cost", m.tou_cost},
          {"cost_per_kwh", m.cost_per_kwh},
          {"demand_charge", m.demand_charge},
          {"revenue", m.revenue},
          {"profit", m.profit},
          {"peak_load_kw", m.peak_load_kw},
          {"unmet_demand_kwh", m.unmet_demand_kwh}};
}

nlohmann::json to_json(const ComponentUtilities& c) {
  return {{"owner_utility", c.owner_utility},     {"quick_charging", c.quick_charging},
          {"profit", c.profit},                   {"demand_charge", c.demand_charge},
          {"load_flattening", c.load_flattening}, {"equal_sharing", c.equal_sharing},
          {"energy_deficit", c.energy_deficit}};
}

nlohmann::json metrics_json(const SimulationResult& result) {
  nlohmann::json daily = nlohmann::json::array();
  for (std::size_t d = 0; d < result.daily.size(); ++d) {
    auto j = to_json(result.daily[d]);
    j["day"] = d;
    daily.push_back(std::move(j));
  }
  return {{"strategy", result.strategy},
          {"days", result.days},
          {"total", to_json(result.total)},
          {"demand_charge_prorated_per_day", result.days > 0 ? result.total.demand_charge / result.days : 0.0},
          {"daily", std::move(daily)},
          {"realized_objective", result.realized_objective},
          {"components", to_json(result.components)},
          {"planning_solves", result.solve_times.size()}};
}

void write_load_rows(const SimulationResult& result, std::ostream& out, const TimeGrid& grid) {
  const auto spd = static_cast<std::size_t>(grid.slots_per_day);
  for (std::size_t c = 0; c < result.facility_load_kw.size(); ++c) {
    out << c / spd << ',' << c % spd << ',' << shortest(result.facility_load_kw[c]) << ',' << result.strategy << '\n';
  }
}

}  // namespace smartcharge
