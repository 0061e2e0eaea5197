#include "smartcharge/rtsc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smartcharge {

double ScenarioSet::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

int reference_departure(const ChargingSession& session, const DailyModel& model, InputMode mode, const TimeGrid& grid) {
  if (mode == InputMode::Declared) return session.declared_departure.value_or(session.departure_slot);
  const auto& bin = model.bin(weekday_of(session.day), arrival_bin(session.arrival_slot, grid));
  const double stay = bin.expected_count > 0.0 ? bin.mean_stay_slots : model.global_mean_stay();
  const int departure = session.arrival_slot + std::max(1, static_cast<int>(std::lround(stay)));
  return std::min(departure, grid.slots_per_day);
}

std::vector<int> sample_departure_scenarios(int reference, int current_slot, int n, double stddev_slots,
                                            std::mt19937_64& rng, const TimeGrid& grid) {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "need at least one departure scenario");
  const int lo = current_slot + 1;
  const int hi = grid.slots_per_day;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  if (stddev_slots <= 0.0) {
    out.assign(static_cast<std::size_t>(n), std::clamp(reference, lo, hi));
    return out;
  }
  std::normal_distribution<double> noise(static_cast<double>(reference), stddev_slots);
  for (int i = 0; i < n; ++i) {
    const auto draw = static_cast<int>(std::lround(noise(rng)));
    out.push_back(std::clamp(draw, lo, hi));
  }
  return out;
}

ScenarioSet prune_scenarios(ScenarioSet set, int t, const TimeGrid& grid) {
  std::size_t alive = 0;
  for (std::size_t n = 0; n < set.departures.size(); ++n) {
    if (set.departures[n] <= t) set.weights[n] = 0.0;
    if (set.weights[n] > 0.0) ++alive;
  }
  if (alive == 0) return {{grid.slots_per_day}, {1.0}};
  for (auto& w : set.weights) {
    if (w > 0.0) w = 1.0 / static_cast<double>(alive);
  }
  return set;
}

std::vector<ModelEv> build_future_model(const DailyModel& model, int weekday, int t, double kappa,
                                        const TimeGrid& grid) {
  if (kappa < 0.0 || kappa > 1.0) throw Error(ErrorKind::InvalidConfig, "kappa must lie in [0, 1]");
  std::vector<ModelEv> out;
  for (int b = 0; b < kArrivalBins; ++b) {
    const auto [first, last] = bin_slots(b, grid);
    const int mid = (first + last) / 2;
    if (mid <= t) continue;
    const auto& bin = model.bin(weekday, b);
    const auto count = static_cast<int>(std::lround(bin.expected_count));
    if (count <= 0 || bin.mean_energy_kwh <= 0.0) continue;
    const int stay = std::max(1, static_cast<int>(std::lround(bin.mean_stay_slots)));
    const ModelEv ev{mid, std::min(grid.slots_per_day, mid + stay), bin.mean_energy_kwh, kappa * bin.mean_energy_kwh};
    out.insert(out.end(), static_cast<std::size_t>(count), ev);
  }
  return out;
}

PlanResult plan_step(int t, std::span<const RtscEv> evs, std::span<const ModelEv> future, const PlanContext& ctx) {
  const double per_evse = ctx.grid.to_kwh(ctx.config.evse_max_kw);
  PlanningProblem pb;
  pb.grid = ctx.grid;
  pb.config = ctx.config;
  pb.weights = ctx.weights;
  pb.start_column = t;
  pb.end_column = ctx.grid.slots_per_day;
  pb.previous_peak_kw = ctx.previous_peak_kw;
  pb.log_model = ctx.log_model;
  for (const auto& e : evs) {
    PlanningEv p;
    p.id = e.ev.session.id;
    p.first_column = t;
    for (std::size_t n = 0; n < e.scenarios.departures.size(); ++n) {
      if (e.scenarios.weights[n] > 0.0) p.scenarios.push_back({e.scenarios.departures[n], e.scenarios.weights[n]});
    }
    p.delivered_kwh = e.ev.delivered_kwh;
    p.remaining_cap_kwh = std::max(0.0, e.demand_estimate_kwh - e.ev.delivered_kwh);
    p.log_domain_kwh = e.log_domain_kwh;
    pb.evs.push_back(std::move(p));
  }
  for (std::size_t j = 0; j < future.size(); ++j) {
    const auto& m = future[j];
    PlanningEv p;
    p.id = "model" + std::to_string(j);
    p.first_column = m.arrival_slot;
    p.scenarios = {{m.departure_slot, 1.0}};
    p.remaining_cap_kwh = m.demand_kwh;
    p.min_delivery_kwh = m.min_delivery_kwh;
    p.log_domain_kwh = std::min(m.demand_kwh, per_evse * (m.departure_slot - m.arrival_slot));
    p.is_model = true;
    pb.evs.push_back(std::move(p));
  }
  const BuiltProgram built = build_program(pb);
  PlanResult result;
  result.real_evs = evs.size();
  result.solution = solve(built.program, ctx.solve);
  const auto status = result.solution.status;
  if (status == SolveStatus::Infeasible ||
      (status == SolveStatus::IterLimit && result.solution.max_violation > 1e3 * ctx.solve.feas_tol)) {
    throw Error(ErrorKind::StrategyError,
                "slot " + std::to_string(t) + ": planning program " + to_string(status));
  }
  result.plan = built.extract(result.solution);
  return result;
}

std::vector<double> enact_step(const PlanResult& plan, const FacilityConfig& config, const TimeGrid& grid) {
  std::vector<double> kw(plan.real_evs, 0.0);
  if (plan.plan.slots() == 0) return kw;
  double total = 0.0;
  for (std::size_t k = 0; k < plan.real_evs; ++k) {
    kw[k] = std::clamp(grid.to_kw(plan.plan.at(k, 0)), 0.0, config.evse_max_kw);
    total += kw[k];
  }
  if (total > config.transformer_kw) {
    const double scale = config.transformer_kw / total;
    for (auto& v : kw) v *= scale;
  }
  return kw;
}

RtscStrategy::RtscStrategy(FacilityConfig config, TimeGrid grid, ObjectiveWeights weights, DailyModel model,
                           RtscOptions options)
    : config_(std::move(config)),
      grid_(grid),
      weights_(weights),
      model_(std::move(model)),
      options_(options),
      rng_(options.seed) {
  if (options_.scenarios < 1) throw Error(ErrorKind::InvalidConfig, "need at least one departure scenario");
}

std::vector<double> RtscStrategy::setpoints_kw(const LotState& lot) {
  const double per_evse = grid_.to_kwh(config_.evse_max_kw);
  const int t = lot.slot;

  std::map<std::size_t, Tracked> still_plugged;
  for (const auto& p : lot.plugged) {
    auto it = tracked_.find(p.index);
    if (it == tracked_.end()) {
      Tracked tr;
      const int reference = reference_departure(p.session, model_, options_.input_mode, grid_);
      tr.scenarios.departures =
          sample_departure_scenarios(reference, t, options_.scenarios, options_.noise_stddev_slots, rng_, grid_);
      tr.scenarios.weights.assign(tr.scenarios.departures.size(), 1.0 / options_.scenarios);
      const bool declared = options_.input_mode == InputMode::Declared && p.session.energy_kwh.has_value();
      tr.demand_estimate_kwh = declared ? *p.session.energy_kwh : estimate_demand(p.session, model_, grid_);
      const int last = *std::max_element(tr.scenarios.departures.begin(), tr.scenarios.departures.end());
      tr.log_domain_kwh = std::min(tr.demand_estimate_kwh, per_evse * (last - p.session.arrival_slot));
      it = tracked_.emplace(p.index, std::move(tr)).first;
    }
    it->second.scenarios = prune_scenarios(std::move(it->second.scenarios), t, grid_);
    still_plugged.insert(*it);
  }
  tracked_ = std::move(still_plugged);

  std::vector<double> kw(lot.plugged.size(), 0.0);
  std::vector<RtscEv> evs;
  std::vector<std::size_t> lot_position;
  for (std::size_t i = 0; i < lot.plugged.size(); ++i) {
    const auto& p = lot.plugged[i];
    const auto& tr = tracked_.at(p.index);
    if (tr.demand_estimate_kwh - p.delivered_kwh <= 1e-9) continue;
    evs.push_back({p, tr.scenarios, tr.demand_estimate_kwh, tr.log_domain_kwh});
    lot_position.push_back(i);
  }
  if (evs.empty()) return kw;

  std::vector<ModelEv> future;
  if (options_.future_model) future = build_future_model(model_, weekday_of(lot.day), t, options_.kappa, grid_);
  const PlanContext ctx{config_, grid_, weights_, lot.tracker.peak_kw, options_.log_model, options_.solve};
  const PlanResult plan = plan_step(t, evs, future, ctx);
  solve_times_.push_back(plan.solution.solve_time);
  const auto enacted = enact_step(plan, config_, grid_);
  for (std::size_t k = 0; k < enacted.size(); ++k) kw[lot_position[k]] = enacted[k];
  return kw;
}

}  // namespace smartcharge
