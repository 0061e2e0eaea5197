#include "smartcharge/program_builder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace smartcharge {

int PlanningEv::last_departure() const {
  int last = first_column;
  for (const auto& s : scenarios) last = std::max(last, s.departure);
  return last;
}

Schedule BuiltProgram::extract(const Solution& solution) const {
  const auto width = static_cast<std::size_t>(end_column - start_column);
  Schedule out(energy_vars.size(), width);
  for (std::size_t k = 0; k < energy_vars.size(); ++k) {
    for (std::size_t c = 0; c < width; ++c) {
      const int v = energy_vars[k][c];
      if (v >= 0) out.at(k, c) = std::max(0.0, solution.values[static_cast<std::size_t>(v)]);
    }
  }
  return out;
}

namespace {

bool min_deliveries_fit(const PlanningProblem& pb, double factor) {
  const double per_evse = pb.grid.to_kwh(pb.config.evse_max_kw);
  const double cap = pb.grid.to_kwh(pb.config.transformer_kw);
  struct Job {
    int begin, end;
    double need;
  };
  std::vector<Job> jobs;
  for (const auto& ev : pb.evs) {
    if (ev.min_delivery_kwh <= 0.0) continue;
    jobs.push_back({std::max(ev.first_column, pb.start_column), std::min(ev.last_departure(), pb.end_column),
                    factor * ev.min_delivery_kwh});
  }
  if (jobs.empty()) return true;
  std::vector<std::size_t> order(jobs.size());
  for (int t = pb.start_column; t < pb.end_column; ++t) {
    order.clear();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].need > 1e-12 && jobs[j].begin <= t && t < jobs[j].end) order.push_back(j);
    }
    auto laxity = [&](std::size_t j) {
      return (jobs[j].end - t) - std::ceil(jobs[j].need / per_evse - 1e-9);
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return laxity(a) < laxity(b); });
    double left = cap;
    for (std::size_t j : order) {
      const double give = std::min({per_evse, jobs[j].need, left});
      jobs[j].need -= give;
      left -= give;
      if (left <= 0.0) break;
    }
  }
  return std::all_of(jobs.begin(), jobs.end(), [](const Job& j) { return j.need <= 1e-9; });
}

}  // namespace

double feasible_min_delivery_factor(const PlanningProblem& problem) {
  if (min_deliveries_fit(problem, 1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_deliveries_fit(problem, mid) ? lo : hi) = mid;
  }
  return lo;
}

BuiltProgram build_program(const PlanningProblem& pb) {
  pb.grid.validate();
  pb.weights.validate();
  if (pb.end_column < pb.start_column) throw Error(ErrorKind::DimensionMismatch, "planning window is reversed");
  const int spd = pb.grid.slots_per_day;
  const double dt = pb.grid.slot_hours;
  const double per_evse = pb.grid.to_kwh(pb.config.evse_max_kw);
  const double trans = pb.grid.to_kwh(pb.config.transformer_kw);
  const auto& w = pb.weights;
  const int width = pb.end_column - pb.start_column;

  BuiltProgram out;
  out.start_column = pb.start_column;
  out.end_column = pb.end_column;
  auto& prog = out.program;
  auto slot_of = [&](int col) { return col % spd; };

  const double factor = feasible_min_delivery_factor(pb);

  // Energy variables and per-slot presence probability.
  std::vector<std::vector<int>> present_at(static_cast<std::size_t>(width));
  out.energy_vars.resize(pb.evs.size());
  for (std::size_t k = 0; k < pb.evs.size(); ++k) {
    const auto& ev = pb.evs[k];
    if (ev.scenarios.empty()) throw Error(ErrorKind::DimensionMismatch, "EV " + ev.id + " has no departure scenario");
    auto& vars = out.energy_vars[k];
    vars.assign(static_cast<std::size_t>(width), -1);
    const int begin = std::max(ev.first_column, pb.start_column);
    const int end = std::min(ev.last_departure(), pb.end_column);
    for (int t = begin; t < end; ++t) {
      double presence = 0.0;
      for (const auto& s : ev.scenarios) {
        if (t < s.departure) presence += s.weight;
      }
      const int v = prog.add_variable("e_" + ev.id + "_" + std::to_string(t), VarKind::Energy, 0.0, per_evse);
      vars[static_cast<std::size_t>(t - pb.start_column)] = v;
      present_at[static_cast<std::size_t>(t - pb.start_column)].push_back(v);
      const int sod = slot_of(t);
      const double qc = static_cast<double>(spd - sod) / spd;
      const double pm = pb.config.retail(sod) - pb.config.tou(sod);
      prog.add_linear(v, presence * (w.quick_charging * qc + w.profit * pm));
      prog.add_quadratic(v, v, -presence * w.equal_sharing);
    }
  }

  // Scenario totals, owner utility, caps, deficit and minimum delivery.
  out.min_delivery_kwh.assign(pb.evs.size(), 0.0);
  for (std::size_t k = 0; k < pb.evs.size(); ++k) {
    const auto& ev = pb.evs[k];
    std::map<int, double> merged;
    for (const auto& s : ev.scenarios) merged[s.departure] += s.weight;
    std::vector<AffineCut> cuts;
    if (w.owner_utility > 0.0 && pb.log_model == LogModel::TangentCuts) {
      const double domain = std::max(ev.log_domain_kwh, ev.delivered_kwh + per_evse);
      cuts = tangent_cuts(domain, pb.log_cuts);
    }
    int n = 0;
    for (const auto& [departure, weight] : merged) {
      const std::string tag = ev.id + "_" + std::to_string(n++);
      std::vector<Term> sum;
      for (int t = std::max(ev.first_column, pb.start_column); t < std::min(departure, pb.end_column); ++t) {
        sum.push_back({out.energy_vars[k][static_cast<std::size_t>(t - pb.start_column)], -1.0});
      }
      const int total = prog.add_variable("T_" + tag, VarKind::ScenarioTotal, 0.0, kInf);
      sum.push_back({total, 1.0});
      prog.add_constraint("total_" + tag, std::move(sum), Relation::Equal, 0.0);

      if (w.owner_utility > 0.0) {
        if (pb.log_model == LogModel::Exact) {
          prog.add_log(total, w.owner_utility * weight, ev.delivered_kwh + 1.0);
        } else {
          const int s = prog.add_variable("s_" + tag, VarKind::LogEpigraph, 0.0, kInf);
          prog.add_linear(s, w.owner_utility * weight);
          for (std::size_t g = 0; g < cuts.size(); ++g) {
            prog.add_constraint("cut_" + tag + "_" + std::to_string(g), {{s, 1.0}, {total, -cuts[g].slope}},
                                Relation::LessEqual, cuts[g].intercept + cuts[g].slope * ev.delivered_kwh);
          }
        }
      }
      if (ev.remaining_cap_kwh) {
        prog.add_constraint("cap_" + tag, {{total, 1.0}}, Relation::LessEqual, std::max(0.0, *ev.remaining_cap_kwh));
        if (w.energy_deficit > 0.0) {
          // |delivered - d| = d - delivered under the cap
          prog.add_linear(total, w.energy_deficit * weight);
          prog.add_constant(-w.energy_deficit * weight * std::max(0.0, *ev.remaining_cap_kwh));
        }
      } else if (w.energy_deficit > 0.0) {
        throw Error(ErrorKind::MissingDemand, "energy deficit weight needs a demand for EV " + ev.id);
      }
      if (ev.min_delivery_kwh > 0.0) {
        out.min_delivery_kwh[k] = factor * ev.min_delivery_kwh;
        prog.add_constraint("min_" + tag, {{total, 1.0}}, Relation::GreaterEqual, out.min_delivery_kwh[k]);
      }
    }
  }

  // Facility rows per slot and the demand-charge increase.
  const double peak_ub = pb.config.transformer_kw + pb.config.max_base_kw();
  out.peak_var = prog.add_variable("peak_increase", VarKind::PeakIncrease, 0.0, peak_ub);
  prog.add_linear(out.peak_var, -w.demand_charge * pb.config.demand_charge_rate);
  for (int t = pb.start_column; t < pb.end_column; ++t) {
    const int sod = slot_of(t);
    const double base = pb.grid.to_kwh(pb.config.base_kw(sod));
    prog.add_constant(-w.profit * pb.config.tou(sod) * base - w.load_flattening * base * base);
    const auto& here = present_at[static_cast<std::size_t>(t - pb.start_column)];
    const std::string ts = std::to_string(t);
    if (here.empty()) {
      if (pb.config.base_kw(sod) > pb.previous_peak_kw) {
        prog.add_constraint("peak_" + ts, {{out.peak_var, dt}}, Relation::GreaterEqual,
                            base - pb.grid.to_kwh(pb.previous_peak_kw));
      }
      continue;
    }
    const int load = prog.add_variable("L_" + ts, VarKind::SlotLoad, 0.0, kInf);
    std::vector<Term> terms{{load, 1.0}};
    for (int v : here) terms.push_back({v, -1.0});
    prog.add_constraint("load_" + ts, std::move(terms), Relation::Equal, 0.0);
    prog.add_constraint("trans_" + ts, {{load, 1.0}}, Relation::LessEqual, trans);
    prog.add_constraint("peak_" + ts, {{out.peak_var, dt}, {load, -1.0}}, Relation::GreaterEqual,
                        base - pb.grid.to_kwh(pb.previous_peak_kw));
    prog.add_quadratic(load, load, -w.load_flattening);
    prog.add_linear(load, -2.0 * w.load_flattening * base);
  }
  return out;
}

}  // namespace smartcharge
