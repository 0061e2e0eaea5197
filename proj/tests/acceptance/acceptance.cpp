// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Exit status is 0 once every criterion has been evaluated; pass --strict to
// make any FAIL line turn into a nonzero exit.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "random_programs.hpp"
#include "smartcharge/experiment.hpp"

namespace fs = std::filesystem;
using namespace smartcharge;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
  verdicts.push_back({id, pass, detail});
  std::cout << "CRITERION " << id << ": " << (pass ? "PASS" : "FAIL") << " - " << detail << std::endl;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------------------

void solver_oracle() {
  const auto start = Clock::now();
  int agree = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const int n = 1 + static_cast<int>(seed % 6);
    const auto p = testing::random_small_program(seed + 1000, n, 1 + static_cast<int>(seed % 3));
    const auto sol = solve(p);
    const auto oracle = brute_force_oracle(p, n > 4 ? 5 : 9, 2);
    const double gap = std::abs(sol.objective_value - oracle.objective_value);
    worst = std::max(worst, gap);
    if (sol.status == SolveStatus::Optimal && oracle.status == SolveStatus::Optimal && gap <= 1e-3) ++agree;
  }
  const double elapsed = seconds_since(start);
  report(1, agree == 100 && elapsed < 60.0,
         fmt("%d/100 programs within 1e-3 of the oracle (worst gap %.2e), %.1f s", agree, worst, elapsed));
}

// ---------------------------------------------------------------------------

struct CellRun {
  Cell cell;
  SimulationResult result;
};

/// Slot loads, EVSE rating, availability and true demand for one realized run.
std::vector<std::string> feasibility_violations(const CellRun& run, const SessionTrace& trace,
                                                const FacilityConfig& facility, const TimeGrid& grid) {
  std::vector<std::string> out;
  const auto& s = run.result.schedule;
  const double cap_kwh = grid.to_kwh(run.cell.capacity_kw);
  const double per_evse = grid.to_kwh(facility.evse_max_kw);
  const auto spd = static_cast<std::size_t>(grid.slots_per_day);
  for (std::size_t c = 0; c < s.slots(); ++c) {
    if (s.slot_total(c) > cap_kwh + 1e-6) out.push_back(fmt("slot %zu load %.9f kWh", c, s.slot_total(c)));
  }
  for (std::size_t i = 0; i < trace.sessions.size(); ++i) {
    const auto& ses = trace.sessions[i];
    const std::size_t begin = static_cast<std::size_t>(ses.day) * spd + static_cast<std::size_t>(ses.arrival_slot);
    const std::size_t end = static_cast<std::size_t>(ses.day) * spd + static_cast<std::size_t>(ses.departure_slot);
    double total = 0.0;
    for (std::size_t c = 0; c < s.slots(); ++c) {
      const double e = s.at(i, c);
      total += e;
      if (e < 0.0) out.push_back(fmt("%s negative energy", ses.id.c_str()));
      if (e > per_evse + 1e-9) out.push_back(fmt("%s above the EVSE rating at %zu", ses.id.c_str(), c));
      if (e > 0.0 && (c < begin || c >= end)) out.push_back(fmt("%s charged while away at %zu", ses.id.c_str(), c));
    }
    if (ses.energy_kwh && total > *ses.energy_kwh + 1e-9) out.push_back(fmt("%s over its demand", ses.id.c_str()));
  }
  return out;
}

struct Sweep {
  RunConfig config;
  SessionTrace trace;
  std::vector<CellRun> runs;
  double seconds = 0.0;
};

Sweep run_sweep(const fs::path& config_path) {
  Sweep sw;
  sw.config = load_run_config(config_path);
  sw.trace = load_trace(sw.config);
  const DailyModel model = planning_model(sw.config, sw.trace);
  const auto start = Clock::now();
  for (const auto& cell : expand_cells(sw.config.experiment)) {
    sw.runs.push_back({cell, run_cell(cell, sw.config, sw.trace, model)});
  }
  sw.seconds = seconds_since(start);
  return sw;
}

const CellRun* find(const Sweep& sw, StrategyKind kind, double capacity, double sigma = 0.0) {
  for (const auto& r : sw.runs) {
    if (r.cell.strategy == kind && r.cell.capacity_kw == capacity &&
        (kind != StrategyKind::Rtsc || r.cell.sigma_slots == sigma)) {
      return &r;
    }
  }
  return nullptr;
}

void feasibility(const std::vector<const Sweep*>& sweeps) {
  std::size_t cells = 0, violations = 0;
  std::string first;
  for (const auto* sw : sweeps) {
    for (const auto& run : sw->runs) {
      ++cells;
      const auto v = feasibility_violations(run, sw->trace, sw->config.facility, sw->config.grid);
      violations += v.size();
      if (!v.empty() && first.empty()) first = run.cell.label() + ": " + v.front();
    }
  }
  report(2, violations == 0,
         fmt("%zu cells checked (every strategy, capacity and sigma), %zu violations%s%s", cells, violations,
             first.empty() ? "" : ", first: ", first.c_str()));
}

void offline_dominance(const std::vector<const Sweep*>& sweeps) {
  int compared = 0, beaten = 0;
  double tightest = 1e300;
  std::string worst;
  for (const auto* sw : sweeps) {
    for (double cap : sw->config.experiment.capacities_kw) {
      const auto* off = find(*sw, StrategyKind::Offline, cap);
      if (off == nullptr) continue;
      const double best = off->result.realized_objective;
      for (const auto& r : sw->runs) {
        if (r.cell.strategy == StrategyKind::Offline || r.cell.capacity_kw != cap) continue;
        ++compared;
        const double margin = best - r.result.realized_objective;
        if (margin < tightest) {
          tightest = margin;
          worst = r.cell.label();
        }
        if (r.result.realized_objective > best + 1e-6 * std::max(1.0, std::abs(best))) ++beaten;
      }
    }
  }
  report(3, compared > 0 && beaten == 0,
         fmt("%d online cells compared with offline, %d exceed it; tightest margin %.6g (%s)", compared, beaten,
             tightest, worst.c_str()));
}

// ---------------------------------------------------------------------------

void degenerate_equivalence(const RunConfig& tc1) {
  SessionTrace trace;
  trace.days = 1;
  trace.num_evse = 57;
  auto session = [](std::string id, int a, int d, double e) {
    ChargingSession s;
    s.id = std::move(id);
    s.arrival_slot = a;
    s.departure_slot = d;
    s.energy_kwh = e;
    return s;
  };
  trace.sessions = {session("a", 28, 66, 16.0), session("b", 30, 44, 10.0), session("c", 33, 80, 22.0),
                    session("d", 40, 60, 12.0), session("e", 52, 90, 18.0)};
  FacilityConfig facility = tc1.facility;
  facility.transformer_kw = 15.0;
  SimulationOptions options;
  options.rtsc.scenarios = 1;
  options.rtsc.noise_stddev_slots = 0.0;
  options.rtsc.future_model = false;
  options.rtsc.input_mode = InputMode::Declared;
  options.rtsc.solve = {1e-9, 1e-9, 10000};
  const auto mpc = run_simulation(trace, StrategyKind::Rtsc, facility, tc1.weights, options, tc1.grid);
  const auto off = run_simulation(trace, StrategyKind::Offline, facility, tc1.weights, options, tc1.grid);
  const double rel = std::abs(mpc.realized_objective - off.realized_objective) / std::abs(off.realized_objective);
  report(4, rel <= 1e-4,
         fmt("5 EVs, 1 day: rtsc %.8f vs offline %.8f, relative gap %.2e", mpc.realized_objective,
             off.realized_objective, rel));
}

// ---------------------------------------------------------------------------

void test_case_1(const Sweep& sw) {
  const auto& caps = sw.config.experiment.capacities_kw;
  const double top = *std::max_element(caps.begin(), caps.end());
  const double low = *std::min_element(caps.begin(), caps.end());

  double hi = 0.0, lo = 1e300;
  for (const auto& r : sw.runs) {
    if (r.cell.capacity_kw != top) continue;
    hi = std::max(hi, r.result.total.energy_delivered_kwh);
    lo = std::min(lo, r.result.total.energy_delivered_kwh);
  }
  const double spread = (hi - lo) / hi;
  const bool equal_energy = spread <= 0.01;

  const auto* llf = find(sw, StrategyKind::Llf, low);
  const auto* edf = find(sw, StrategyKind::Edf, low);
  const double baseline = std::max(llf->result.total.energy_delivered_kwh, edf->result.total.energy_delivered_kwh);
  std::string energy_detail;
  bool energy_ok = true;
  for (double sigma : sw.config.experiment.sigmas) {
    const auto* r = find(sw, StrategyKind::Rtsc, low, sigma);
    const double e = r->result.total.energy_delivered_kwh;
    energy_ok = energy_ok && e >= baseline;
    energy_detail += fmt(" s%g=%.2f", sigma, e);
  }

  int cheaper = 0, rtsc_cells = 0;
  std::string dearer;
  for (const auto& r : sw.runs) {
    if (r.cell.strategy != StrategyKind::Rtsc) continue;
    ++rtsc_cells;
    const auto* unc = find(sw, StrategyKind::Uncontrolled, r.cell.capacity_kw);
    if (r.result.total.cost_per_kwh < unc->result.total.cost_per_kwh) {
      ++cheaper;
    } else {
      dearer += fmt(" %s(%.5f vs %.5f)", r.cell.label().c_str(), r.result.total.cost_per_kwh,
                    unc->result.total.cost_per_kwh);
    }
  }
  const bool cost_ok = cheaper == rtsc_cells;
  const bool time_ok = sw.seconds < 900.0;

  report(5, equal_energy && energy_ok && cost_ok && time_ok,
         fmt("energy spread at %g kW %.3f%% [%s]; at %g kW llf/edf max %.2f kWh, rtsc%s [%s]; rtsc cheaper than "
             "uncontrolled in %d/%d cells%s [%s]; sweep %.0f s [%s]",
             top, 100.0 * spread, equal_energy ? "ok" : "no", low, baseline, energy_detail.c_str(),
             energy_ok ? "ok" : "no", cheaper, rtsc_cells, dearer.c_str(), cost_ok ? "ok" : "no", sw.seconds,
             time_ok ? "ok" : "no"));
}

void test_case_2(const Sweep& sw) {
  const double cap = sw.config.experiment.capacities_kw.front();
  const auto& sig = sw.config.experiment.sigmas;
  const double s_lo = *std::min_element(sig.begin(), sig.end());
  const double s_hi = *std::max_element(sig.begin(), sig.end());
  const auto& off = find(sw, StrategyKind::Offline, cap)->result.total;
  const auto& r0 = find(sw, StrategyKind::Rtsc, cap, s_lo)->result.total;
  const auto& r20 = find(sw, StrategyKind::Rtsc, cap, s_hi)->result.total;
  const auto& llf = find(sw, StrategyKind::Llf, cap)->result.total;
  const auto& edf = find(sw, StrategyKind::Edf, cap)->result.total;
  const auto& unc = find(sw, StrategyKind::Uncontrolled, cap)->result.total;
  // Equal demand charges from identical peaks may differ in the last digits.
  auto le = [](double a, double b) { return a <= b + 1e-6 * std::max(1.0, std::abs(b)); };
  const double worst_baseline_dc = std::min({llf.demand_charge, edf.demand_charge, unc.demand_charge});
  const bool dc_ok = le(off.demand_charge, r0.demand_charge) && le(r0.demand_charge, r20.demand_charge) &&
                     r20.demand_charge < worst_baseline_dc;
  const double best_baseline = std::max(llf.profit, edf.profit);
  const bool profit_ok = le(r0.profit, off.profit) && le(r20.profit, r0.profit) && le(best_baseline, r20.profit) &&
                         le(unc.profit, best_baseline);
  const bool peak_ok = r0.peak_load_kw < unc.peak_load_kw && r20.peak_load_kw < unc.peak_load_kw;
  report(6, dc_ok && profit_ok && peak_ok,
         fmt("demand charge offline %.2f, rtsc s%g %.2f, rtsc s%g %.2f, baselines min %.2f [%s]; profit offline "
             "%.2f, rtsc %.2f / %.2f, llf %.2f, edf %.2f, uncontrolled %.2f [%s]; peak rtsc %.2f / %.2f vs "
             "uncontrolled %.2f kW [%s]",
             off.demand_charge, s_lo, r0.demand_charge, s_hi, r20.demand_charge, worst_baseline_dc,
             dc_ok ? "ok" : "no", off.profit, r0.profit, r20.profit, llf.profit, edf.profit, unc.profit,
             profit_ok ? "ok" : "no", r0.peak_load_kw, r20.peak_load_kw, unc.peak_load_kw, peak_ok ? "ok" : "no"));
}

// ---------------------------------------------------------------------------

void realtime_budget(const RunConfig& tc1, const Sweep& sw) {
  // Every charger occupied, ten departure scenarios each, plus the future model.
  const auto model = default_daily_model();
  std::mt19937_64 rng(5);
  std::vector<double> times;
  for (int t : {26, 32, 38, 44, 50, 56, 62}) {
    std::vector<RtscEv> evs;
    for (int k = 0; k < tc1.facility.num_evse; ++k) {
      RtscEv ev;
      ev.ev.index = static_cast<std::size_t>(k);
      ev.ev.session.id = "ev" + std::to_string(k);
      ev.ev.session.arrival_slot = std::max(0, t - 1 - k % 12);
      ev.ev.session.departure_slot = std::min(96, t + 12 + (k * 7) % 40);
      ev.ev.session.energy_kwh = 8.0 + (k % 9) * 2.0;
      ev.ev.delivered_kwh = 0.5 * (k % 4);
      const auto draws = sample_departure_scenarios(ev.ev.session.departure_slot, t, 10, 20.0, rng, tc1.grid);
      ev.scenarios = {draws, std::vector<double>(draws.size(), 0.1)};
      ev.scenarios = prune_scenarios(ev.scenarios, t, tc1.grid);
      ev.demand_estimate_kwh = *ev.ev.session.energy_kwh;
      ev.log_domain_kwh = std::min(ev.demand_estimate_kwh,
                                   tc1.grid.to_kwh(tc1.facility.evse_max_kw) * (96 - ev.ev.session.arrival_slot));
      evs.push_back(std::move(ev));
    }
    const auto future = build_future_model(model, 0, t, tc1.rtsc.kappa, tc1.grid);
    const PlanContext ctx{tc1.facility, tc1.grid, tc1.weights, 40.0, tc1.rtsc.log_model, tc1.rtsc.solve};
    const auto start = Clock::now();
    const auto plan = plan_step(t, evs, future, ctx);
    times.push_back(seconds_since(start));
  }
  std::vector<double> sweep_times;
  for (const auto& r : sw.runs) {
    sweep_times.insert(sweep_times.end(), r.result.solve_times.begin(), r.result.solve_times.end());
  }
  const double full_lot = median(times);
  const double observed = median(sweep_times);
  report(7, full_lot < 2.0 && observed < 2.0,
         fmt("57 occupied chargers with future model: median %.3f s, max %.3f s per step; sweep median %.4f s over "
             "%zu steps",
             full_lot, *std::max_element(times.begin(), times.end()), observed, sweep_times.size()));
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = buf.str();
  }
  return files;
}

void determinism(const fs::path& config_path) {
  RunConfig config = load_run_config(config_path);
  config.trace.days = 3;
  config.experiment.sigmas = {0.0, 20.0};
  config.experiment.capacities_kw = {160.0, 100.0};
  const auto trace = load_trace(config);
  const fs::path root = fs::temp_directory_path() / ("smartcharge_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto first = run_compare(config, trace, root / "a", 1);
  const auto second = run_compare(config, load_trace(config), root / "b", 2);
  const auto a = read_tree(root / "a");
  const auto b = read_tree(root / "b");
  fs::remove_all(root);
  const bool same = first.all_ok() && second.all_ok() && !a.empty() && a == b;
  report(8, same,
         fmt("%zu output files from two compare runs (1 and 2 worker threads) are %s", a.size(),
             same ? "byte-identical" : "different"));
}

// ---------------------------------------------------------------------------

void calibration_round_trip() {
  const DailyModel model = default_daily_model();
  GenerationOptions options;
  options.scale = 20.0;
  const int days = 7 * 70;
  const auto trace = generate_synthetic_trace(model, days, 100000, 9, options);
  const DailyModel back = calibrate_daily_model(trace);
  int bins = 0, within = 0;
  double worst = 0.0;
  for (int wd = 0; wd < kWeekdays; ++wd) {
    for (int b = 0; b < kArrivalBins; ++b) {
      const auto& truth = model.bin(wd, b);
      const auto& got = back.bin(wd, b);
      if (got.expected_count * (days / 7) < 1000.0) continue;
      ++bins;
      const double errs[] = {std::abs(got.expected_count / options.scale - truth.expected_count) / truth.expected_count,
                             std::abs(got.mean_stay_slots - truth.mean_stay_slots) / truth.mean_stay_slots,
                             std::abs(got.mean_energy_kwh - truth.mean_energy_kwh) / truth.mean_energy_kwh};
      const double e = *std::max_element(std::begin(errs), std::end(errs));
      worst = std::max(worst, e);
      if (e <= 0.10) ++within;
    }
  }
  report(9, bins > 0 && within == bins,
         fmt("%d/%d bins with >= 1000 sessions recovered within 10%% (worst %.2f%%) from %zu sessions", within, bins,
             100.0 * worst, trace.sessions.size()));
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const fs::path configs = fs::path(SMARTCHARGE_SOURCE_DIR) / "configs";
  try {
    solver_oracle();
    const RunConfig tc1 = load_run_config(configs / "testcase1.toml");
    degenerate_equivalence(tc1);
    std::cout << "running test case 1 sweep..." << std::endl;
    const Sweep sweep1 = run_sweep(configs / "testcase1.toml");
    std::cout << "running test case 2 sweep..." << std::endl;
    const Sweep sweep2 = run_sweep(configs / "testcase2.toml");
    feasibility({&sweep1, &sweep2});
    offline_dominance({&sweep1, &sweep2});
    test_case_1(sweep1);
    test_case_2(sweep2);
    realtime_budget(tc1, sweep1);
    determinism(configs / "testcase1.toml");
    calibration_round_trip();
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  int failed = 0;
  std::cout << "\nsummary\n";
  for (const auto& v : verdicts) {
    std::cout << "  criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << '\n';
    if (!v.pass) ++failed;
  }
  std::cout << (verdicts.size() - failed) << "/" << verdicts.size() << " criteria pass" << std::endl;
  return strict && failed > 0 ? 1 : 0;
}
