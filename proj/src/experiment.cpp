#include "smartcharge/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <thread>

namespace smartcharge {

namespace {

std::string compact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write '" + path.string() + "'");
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

std::string Cell::label() const {
  std::string out = to_string(strategy);
  if (strategy == StrategyKind::Rtsc) out += "_s" + compact(sigma_slots);
  out += "_c" + compact(capacity_kw);
  if (strategy == StrategyKind::Rtsc) out += "_r" + std::to_string(seed);
  return out;
}

std::vector<Cell> expand_cells(const ExperimentGrid& grid) {
  std::vector<Cell> cells;
  for (auto kind : grid.strategies) {
    for (double cap : grid.capacities_kw) {
      if (kind != StrategyKind::Rtsc) {
        cells.push_back({kind, 0.0, cap, 0});
        continue;
      }
      for (double sigma : grid.sigmas) {
        for (auto seed : grid.seeds) cells.push_back({kind, sigma, cap, seed});
      }
    }
  }
  return cells;
}

SimulationResult run_cell(const Cell& cell, const RunConfig& config, const SessionTrace& trace,
                          const DailyModel& model) {
  FacilityConfig facility = config.facility;
  facility.transformer_kw = cell.capacity_kw;
  SimulationOptions options;
  options.rtsc = config.rtsc;
  options.rtsc.noise_stddev_slots = cell.sigma_slots;
  options.rtsc.seed = cell.seed;
  options.offline = config.offline;
  options.model = model;
  return run_simulation(trace, cell.strategy, facility, config.weights, options, config.grid);
}

bool CompareReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellOutcome& c) { return c.ok; });
}

void write_cell_outputs(const Cell& cell, const SimulationResult& result, const std::filesystem::path& out_dir,
                        const TimeGrid& grid) {
  std::filesystem::create_directories(out_dir / "cells");
  std::filesystem::create_directories(out_dir / "loads");
  auto j = metrics_json(result);
  j["cell"] = {{"label", cell.label()},
               {"strategy", to_string(cell.strategy)},
               {"sigma_slots", cell.sigma_slots},
               {"capacity_kw", cell.capacity_kw},
               {"seed", cell.seed}};
  open_out(out_dir / "cells" / (cell.label() + ".json")) << j.dump(2) << '\n';
  auto csv = open_out(out_dir / "loads" / (cell.label() + ".csv"));
  csv << kLoadCsvHeader << '\n';
  write_load_rows(result, csv, grid);
}

CompareReport run_compare(const RunConfig& config, const SessionTrace& trace, const std::filesystem::path& out_dir,
                          int jobs) {
  const auto cells = expand_cells(config.experiment);
  const DailyModel model = planning_model(config, trace);
  CompareReport report;
  report.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      auto& outcome = report.cells[k];
      outcome.cell = cells[k];
      try {
        const auto result = run_cell(cells[k], config, trace, model);
        write_cell_outputs(cells[k], result, out_dir, config.grid);
        outcome.total = result.total;
        outcome.realized_objective = result.realized_objective;
        outcome.solve_times = result.solve_times;
        outcome.ok = true;
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  std::filesystem::create_directories(out_dir);
  auto summary = open_out(out_dir / "summary.csv");
  summary << kSummaryCsvHeader << '\n';
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    const auto& m = c.total;
    summary << c.cell.label() << ',' << to_string(c.cell.strategy) << ',' << compact(c.cell.sigma_slots) << ','
            << compact(c.cell.capacity_kw) << ',' << c.cell.seed << ',' << compact(m.energy_delivered_kwh) << ','
            << compact(m.tou_cost) << ',' << compact(m.cost_per_kwh) << ',' << compact(m.demand_charge) << ','
            << compact(m.revenue) << ',' << compact(m.profit) << ',' << compact(m.peak_load_kw) << ','
            << compact(m.unmet_demand_kwh) << ',' << compact(c.realized_objective) << '\n';
  }
  return report;
}

void print_ranking(const CompareReport& report, std::ostream& out) {
  std::vector<const CellOutcome*> ok;
  for (const auto& c : report.cells) {
    if (c.ok) ok.push_back(&c);
  }
  std::stable_sort(ok.begin(), ok.end(), [](const CellOutcome* a, const CellOutcome* b) {
    if (a->total.profit != b->total.profit) return a->total.profit > b->total.profit;
    return a->realized_objective > b->realized_objective;
  });
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-26s %12s %10s %10s %10s %12s %14s\n", "rank", "cell", "energy_kwh",
                "$/kWh", "demand_$", "profit_$", "objective", "median_solve_s");
  out << line;
  int rank = 1;
  for (const auto* c : ok) {
    std::snprintf(line, sizeof line, "%-4d %-26s %12.2f %10.4f %10.2f %10.2f %12.3f %14.4f\n", rank++,
                  c->cell.label().c_str(), c->total.energy_delivered_kwh, c->total.cost_per_kwh,
                  c->total.demand_charge, c->total.profit, c->realized_objective, median(c->solve_times));
    out << line;
  }
  for (const auto& c : report.cells) {
    if (!c.ok) out << "FAILED " << c.cell.label() << ": " << c.error << '\n';
  }
}

}  // namespace smartcharge
