// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package's __init__.py.
#include <optional>
#include <sstream>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "smartcharge/experiment.hpp"

namespace py = pybind11;
using namespace smartcharge;

namespace {

std::string simulate_json(const std::string& config_path, const std::string& strategy,
                          std::optional<double> capacity_kw, std::optional<double> sigma_slots,
                          std::optional<std::uint64_t> seed, std::optional<int> days) {
  RunConfig config = load_run_config(config_path);
  if (days) config.trace.days = *days;
  const SessionTrace trace = load_trace(config);
  Cell cell;
  cell.strategy = parse_strategy(strategy);
  cell.capacity_kw = capacity_kw.value_or(config.experiment.capacities_kw.front());
  if (cell.strategy == StrategyKind::Rtsc) {
    cell.sigma_slots = sigma_slots.value_or(config.experiment.sigmas.front());
    cell.seed = seed.value_or(config.experiment.seeds.front());
  }
  const auto result = run_cell(cell, config, trace, planning_model(config, trace));
  auto j = metrics_json(result);
  j["cell"] = cell.label();
  j["facility_load_kw"] = result.facility_load_kw;
  j["sessions"] = trace.sessions.size();
  return j.dump();
}

std::string compare_json(const std::string& config_path, const std::string& out_dir, int jobs,
                         std::optional<int> days) {
  RunConfig config = load_run_config(config_path);
  if (days) config.trace.days = *days;
  const auto report = run_compare(config, load_trace(config), out_dir, jobs);
  auto rows = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json row{{"label", c.cell.label()}, {"ok", c.ok}};
    if (c.ok) {
      row["total"] = to_json(c.total);
      row["realized_objective"] = c.realized_objective;
    } else {
      row["error"] = c.error;
    }
    rows.push_back(std::move(row));
  }
  return rows.dump();
}

std::string generate_trace_csv(int days, std::uint64_t seed, int num_evse, double scale, bool weekdays_only,
                               std::optional<std::string> model_path) {
  const DailyModel model = model_path ? read_daily_model(*model_path) : default_daily_model();
  GenerationOptions options;
  options.scale = scale;
  options.weekdays_only = weekdays_only;
  std::ostringstream out;
  write_trace(generate_synthetic_trace(model, days, num_evse, seed, options), out);
  return out.str();
}

std::string calibrate_csv(const std::string& csv, int num_evse) {
  std::istringstream in(csv);
  return to_json(calibrate_daily_model(parse_trace(in, num_evse))).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EV charging facility scheduling and simulation";

  py::register_exception<Error>(m, "SmartChargeError", PyExc_ValueError);

  m.def("strategies", [] {
    return std::vector<std::string>{"offline", "rtsc", "uncontrolled", "llf", "edf"};
  });
  m.def("default_model_json", [] { return to_json(default_daily_model()).dump(); });
  m.def("generate_trace_csv", &generate_trace_csv, py::arg("days"), py::arg("seed"), py::arg("num_evse") = 57,
        py::arg("scale") = 1.0, py::arg("weekdays_only") = false, py::arg("model_path") = py::none(),
        py::call_guard<py::gil_scoped_release>());
  m.def("calibrate_csv", &calibrate_csv, py::arg("csv"), py::arg("num_evse") = 57,
        py::call_guard<py::gil_scoped_release>());
  m.def("simulate_json", &simulate_json, py::arg("config_path"), py::arg("strategy"),
        py::arg("capacity_kw") = py::none(), py::arg("sigma_slots") = py::none(), py::arg("seed") = py::none(),
        py::arg("days") = py::none(), py::call_guard<py::gil_scoped_release>());
  m.def("compare_json", &compare_json, py::arg("config_path"), py::arg("out_dir"), py::arg("jobs") = 1,
        py::arg("days") = py::none(), py::call_guard<py::gil_scoped_release>());
}
