#include "smartcharge/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace smartcharge {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::InvalidConfig, "config: " + what); }

void only_keys(const toml::table& table, const std::string& where, std::initializer_list<std::string_view> allowed) {
  const std::set<std::string_view> ok(allowed);
  for (const auto& [key, node] : table) {
    if (!ok.contains(key.str())) {
      fail("unknown key '" + (where.empty() ? "" : where + ".") + std::string(key.str()) + "'");
    }
  }
}

const toml::table* section(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (node == nullptr) return nullptr;
  const auto* table = node->as_table();
  if (table == nullptr) fail("'" + std::string(name) + "' must be a table");
  return table;
}

double number(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  fail("'" + key + "' must be a number");
}

std::optional<double> opt_number(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  return number(*node, where + "." + std::string(key));
}

std::optional<std::int64_t> opt_int(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value_exact<std::int64_t>()) return *v;
  fail("'" + where + "." + std::string(key) + "' must be an integer");
}

std::optional<bool> opt_bool(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value_exact<bool>()) return *v;
  fail("'" + where + "." + std::string(key) + "' must be true or false");
}

std::optional<std::string> opt_string(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value_exact<std::string>()) return *v;
  fail("'" + where + "." + std::string(key) + "' must be a string");
}

const toml::array* opt_array(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (node == nullptr) return nullptr;
  const auto* arr = node->as_array();
  if (arr == nullptr) fail("'" + where + "." + std::string(key) + "' must be an array");
  return arr;
}

std::vector<double> numbers(const toml::array& arr, const std::string& key) {
  std::vector<double> out;
  for (const auto& n : arr) out.push_back(number(n, key));
  return out;
}

/// A per-slot profile given as one number or one entry per slot.
std::optional<std::vector<double>> profile(const toml::table& t, std::string_view key, const std::string& where,
                                           int slots) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  const std::string name = where + "." + std::string(key);
  if (const auto* arr = node->as_array()) {
    auto v = numbers(*arr, name);
    if (static_cast<int>(v.size()) != slots) {
      fail("'" + name + "' needs " + std::to_string(slots) + " entries, got " + std::to_string(v.size()));
    }
    return v;
  }
  return std::vector<double>(static_cast<std::size_t>(slots), number(*node, name));
}

/// [[tariff.<key>]] entries {start_slot, end_slot, price} overwrite slots [start, end).
void apply_periods(const toml::table& t, std::string_view key, const std::string& where, std::vector<double>& prices) {
  const auto* arr = opt_array(t, key, where);
  if (arr == nullptr) return;
  const std::string name = where + "." + std::string(key);
  for (const auto& entry : *arr) {
    const auto* p = entry.as_table();
    if (p == nullptr) fail("'" + name + "' entries must be tables");
    only_keys(*p, name, {"start_slot", "end_slot", "price"});
    const auto start = opt_int(*p, "start_slot", name);
    const auto end = opt_int(*p, "end_slot", name);
    const auto price = opt_number(*p, "price", name);
    if (!start || !end || !price) fail("'" + name + "' entries need start_slot, end_slot and price");
    if (*start < 0 || *end > static_cast<std::int64_t>(prices.size()) || *start >= *end) {
      fail("'" + name + "' has an invalid slot range");
    }
    for (auto s = *start; s < *end; ++s) prices[static_cast<std::size_t>(s)] = *price;
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_facility(const toml::table& t, RunConfig& rc) {
  const std::string w = "facility";
  only_keys(t, w, {"num_evse", "evse_max_kw", "transformer_kw", "base_load_kw"});
  if (auto v = opt_int(t, "num_evse", w)) rc.facility.num_evse = static_cast<int>(*v);
  if (auto v = opt_number(t, "evse_max_kw", w)) rc.facility.evse_max_kw = *v;
  if (auto v = opt_number(t, "transformer_kw", w)) rc.facility.transformer_kw = *v;
  if (auto v = profile(t, "base_load_kw", w, rc.grid.slots_per_day)) rc.facility.base_load_kw = std::move(*v);
}

void parse_tariff(const toml::table& t, RunConfig& rc) {
  const std::string w = "tariff";
  only_keys(t, w, {"retail_price", "tou_price", "demand_charge_rate", "tou_periods", "retail_periods"});
  const int slots = rc.grid.slots_per_day;
  if (auto v = profile(t, "retail_price", w, slots)) rc.facility.retail_price = std::move(*v);
  if (auto v = profile(t, "tou_price", w, slots)) rc.facility.tou_price = std::move(*v);
  apply_periods(t, "retail_periods", w, rc.facility.retail_price);
  apply_periods(t, "tou_periods", w, rc.facility.tou_price);
  if (auto v = opt_number(t, "demand_charge_rate", w)) rc.facility.demand_charge_rate = *v;
}

void parse_weights(const toml::table& t, RunConfig& rc) {
  const std::string w = "weights";
  only_keys(t, w,
            {"preset", "owner_utility", "quick_charging", "profit", "demand_charge", "load_flattening",
             "equal_sharing", "energy_deficit"});
  rc.weights_preset = opt_string(t, "preset", w).value_or("custom");
  const bool custom = rc.weights_preset == "custom";
  if (rc.weights_preset == "u1") {
    rc.weights = ObjectiveWeights::u1();
  } else if (rc.weights_preset == "u2") {
    rc.weights = ObjectiveWeights::u2();
  } else if (custom) {
    rc.weights = {};
  } else {
    fail("unknown weights preset '" + rc.weights_preset + "'");
  }
  const std::pair<std::string_view, double ObjectiveWeights::*> fields[] = {
      {"owner_utility", &ObjectiveWeights::owner_utility},   {"quick_charging", &ObjectiveWeights::quick_charging},
      {"profit", &ObjectiveWeights::profit},                 {"demand_charge", &ObjectiveWeights::demand_charge},
      {"load_flattening", &ObjectiveWeights::load_flattening}, {"equal_sharing", &ObjectiveWeights::equal_sharing},
      {"energy_deficit", &ObjectiveWeights::energy_deficit}};
  for (const auto& [key, member] : fields) {
    if (auto v = opt_number(t, key, w)) {
      if (!custom) fail("weights." + std::string(key) + " is only allowed with preset = \"custom\"");
      rc.weights.*member = *v;
    }
  }
}

void parse_experiment(const toml::table& t, RunConfig& rc) {
  const std::string w = "experiment";
  only_keys(t, w, {"strategies", "sigmas", "capacities_kw", "seeds"});
  if (const auto* arr = opt_array(t, "strategies", w)) {
    rc.experiment.strategies.clear();
    for (const auto& n : *arr) {
      auto name = n.value_exact<std::string>();
      if (!name) fail("experiment.strategies must hold strings");
      rc.experiment.strategies.push_back(parse_strategy(*name));
    }
    if (rc.experiment.strategies.empty()) fail("experiment.strategies is empty");
  }
  if (const auto* arr = opt_array(t, "sigmas", w)) rc.experiment.sigmas = numbers(*arr, w + ".sigmas");
  if (const auto* arr = opt_array(t, "capacities_kw", w)) {
    rc.experiment.capacities_kw = numbers(*arr, w + ".capacities_kw");
  }
  if (const auto* arr = opt_array(t, "seeds", w)) {
    rc.experiment.seeds.clear();
    for (const auto& n : *arr) {
      auto v = n.value_exact<std::int64_t>();
      if (!v || *v < 0) fail("experiment.seeds must hold nonnegative integers");
      rc.experiment.seeds.push_back(static_cast<std::uint64_t>(*v));
    }
  }
  if (rc.experiment.sigmas.empty() || rc.experiment.seeds.empty()) fail("experiment sweeps must not be empty");
  for (double s : rc.experiment.sigmas) {
    if (!(s >= 0.0)) fail("experiment.sigmas must be >= 0");
  }
  for (double c : rc.experiment.capacities_kw) {
    if (!(c > 0.0)) fail("experiment.capacities_kw must be > 0");
  }
}

void parse_rtsc(const toml::table& t, RunConfig& rc, const std::filesystem::path& base) {
  const std::string w = "rtsc";
  only_keys(t, w, {"scenarios", "kappa", "future_model", "input_mode", "log_model", "planning_model"});
  if (auto v = opt_int(t, "scenarios", w)) {
    if (*v < 1) fail("rtsc.scenarios must be >= 1");
    rc.rtsc.scenarios = static_cast<int>(*v);
  }
  if (auto v = opt_number(t, "kappa", w)) {
    if (*v < 0.0 || *v > 1.0) fail("rtsc.kappa must lie in [0, 1]");
    rc.rtsc.kappa = *v;
  }
  if (auto v = opt_bool(t, "future_model", w)) rc.rtsc.future_model = *v;
  if (auto v = opt_string(t, "input_mode", w)) {
    if (*v == "declared") {
      rc.rtsc.input_mode = InputMode::Declared;
    } else if (*v == "none") {
      rc.rtsc.input_mode = InputMode::NoInput;
    } else {
      fail("rtsc.input_mode must be \"declared\" or \"none\"");
    }
  }
  if (auto v = opt_string(t, "log_model", w)) {
    if (*v == "exact") {
      rc.rtsc.log_model = rc.offline.log_model = LogModel::Exact;
    } else if (*v == "tangent_cuts") {
      rc.rtsc.log_model = rc.offline.log_model = LogModel::TangentCuts;
    } else {
      fail("rtsc.log_model must be \"exact\" or \"tangent_cuts\"");
    }
  }
  if (auto v = opt_string(t, "planning_model", w)) {
    if (*v == "auto") {
      rc.planning_model = PlanningModelSource::Auto;
    } else if (*v == "default") {
      rc.planning_model = PlanningModelSource::Default;
    } else if (*v == "calibrate") {
      rc.planning_model = PlanningModelSource::Calibrate;
    } else {
      rc.planning_model = PlanningModelSource::File;
      rc.planning_model_path = resolve(base, *v);
    }
  }
}

void parse_trace(const toml::table& t, RunConfig& rc, const std::filesystem::path& base) {
  const std::string w = "trace";
  only_keys(t, w, {"path", "model", "days", "seed", "scale", "dispersion", "min_energy_kwh", "weekdays_only"});
  if (auto v = opt_string(t, "path", w)) rc.trace.path = resolve(base, *v);
  if (auto v = opt_string(t, "model", w)) {
    if (*v != "default") rc.trace.model_path = resolve(base, *v);
  }
  if (auto v = opt_int(t, "days", w)) {
    if (*v < 0) fail("trace.days must be >= 0");
    rc.trace.days = static_cast<int>(*v);
  }
  if (auto v = opt_int(t, "seed", w)) rc.trace.seed = static_cast<std::uint64_t>(*v);
  if (auto v = opt_number(t, "scale", w)) rc.trace.generation.scale = *v;
  if (auto v = opt_number(t, "dispersion", w)) rc.trace.generation.dispersion = *v;
  if (auto v = opt_number(t, "min_energy_kwh", w)) rc.trace.generation.min_energy_kwh = *v;
  if (auto v = opt_bool(t, "weekdays_only", w)) rc.trace.generation.weekdays_only = *v;
}

void parse_solver(const toml::table& t, RunConfig& rc) {
  const std::string w = "solver";
  only_keys(t, w, {"opt_tol", "feas_tol", "max_iters", "offline_opt_tol", "offline_feas_tol"});
  if (auto v = opt_number(t, "opt_tol", w)) rc.rtsc.solve.opt_tol = *v;
  if (auto v = opt_number(t, "feas_tol", w)) rc.rtsc.solve.feas_tol = *v;
  if (auto v = opt_int(t, "max_iters", w)) rc.rtsc.solve.max_iters = rc.offline.solve.max_iters = static_cast<int>(*v);
  if (auto v = opt_number(t, "offline_opt_tol", w)) rc.offline.solve.opt_tol = *v;
  if (auto v = opt_number(t, "offline_feas_tol", w)) rc.offline.solve.feas_tol = *v;
  for (double tol : {rc.rtsc.solve.opt_tol, rc.rtsc.solve.feas_tol, rc.offline.solve.opt_tol, rc.offline.solve.feas_tol}) {
    if (!(tol > 0.0)) fail("solver tolerances must be > 0");
  }
  if (rc.rtsc.solve.max_iters < 1) fail("solver.max_iters must be >= 1");
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << e.source().begin.line << ": " << e.description();
    fail(msg.str());
  }
  only_keys(root, "", {"facility", "grid", "tariff", "weights", "experiment", "rtsc", "trace", "solver"});

  RunConfig rc;
  if (const auto* t = section(root, "grid")) {
    only_keys(*t, "grid", {"slot_minutes"});
    if (auto v = opt_number(*t, "slot_minutes", "grid")) {
      if (!(*v > 0.0) || std::fmod(1440.0, *v) != 0.0) fail("grid.slot_minutes must divide a day");
      rc.grid.slot_hours = *v / 60.0;
      rc.grid.slots_per_day = static_cast<int>(1440.0 / *v);
      rc.grid.horizon = rc.grid.slots_per_day;
    }
  }
  const auto slots = static_cast<std::size_t>(rc.grid.slots_per_day);
  rc.facility.retail_price.assign(slots, 0.0);
  rc.facility.tou_price.assign(slots, 0.0);

  if (const auto* t = section(root, "facility")) parse_facility(*t, rc);
  if (const auto* t = section(root, "tariff")) parse_tariff(*t, rc);
  if (const auto* t = section(root, "weights")) parse_weights(*t, rc);
  if (const auto* t = section(root, "experiment")) parse_experiment(*t, rc);
  if (const auto* t = section(root, "rtsc")) parse_rtsc(*t, rc, base_dir);
  if (const auto* t = section(root, "trace")) parse_trace(*t, rc, base_dir);
  if (const auto* t = section(root, "solver")) parse_solver(*t, rc);

  if (rc.experiment.capacities_kw.empty()) rc.experiment.capacities_kw = {rc.facility.transformer_kw};
  rc.grid.validate();
  rc.facility.validate(rc.grid);
  rc.weights.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

SessionTrace load_trace(const RunConfig& config) {
  if (config.trace.path) return read_trace(*config.trace.path, config.facility.num_evse, config.grid);
  const DailyModel model = config.trace.model_path ? read_daily_model(*config.trace.model_path) : default_daily_model();
  return generate_synthetic_trace(model, config.trace.days, config.facility.num_evse, config.trace.seed,
                                  config.trace.generation, config.grid);
}

DailyModel planning_model(const RunConfig& config, const SessionTrace& trace) {
  switch (config.planning_model) {
    case PlanningModelSource::Default: return default_daily_model();
    case PlanningModelSource::Calibrate: return calibrate_daily_model(trace, config.grid);
    case PlanningModelSource::File: return read_daily_model(*config.planning_model_path);
    case PlanningModelSource::Auto: break;
  }
  if (config.trace.path) return calibrate_daily_model(trace, config.grid);
  return config.trace.model_path ? read_daily_model(*config.trace.model_path) : default_daily_model();
}

}  // namespace smartcharge
