#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "fixtures.hpp"
#include "smartcharge/experiment.hpp"

using namespace smartcharge;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SMARTCHARGE_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("smartcharge_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void check_config_error(const std::string& text, const std::string& fragment) {
  try {
    (void)parse_run_config(text);
    FAIL("expected a config error mentioning " << fragment);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("shipped test case configurations load") {
  const auto tc1 = load_run_config(kConfigs / "testcase1.toml");
  const auto reference = testing::tou_facility(160.0);
  CHECK(tc1.facility.tou_price == reference.tou_price);
  CHECK(tc1.facility.num_evse == 57);
  CHECK(tc1.facility.evse_max_kw == 6.6);
  CHECK(tc1.facility.demand_charge_rate == 0.0);
  CHECK(tc1.weights_preset == "u1");
  CHECK(tc1.experiment.capacities_kw == std::vector<double>{160, 140, 120, 100});
  CHECK(tc1.experiment.sigmas == std::vector<double>{0, 5, 10, 20});
  CHECK(tc1.trace.generation.weekdays_only);
  CHECK(expand_cells(tc1.experiment).size() == 32);

  const auto tc2 = load_run_config(kConfigs / "testcase2.toml");
  CHECK(tc2.facility.retail(0) == 0.30);
  CHECK(tc2.facility.demand_charge_rate == 18.0);
  CHECK(tc2.weights.demand_charge == 10.0);
  CHECK(tc2.weights.profit == 10.0);
  CHECK(expand_cells(tc2.experiment).size() == 8);
}

TEST_CASE("empty configuration gives documented defaults") {
  const auto rc = parse_run_config("");
  CHECK(rc.grid.slots_per_day == 96);
  CHECK(rc.facility.transformer_kw == 160.0);
  CHECK(rc.experiment.capacities_kw == std::vector<double>{160.0});
  CHECK(rc.rtsc.log_model == LogModel::Exact);
  CHECK(rc.planning_model == PlanningModelSource::Auto);
}

TEST_CASE("tariff periods overwrite half-open slot ranges") {
  const auto rc = parse_run_config(R"(
[tariff]
tou_price = 0.1
tou_periods = [{ start_slot = 10, end_slot = 12, price = 0.5 }]
)");
  CHECK(rc.facility.tou(9) == 0.1);
  CHECK(rc.facility.tou(10) == 0.5);
  CHECK(rc.facility.tou(11) == 0.5);
  CHECK(rc.facility.tou(12) == 0.1);
}

TEST_CASE("invalid configurations are rejected with a reason") {
  check_config_error("[facility]\nturbo = 1\n", "unknown key 'facility.turbo'");
  check_config_error("[nonsense]\n", "unknown key 'nonsense'");
  check_config_error("[weights]\npreset = \"u1\"\nprofit = 2\n", "only allowed with preset");
  check_config_error("[weights]\npreset = \"u9\"\n", "unknown weights preset");
  check_config_error("[rtsc]\nkappa = 1.5\n", "kappa");
  check_config_error("[rtsc]\nlog_model = \"spline\"\n", "log_model");
  check_config_error("[tariff]\ntou_price = [0.1, 0.2]\n", "needs 96 entries");
  check_config_error("[tariff]\ntou_periods = [{ start_slot = 5, end_slot = 5, price = 1 }]\n", "invalid slot range");
  check_config_error("[experiment]\nstrategies = [\"magic\"]\n", "magic");
  check_config_error("[experiment]\ncapacities_kw = [0]\n", "capacities_kw");
  check_config_error("[grid]\nslot_minutes = 7\n", "slot_minutes");
  check_config_error("[facility\n", "line 1");
}

TEST_CASE("custom weights are read individually") {
  const auto rc = parse_run_config("[weights]\npreset = \"custom\"\nowner_utility = 2\nenergy_deficit = 0.5\n");
  CHECK(rc.weights.owner_utility == 2.0);
  CHECK(rc.weights.energy_deficit == 0.5);
  CHECK(rc.weights.profit == 0.0);
}

TEST_CASE("cell expansion runs deterministic strategies once per capacity") {
  ExperimentGrid grid;
  grid.strategies = {StrategyKind::Rtsc, StrategyKind::Llf};
  grid.sigmas = {0, 5};
  grid.capacities_kw = {160, 100};
  grid.seeds = {1, 2, 3};
  const auto cells = expand_cells(grid);
  CHECK(cells.size() == 2 * 2 * 3 + 2);
  CHECK(cells.front().label() == "rtsc_s0_c160_r1");
  CHECK(cells.back().label() == "llf_c100");
}

TEST_CASE("shipped default model file matches the built-in profile") {
  const auto from_file = read_daily_model(fs::path(SMARTCHARGE_DATA_DIR) / "default_model.json");
  CHECK(to_json(from_file) == to_json(default_daily_model()));
}

TEST_CASE("weekday-only generation leaves weekends empty") {
  GenerationOptions options;
  options.weekdays_only = true;
  const auto trace = generate_synthetic_trace(default_daily_model(), 14, 57, 3, options);
  CHECK(!trace.sessions.empty());
  for (const auto& s : trace.sessions) CHECK(weekday_of(s.day) < 5);
}

TEST_CASE("synthetic trace from a configuration is reproducible") {
  auto rc = parse_run_config("[trace]\ndays = 3\nseed = 11\n");
  const auto a = load_trace(rc);
  const auto b = load_trace(rc);
  std::ostringstream sa, sb;
  write_trace(a, sa);
  write_trace(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.days == 3);
}

TEST_CASE("compare writes per-cell exports and a summary") {
  TempDir dir("compare");
  auto rc = parse_run_config(R"(
[tariff]
tou_price = 0.2
[experiment]
strategies = ["llf", "rtsc"]
sigmas = [5]
seeds = [3]
[trace]
days = 1
)");
  const auto trace = load_trace(rc);
  const auto report = run_compare(rc, trace, dir.path, 2);
  REQUIRE(report.all_ok());
  CHECK(fs::exists(dir.path / "cells" / "llf_c160.json"));
  CHECK(fs::exists(dir.path / "loads" / "rtsc_s5_c160_r3.csv"));
  const auto summary = slurp(dir.path / "summary.csv");
  CHECK(summary.rfind(std::string(kSummaryCsvHeader) + "\nllf_c160,llf,0,160,0,", 0) == 0);
  const auto json = nlohmann::json::parse(slurp(dir.path / "cells" / "rtsc_s5_c160_r3.json"));
  CHECK(json["cell"]["seed"] == 3);
  CHECK(json["strategy"] == "rtsc");
}
