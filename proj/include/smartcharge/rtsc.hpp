#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smartcharge/program_builder.hpp"
#include "smartcharge/strategy.hpp"
#include "smartcharge/traces.hpp"

namespace smartcharge {

/// What drivers tell the facility on arrival.
enum class InputMode {
  Declared,  // departure and demand are reported (departures perturbed by scenario noise)
  NoInput,   // both are estimated from the daily model
};

/// Candidate departures for one EV with their current weights.
struct ScenarioSet {
  std::vector<int> departures;  // slot of day, exclusive
  std::vector<double> weights;

  double total_weight() const;
};

struct RtscOptions {
  int scenarios = 10;
  double noise_stddev_slots = 0.0;
  double kappa = 0.5;
  bool future_model = true;
  InputMode input_mode = InputMode::Declared;
  LogModel log_model = LogModel::Exact;
  SolveOptions solve{};
  std::uint64_t seed = 0;
};

/// Departure the scenarios are centred on: the true departure when declared,
/// otherwise arrival plus the bin mean stay.
int reference_departure(const ChargingSession& session, const DailyModel& model, InputMode mode,
                        const TimeGrid& grid = {});

/// n draws from Normal(reference, stddev) rounded to a slot and clamped to
/// [current_slot + 1, slots_per_day].
std::vector<int> sample_departure_scenarios(int reference, int current_slot, int n, double stddev_slots,
                                            std::mt19937_64& rng, const TimeGrid& grid = {});

/// Zeroes scenarios that have elapsed while the EV is still plugged in at slot t,
/// and spreads the weight uniformly over the survivors. With no survivors a
/// single end-of-day scenario of weight 1 remains.
ScenarioSet prune_scenarios(ScenarioSet set, int t, const TimeGrid& grid = {});

/// Certainty-equivalent arrival expected later today.
struct ModelEv {
  int arrival_slot = 0;
  int departure_slot = 0;
  double demand_kwh = 0.0;
  double min_delivery_kwh = 0.0;
};

/// One model EV per expected arrival in every window whose midpoint lies after t.
std::vector<ModelEv> build_future_model(const DailyModel& model, int weekday, int t, double kappa,
                                        const TimeGrid& grid = {});

/// Planning view of one plugged-in EV.
struct RtscEv {
  PluggedEv ev;
  ScenarioSet scenarios;
  double demand_estimate_kwh = 0.0;
  double log_domain_kwh = 0.0;
};

struct PlanContext {
  FacilityConfig config;
  TimeGrid grid;
  ObjectiveWeights weights;
  double previous_peak_kw = 0.0;
  LogModel log_model = LogModel::Exact;
  SolveOptions solve{};
};

struct PlanResult {
  Schedule plan;  // rows: plugged EVs then model EVs; columns: slots [t, end of day)
  std::size_t real_evs = 0;
  Solution solution;
};

/// Assembles the program for slot t and solves it. Throws StrategyError when
/// the program cannot be solved.
PlanResult plan_step(int t, std::span<const RtscEv> evs, std::span<const ModelEv> future, const PlanContext& ctx);

/// Setpoints in kW for the plugged EVs from the first planned column, clipped
/// to the EVSE rating and scaled onto the transformer limit if needed.
std::vector<double> enact_step(const PlanResult& plan, const FacilityConfig& config, const TimeGrid& grid = {});

/// The real-time smart charging strategy: re-plans the rest of the day every slot.
class RtscStrategy : public ChargingStrategy {
 public:
  RtscStrategy(FacilityConfig config, TimeGrid grid, ObjectiveWeights weights, DailyModel model, RtscOptions options);

  std::string name() const override { return "rtsc"; }
  std::vector<double> setpoints_kw(const LotState& lot) override;

  const std::vector<double>& solve_times() const { return solve_times_; }

 private:
  struct Tracked {
    ScenarioSet scenarios;
    double demand_estimate_kwh = 0.0;
    double log_domain_kwh = 0.0;
  };

  FacilityConfig config_;
  TimeGrid grid_;
  ObjectiveWeights weights_;
  DailyModel model_;
  RtscOptions options_;
  std::mt19937_64 rng_;
  std::map<std::size_t, Tracked> tracked_;  // by trace index
  std::vector<double> solve_times_;
};

}  // namespace smartcharge
