#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smartcharge {

enum class ErrorKind {
  ArrivalAfterDeparture,
  SlotOutOfRange,
  NegativeDemand,
  InvalidGrid,
  InvalidConfig,
  MissingDemand,
  MissingDeparture,
  DimensionMismatch,
  GridTooLarge,
  MalformedRow,
  ConcurrencyExceeded,
  EmptyTrace,
  InvalidModel,
  StrategyError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Uniform slot discretization of a day. Decision variables are kWh per slot;
/// caps quoted in kW go through to_kwh() exactly once.
struct TimeGrid {
  double slot_hours = 0.25;
  int slots_per_day = 96;
  int horizon = 96;

  /// Throws Error(InvalidGrid) unless slot_hours > 0, slots_per_day * slot_hours == 24
  /// and horizon >= 1.
  void validate() const;

  double to_kwh(double kw) const { return kw * slot_hours; }
  double to_kw(double kwh_per_slot) const { return kwh_per_slot / slot_hours; }
  bool contains(int slot) const { return slot >= 0 && slot < horizon; }
};

struct ChargingSession {
  std::string id;
  int day = 0;
  int arrival_slot = 0;    // inclusive
  int departure_slot = 0;  // exclusive: no energy in this slot
  std::optional<double> energy_kwh;
  std::optional<int> declared_departure;

  int stay_slots() const { return departure_slot - arrival_slot; }
  bool present_at(int slot) const { return slot >= arrival_slot && slot < departure_slot; }
};

/// Returns the session unchanged when arrival < departure <= horizon and the
/// demand, if any, is nonnegative.
const ChargingSession& validate_session(const ChargingSession& session, const TimeGrid& grid);

struct FacilityConfig {
  int num_evse = 57;
  double evse_max_kw = 6.6;
  double transformer_kw = 160.0;
  std::vector<double> retail_price;  // $/kWh per slot of day
  std::vector<double> tou_price;     // $/kWh per slot of day
  double demand_charge_rate = 0.0;   // $/kW per billing period
  std::vector<double> base_load_kw;  // per slot of day, empty means zero

  void validate(const TimeGrid& grid) const;

  double retail(int slot_of_day) const { return retail_price[static_cast<std::size_t>(slot_of_day)]; }
  double tou(int slot_of_day) const { return tou_price[static_cast<std::size_t>(slot_of_day)]; }
  double base_kw(int slot_of_day) const {
    return base_load_kw.empty() ? 0.0 : base_load_kw[static_cast<std::size_t>(slot_of_day)];
  }
  double max_base_kw() const;
};

/// Energy delivered per session and slot, kWh per slot, row-major [session][slot].
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::size_t sessions, std::size_t slots)
      : sessions_(sessions), slots_(slots), energy_(sessions * slots, 0.0) {}

  std::size_t sessions() const { return sessions_; }
  std::size_t slots() const { return slots_; }

  double& at(std::size_t session, std::size_t slot) { return energy_[session * slots_ + slot]; }
  double at(std::size_t session, std::size_t slot) const { return energy_[session * slots_ + slot]; }

  std::span<const double> row(std::size_t session) const {
    return {energy_.data() + session * slots_, slots_};
  }
  std::span<double> row(std::size_t session) { return {energy_.data() + session * slots_, slots_}; }

  double session_total(std::size_t session) const;
  double slot_total(std::size_t slot) const;

  Schedule scaled(double factor) const;
  Schedule averaged_with(const Schedule& other) const;

 private:
  std::size_t sessions_ = 0;
  std::size_t slots_ = 0;
  std::vector<double> energy_;
};

/// Checks entries are >= 0, zero outside [arrival, departure) and capped by the
/// per-slot EVSE limit. Session slots are interpreted on the schedule's own
/// column axis: column = day * slots_per_day + slot when the schedule spans days.
void validate_schedule(const Schedule& schedule, std::span<const ChargingSession> sessions,
                       const FacilityConfig& config, const TimeGrid& grid, double tol = 1e-9);

struct DemandTracker {
  double peak_kw = 0.0;  // ê_old
  int billing_period_start = 0;

  void update(double slot_load_kw);
  void reset(int day);
};

DemandTracker update_demand_tracker(DemandTracker tracker, double slot_load_kw);

struct ObjectiveWeights {
  double owner_utility = 0.0;    // OU
  double quick_charging = 0.0;   // QC
  double profit = 0.0;           // PM
  double demand_charge = 0.0;    // DC
  double load_flattening = 0.0;  // LF
  double equal_sharing = 0.0;    // ES
  double energy_deficit = 0.0;   // ED

  void validate() const;

  ObjectiveWeights operator+(const ObjectiveWeights& other) const;

  /// 15 OU + PM + 1e-9 (LF + ES)
  static ObjectiveWeights u1();
  /// OU + 10 (PM + DC) + 1e-9 (LF + ES)
  static ObjectiveWeights u2();
};

inline double power_to_energy(double kw, const TimeGrid& grid) { return grid.to_kwh(kw); }
inline double energy_to_power(double kwh_per_slot, const TimeGrid& grid) { return grid.to_kw(kwh_per_slot); }

}  // namespace smartcharge
