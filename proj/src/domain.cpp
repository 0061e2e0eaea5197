#include "smartcharge/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smartcharge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ArrivalAfterDeparture: return "ArrivalAfterDeparture";
    case ErrorKind::SlotOutOfRange: return "SlotOutOfRange";
    case ErrorKind::NegativeDemand: return "NegativeDemand";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::MissingDemand: return "MissingDemand";
    case ErrorKind::MissingDeparture: return "MissingDeparture";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::ConcurrencyExceeded: return "ConcurrencyExceeded";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::StrategyError: return "StrategyError";
  }
  return "Unknown";
}

void TimeGrid::validate() const {
  if (!(slot_hours > 0.0) || slots_per_day <= 0) {
    throw Error(ErrorKind::InvalidGrid, "slot duration and slots per day must be positive");
  }
  if (std::abs(slot_hours * slots_per_day - 24.0) > 1e-9) {
    throw Error(ErrorKind::InvalidGrid, "slots_per_day * slot_hours must equal 24");
  }
  if (horizon < 1) throw Error(ErrorKind::InvalidGrid, "horizon must be at least one slot");
}

const ChargingSession& validate_session(const ChargingSession& session, const TimeGrid& grid) {
  if (session.arrival_slot >= session.departure_slot) {
    throw Error(ErrorKind::ArrivalAfterDeparture,
                "session " + session.id + ": arrival slot " + std::to_string(session.arrival_slot) +
                    " is not before departure slot " + std::to_string(session.departure_slot));
  }
  if (session.arrival_slot < 0 || session.departure_slot > grid.horizon) {
    throw Error(ErrorKind::SlotOutOfRange, "session " + session.id + ": slots outside [0, " +
                                               std::to_string(grid.horizon) + "]");
  }
  if (session.declared_departure &&
      (*session.declared_departure <= session.arrival_slot || *session.declared_departure > grid.horizon)) {
    throw Error(ErrorKind::SlotOutOfRange, "session " + session.id + ": declared departure out of range");
  }
  if (session.energy_kwh && (*session.energy_kwh < 0.0 || !std::isfinite(*session.energy_kwh))) {
    throw Error(ErrorKind::NegativeDemand, "session " + session.id + ": negative energy demand");
  }
  return session;
}

void FacilityConfig::validate(const TimeGrid& grid) const {
  grid.validate();
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (num_evse <= 0) fail("num_evse must be positive");
  if (!(evse_max_kw > 0.0)) fail("evse_max_kw must be positive");
  if (!(transformer_kw > 0.0)) fail("transformer_kw must be positive");
  if (!(demand_charge_rate >= 0.0)) fail("demand_charge_rate must be nonnegative");
  const auto n = static_cast<std::size_t>(grid.slots_per_day);
  auto check_profile = [&](const std::vector<double>& v, const char* name, bool may_be_empty) {
    if (v.empty() && may_be_empty) return;
    if (v.size() != n) fail(std::string(name) + " must have one entry per slot of day");
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x)) fail(std::string(name) + " entries must be finite and >= 0");
    }
  };
  check_profile(retail_price, "retail_price", false);
  check_profile(tou_price, "tou_price", false);
  check_profile(base_load_kw, "base_load_kw", true);
}

double FacilityConfig::max_base_kw() const {
  if (base_load_kw.empty()) return 0.0;
  return *std::max_element(base_load_kw.begin(), base_load_kw.end());
}

double Schedule::session_total(std::size_t session) const {
  double total = 0.0;
  for (double e : row(session)) total += e;
  return total;
}

double Schedule::slot_total(std::size_t slot) const {
  double total = 0.0;
  for (std::size_t i = 0; i < sessions_; ++i) total += at(i, slot);
  return total;
}

Schedule Schedule::scaled(double factor) const {
  Schedule out = *this;
  for (double& e : out.energy_) e *= factor;
  return out;
}

Schedule Schedule::averaged_with(const Schedule& other) const {
  if (other.sessions_ != sessions_ || other.slots_ != slots_) {
    throw Error(ErrorKind::DimensionMismatch, "schedules differ in shape");
  }
  Schedule out = *this;
  for (std::size_t k = 0; k < energy_.size(); ++k) out.energy_[k] = 0.5 * (energy_[k] + other.energy_[k]);
  return out;
}

void validate_schedule(const Schedule& schedule, std::span<const ChargingSession> sessions,
                       const FacilityConfig& config, const TimeGrid& grid, double tol) {
  if (schedule.sessions() != sessions.size()) {
    throw Error(ErrorKind::DimensionMismatch, "schedule rows do not match session count");
  }
  const double cap = grid.to_kwh(config.evse_max_kw);
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const long offset = static_cast<long>(s.day) * grid.slots_per_day;
    for (std::size_t t = 0; t < schedule.slots(); ++t) {
      const double e = schedule.at(i, t);
      const long local = static_cast<long>(t) - offset;
      const bool inside = local >= s.arrival_slot && local < s.departure_slot;
      if (e < -tol) throw Error(ErrorKind::InvalidConfig, "negative energy in schedule");
      if (!inside && std::abs(e) > tol) {
        std::ostringstream os;
        os << "session " << s.id << " receives energy outside its plug-in interval at column " << t;
        throw Error(ErrorKind::SlotOutOfRange, os.str());
      }
      if (e > cap + tol) throw Error(ErrorKind::InvalidConfig, "schedule entry exceeds EVSE limit");
    }
  }
}

void DemandTracker::update(double slot_load_kw) { peak_kw = std::max(peak_kw, slot_load_kw); }

void DemandTracker::reset(int day) {
  peak_kw = 0.0;
  billing_period_start = day;
}

DemandTracker update_demand_tracker(DemandTracker tracker, double slot_load_kw) {
  tracker.update(slot_load_kw);
  return tracker;
}

void ObjectiveWeights::validate() const {
  const double w[] = {owner_utility, quick_charging, profit, demand_charge,
                      load_flattening, equal_sharing, energy_deficit};
  bool any = false;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidConfig, "objective weights must be >= 0");
    any = any || x > 0.0;
  }
  if (!any) throw Error(ErrorKind::InvalidConfig, "at least one objective weight must be positive");
}

ObjectiveWeights ObjectiveWeights::operator+(const ObjectiveWeights& o) const {
  return {owner_utility + o.owner_utility, quick_charging + o.quick_charging, profit + o.profit,
          demand_charge + o.demand_charge, load_flattening + o.load_flattening,
          equal_sharing + o.equal_sharing, energy_deficit + o.energy_deficit};
}

ObjectiveWeights ObjectiveWeights::u1() {
  ObjectiveWeights w;
  w.owner_utility = 15.0;
  w.profit = 1.0;
  w.load_flattening = 1e-9;
  w.equal_sharing = 1e-9;
  return w;
}

ObjectiveWeights ObjectiveWeights::u2() {
  ObjectiveWeights w;
  w.owner_utility = 1.0;
  w.profit = 10.0;
  w.demand_charge = 10.0;
  w.load_flattening = 1e-9;
  w.equal_sharing = 1e-9;
  return w;
}

}  // namespace smartcharge
