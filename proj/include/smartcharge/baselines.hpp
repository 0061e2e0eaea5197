#pragma once

#include "smartcharge/strategy.hpp"

namespace smartcharge {

enum class Priority {
  Arrival,           // uncontrolled, first come first served
  LeastLaxity,
  EarliestDeadline,
};

/// Slots of slack: (departure - t) - ceil(remaining / per_slot_kwh). Negative
/// when the demand can no longer be met.
int laxity(const ChargingSession& session, int t, double remaining_kwh, double per_slot_kwh);

/// Every EV with unmet demand asks for min(rating, what finishes it this slot).
/// Requests are granted in priority order until the transformer limit is
/// reached; the EV that would cross it gets the residual, later ones nothing.
/// Ties fall back to arrival slot, then session id.
std::vector<double> priority_setpoints(const LotState& lot, Priority priority, const FacilityConfig& config,
                                       const TimeGrid& grid = {});

std::vector<double> schedule_uncontrolled(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid = {});
std::vector<double> schedule_llf(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid = {});
std::vector<double> schedule_edf(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid = {});

class PriorityStrategy : public ChargingStrategy {
 public:
  PriorityStrategy(Priority priority, FacilityConfig config, TimeGrid grid = {})
      : priority_(priority), config_(std::move(config)), grid_(grid) {}

  std::string name() const override;
  std::vector<double> setpoints_kw(const LotState& lot) override {
    return priority_setpoints(lot, priority_, config_, grid_);
  }

 private:
  Priority priority_;
  FacilityConfig config_;
  TimeGrid grid_;
};

}  // namespace smartcharge
