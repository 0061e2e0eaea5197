#pragma once

#include <string>
#include <vector>

#include "smartcharge/domain.hpp"

namespace smartcharge {

/// A session currently plugged in, with what it has received so far today.
struct PluggedEv {
  std::size_t index = 0;  // position in the simulated trace
  ChargingSession session;
  double delivered_kwh = 0.0;
};

/// What a strategy sees at the start of a slot.
struct LotState {
  int day = 0;
  int slot = 0;
  std::vector<PluggedEv> plugged;  // ordered by arrival, then id
  DemandTracker tracker;
};

/// Produces per-EVSE power setpoints slot by slot. Implementations may keep
/// state across calls within one simulation run.
class ChargingStrategy {
 public:
  virtual ~ChargingStrategy() = default;
  virtual std::string name() const = 0;
  /// One setpoint in kW per entry of lot.plugged, in the same order.
  virtual std::vector<double> setpoints_kw(const LotState& lot) = 0;
};

}  // namespace smartcharge
