#include "smartcharge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace smartcharge {

int laxity(const ChargingSession& session, int t, double remaining_kwh, double per_slot_kwh) {
  const int needed = remaining_kwh <= 0.0 ? 0 : static_cast<int>(std::ceil(remaining_kwh / per_slot_kwh - 1e-9));
  return (session.departure_slot - t) - needed;
}

std::vector<double> priority_setpoints(const LotState& lot, Priority priority, const FacilityConfig& config,
                                       const TimeGrid& grid) {
  const double per_slot = grid.to_kwh(config.evse_max_kw);
  const std::size_t n = lot.plugged.size();
  std::vector<double> request(n, 0.0);
  std::vector<int> key(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = lot.plugged[i];
    const double remaining = p.session.energy_kwh ? std::max(0.0, *p.session.energy_kwh - p.delivered_kwh)
                                                  : std::numeric_limits<double>::infinity();
    if (remaining > 1e-12) request[i] = std::min(config.evse_max_kw, grid.to_kw(remaining));
    switch (priority) {
      case Priority::Arrival: key[i] = p.session.arrival_slot; break;
      case Priority::LeastLaxity: key[i] = laxity(p.session, lot.slot, remaining, per_slot); break;
      case Priority::EarliestDeadline: key[i] = p.session.departure_slot; break;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = lot.plugged[a].session;
    const auto& sb = lot.plugged[b].session;
    return std::tie(key[a], sa.arrival_slot, sa.id) < std::tie(key[b], sb.arrival_slot, sb.id);
  });
  std::vector<double> kw(n, 0.0);
  double left = config.transformer_kw;
  for (std::size_t i : order) {
    const double give = std::min(request[i], left);
    kw[i] = give;
    left -= give;
    if (left <= 0.0) break;
  }
  return kw;
}

std::vector<double> schedule_uncontrolled(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid) {
  return priority_setpoints(lot, Priority::Arrival, config, grid);
}

std::vector<double> schedule_llf(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid) {
  return priority_setpoints(lot, Priority::LeastLaxity, config, grid);
}

std::vector<double> schedule_edf(const LotState& lot, const FacilityConfig& config, const TimeGrid& grid) {
  return priority_setpoints(lot, Priority::EarliestDeadline, config, grid);
}

std::string PriorityStrategy::name() const {
  switch (priority_) {
    case Priority::Arrival: return "uncontrolled";
    case Priority::LeastLaxity: return "llf";
    case Priority::EarliestDeadline: return "edf";
  }
  return "unknown";
}

}  // namespace smartcharge
