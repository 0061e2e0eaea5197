#pragma once

#include <string>
#include <vector>

#include "smartcharge/domain.hpp"

namespace smartcharge::testing {

inline FacilityConfig flat_facility(double tou = 0.2, double retail = 0.0, double transformer_kw = 160.0,
                                    double demand_rate = 0.0) {
  FacilityConfig cfg;
  cfg.retail_price.assign(96, retail);
  cfg.tou_price.assign(96, tou);
  cfg.transformer_kw = transformer_kw;
  cfg.demand_charge_rate = demand_rate;
  return cfg;
}

// Off-peak / part-peak / peak shaped prices, cheapest overnight.
inline FacilityConfig tou_facility(double transformer_kw = 160.0, double retail = 0.0, double demand_rate = 0.0) {
  FacilityConfig cfg = flat_facility(0.16, retail, transformer_kw, demand_rate);
  for (int t = 0; t < 96; ++t) {
    if (t >= 34 && t < 48) cfg.tou_price[static_cast<std::size_t>(t)] = 0.20;
    if (t >= 48 && t < 72) cfg.tou_price[static_cast<std::size_t>(t)] = 0.28;
    if (t >= 72 && t < 86) cfg.tou_price[static_cast<std::size_t>(t)] = 0.20;
  }
  return cfg;
}

inline ChargingSession make_session(std::string id, int day, int arrival, int departure, double energy) {
  ChargingSession s;
  s.id = std::move(id);
  s.day = day;
  s.arrival_slot = arrival;
  s.departure_slot = departure;
  s.energy_kwh = energy;
  return s;
}

}  // namespace smartcharge::testing
