#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartcharge/domain.hpp"

namespace smartcharge {

inline constexpr int kArrivalBins = 12;
inline constexpr int kWeekdays = 7;

struct SessionTrace {
  std::vector<ChargingSession> sessions;  // sorted by (day, arrival_slot)
  std::string site = "synthetic";
  int num_evse = 57;
  int days = 0;

  /// Largest number of sessions plugged in at the same slot.
  int max_concurrency(const TimeGrid& grid) const;
};

/// Reads the CSV format `session_id,day,arrival_slot,departure_slot,energy_kwh`.
/// An empty energy field means the demand is unknown. Throws MalformedRow
/// (message carries the line number), ConcurrencyExceeded or EmptyTrace.
SessionTrace parse_trace(std::istream& in, int num_evse, const TimeGrid& grid = {});
SessionTrace read_trace(const std::filesystem::path& path, int num_evse, const TimeGrid& grid = {});

void write_trace(const SessionTrace& trace, std::ostream& out);
void write_trace(const SessionTrace& trace, const std::filesystem::path& path);

struct ArrivalBin {
  double expected_count = 0.0;  // arrivals per occurrence of the weekday
  double mean_stay_slots = 0.0;
  double mean_energy_kwh = 0.0;
};

/// Arrival histogram per weekday (0 = Monday) over 2-hour windows.
struct DailyModel {
  std::array<std::array<ArrivalBin, kArrivalBins>, kWeekdays> bins{};

  const ArrivalBin& bin(int weekday, int index) const {
    return bins[static_cast<std::size_t>(weekday)][static_cast<std::size_t>(index)];
  }
  ArrivalBin& bin(int weekday, int index) {
    return bins[static_cast<std::size_t>(weekday)][static_cast<std::size_t>(index)];
  }
  /// Count-weighted means over every bin; used where a bin has no data.
  double global_mean_energy() const;
  double global_mean_stay() const;
  double expected_daily_arrivals(int weekday) const;

  /// Throws InvalidModel on negative or non-finite entries.
  void validate() const;
};

int weekday_of(int day);
const char* weekday_name(int weekday);
/// 2-hour window holding a slot of day.
int arrival_bin(int slot_of_day, const TimeGrid& grid);
/// First slot and one-past-last slot of a window.
std::pair<int, int> bin_slots(int bin, const TimeGrid& grid);

DailyModel calibrate_daily_model(const SessionTrace& trace, const TimeGrid& grid = {});

/// Hand-authored workplace profile: morning-heavy arrivals, about 72 sessions
/// and 900 kWh per weekday, weekends at 10% of weekday rates.
DailyModel default_daily_model();

nlohmann::json to_json(const DailyModel& model);
DailyModel daily_model_from_json(const nlohmann::json& j);
DailyModel read_daily_model(const std::filesystem::path& path);
void write_daily_model(const DailyModel& model, const std::filesystem::path& path);

struct GenerationOptions {
  double scale = 1.0;
  double dispersion = 0.25;  // stddev as a fraction of the bin mean
  double min_energy_kwh = 0.5;
  bool weekdays_only = false;  // leave Saturdays and Sundays empty
};

SessionTrace generate_synthetic_trace(const DailyModel& model, int days, int num_evse, std::uint64_t seed,
                                      const GenerationOptions& options = {}, const TimeGrid& grid = {});

/// Bin-mean energy for the session's weekday and arrival window.
double estimate_demand(const ChargingSession& session, const DailyModel& model, const TimeGrid& grid = {});

}  // namespace smartcharge
