#include "smartcharge/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace smartcharge {

namespace {

constexpr const char* kHeader = "session_id,day,arrival_slot,departure_slot,energy_kwh";

[[noreturn]] void malformed(int line, const std::string& why) {
  throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, int line, const char* what) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) malformed(line, std::string("bad ") + what + " '" + text + "'");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Draws from Normal(mean, sd) restricted to [lo, hi] by rejection; after
// repeated misses the draw is clamped.
template <typename Round>
double truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi, Round round) {
  if (sd <= 0.0) return std::clamp(round(mean), lo, hi);
  std::normal_distribution<double> dist(mean, sd);
  double x = 0.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    x = round(dist(rng));
    if (x >= lo && x <= hi) return x;
  }
  return std::clamp(x, lo, hi);
}

}  // namespace

int SessionTrace::max_concurrency(const TimeGrid& grid) const {
  int days_spanned = days;
  for (const auto& s : sessions) days_spanned = std::max(days_spanned, s.day + 1);
  std::vector<int> count(static_cast<std::size_t>(days_spanned * grid.slots_per_day), 0);
  int worst = 0;
  for (const auto& s : sessions) {
    for (int t = s.arrival_slot; t < s.departure_slot; ++t) {
      worst = std::max(worst, ++count[static_cast<std::size_t>(s.day * grid.slots_per_day + t)]);
    }
  }
  return worst;
}

SessionTrace parse_trace(std::istream& in, int num_evse, const TimeGrid& grid) {
  SessionTrace trace;
  trace.num_evse = num_evse;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) malformed(line_no, "expected header '" + std::string(kHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 5) malformed(line_no, "expected 5 fields, got " + std::to_string(f.size()));
    ChargingSession s;
    s.id = f[0];
    if (s.id.empty()) malformed(line_no, "empty session id");
    s.day = parse_number<int>(f[1], line_no, "day");
    s.arrival_slot = parse_number<int>(f[2], line_no, "arrival_slot");
    s.departure_slot = parse_number<int>(f[3], line_no, "departure_slot");
    if (!f[4].empty()) s.energy_kwh = parse_number<double>(f[4], line_no, "energy_kwh");
    if (s.day < 0) malformed(line_no, "negative day");
    if (s.departure_slot > grid.slots_per_day) malformed(line_no, "session crosses midnight");
    try {
      TimeGrid day_grid = grid;
      day_grid.horizon = grid.slots_per_day;
      validate_session(s, day_grid);
    } catch (const Error& e) {
      malformed(line_no, e.what());
    }
    trace.days = std::max(trace.days, s.day + 1);
    trace.sessions.push_back(std::move(s));
  }
  if (trace.sessions.empty()) throw Error(ErrorKind::EmptyTrace, "empty trace");
  std::stable_sort(trace.sessions.begin(), trace.sessions.end(), [](const auto& a, const auto& b) {
    return a.day != b.day ? a.day < b.day : a.arrival_slot < b.arrival_slot;
  });
  const int peak = trace.max_concurrency(grid);
  if (peak > num_evse) {
    throw Error(ErrorKind::ConcurrencyExceeded, std::to_string(peak) + " sessions plugged in at once with " +
                                                    std::to_string(num_evse) + " EVSEs");
  }
  return trace;
}

SessionTrace read_trace(const std::filesystem::path& path, int num_evse, const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MalformedRow, "cannot open trace " + path.string());
  auto trace = parse_trace(in, num_evse, grid);
  trace.site = path.stem().string();
  return trace;
}

void write_trace(const SessionTrace& trace, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& s : trace.sessions) {
    out << s.id << ',' << s.day << ',' << s.arrival_slot << ',' << s.departure_slot << ',';
    if (s.energy_kwh) out << format_double(*s.energy_kwh);
    out << '\n';
  }
}

void write_trace(const SessionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
  write_trace(trace, out);
}

int weekday_of(int day) { return ((day % kWeekdays) + kWeekdays) % kWeekdays; }

const char* weekday_name(int weekday) {
  static constexpr const char* names[] = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
  return names[weekday_of(weekday)];
}

int arrival_bin(int slot_of_day, const TimeGrid& grid) {
  return std::clamp(slot_of_day * kArrivalBins / grid.slots_per_day, 0, kArrivalBins - 1);
}

std::pair<int, int> bin_slots(int bin, const TimeGrid& grid) {
  return {bin * grid.slots_per_day / kArrivalBins, (bin + 1) * grid.slots_per_day / kArrivalBins};
}

double DailyModel::global_mean_energy() const {
  double count = 0.0, energy = 0.0;
  for (const auto& day : bins) {
    for (const auto& b : day) {
      count += b.expected_count;
      energy += b.expected_count * b.mean_energy_kwh;
    }
  }
  return count > 0.0 ? energy / count : 0.0;
}

double DailyModel::global_mean_stay() const {
  double count = 0.0, stay = 0.0;
  for (const auto& day : bins) {
    for (const auto& b : day) {
      count += b.expected_count;
      stay += b.expected_count * b.mean_stay_slots;
    }
  }
  return count > 0.0 ? stay / count : 0.0;
}

double DailyModel::expected_daily_arrivals(int weekday) const {
  double n = 0.0;
  for (const auto& b : bins[static_cast<std::size_t>(weekday_of(weekday))]) n += b.expected_count;
  return n;
}

void DailyModel::validate() const {
  for (const auto& day : bins) {
    for (const auto& b : day) {
      for (double v : {b.expected_count, b.mean_stay_slots, b.mean_energy_kwh}) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::InvalidModel, "daily model has a negative or non-finite entry");
      }
    }
  }
}

DailyModel calibrate_daily_model(const SessionTrace& trace, const TimeGrid& grid) {
  if (trace.sessions.empty()) throw Error(ErrorKind::EmptyTrace, "empty trace");
  struct Acc {
    double count = 0, stay = 0, energy = 0, energy_count = 0;
  };
  std::array<std::array<Acc, kArrivalBins>, kWeekdays> acc{};
  Acc total;
  int days = trace.days;
  for (const auto& s : trace.sessions) {
    days = std::max(days, s.day + 1);
    auto& a = acc[static_cast<std::size_t>(weekday_of(s.day))][static_cast<std::size_t>(arrival_bin(s.arrival_slot, grid))];
    for (Acc* t : {&a, &total}) {
      t->count += 1;
      t->stay += s.stay_slots();
      if (s.energy_kwh) {
        t->energy += *s.energy_kwh;
        t->energy_count += 1;
      }
    }
  }
  std::array<int, kWeekdays> occurrences{};
  for (int d = 0; d < days; ++d) ++occurrences[static_cast<std::size_t>(weekday_of(d))];
  const double mean_stay = total.stay / total.count;
  const double mean_energy = total.energy_count > 0 ? total.energy / total.energy_count : 0.0;

  DailyModel model;
  for (int w = 0; w < kWeekdays; ++w) {
    for (int b = 0; b < kArrivalBins; ++b) {
      const auto& a = acc[static_cast<std::size_t>(w)][static_cast<std::size_t>(b)];
      auto& out = model.bin(w, b);
      const int occ = occurrences[static_cast<std::size_t>(w)];
      out.expected_count = occ > 0 ? a.count / occ : 0.0;
      out.mean_stay_slots = a.count > 0 ? a.stay / a.count : mean_stay;
      out.mean_energy_kwh = a.energy_count > 0 ? a.energy / a.energy_count : mean_energy;
    }
  }
  return model;
}

DailyModel default_daily_model() {
  // Weekday profile per 2-hour window starting at midnight.
  static constexpr double counts[kArrivalBins] = {0.3, 0.2, 0.8, 12.0, 26.0, 14.0, 9.0, 5.0, 3.5, 1.2, 0.0, 0.0};
  static constexpr double stays[kArrivalBins] = {30, 30, 34, 36, 32, 24, 20, 16, 12, 8, 6, 4};
  static constexpr double energies[kArrivalBins] = {14.0, 14.0, 15.0, 14.5, 13.5, 12.0,
                                                    11.0, 10.0, 9.0,  7.0,  6.0,  5.0};
  DailyModel model;
  for (int w = 0; w < kWeekdays; ++w) {
    const double rate = w < 5 ? 1.0 : 0.1;
    for (int b = 0; b < kArrivalBins; ++b) {
      model.bin(w, b) = {counts[b] * rate, stays[b], energies[b]};
    }
  }
  return model;
}

nlohmann::json to_json(const DailyModel& model) {
  nlohmann::json j = nlohmann::json::object();
  for (int w = 0; w < kWeekdays; ++w) {
    nlohmann::json bins = nlohmann::json::array();
    for (int b = 0; b < kArrivalBins; ++b) {
      const auto& bin = model.bin(w, b);
      bins.push_back({{"bin", b},
                      {"expected_count", bin.expected_count},
                      {"mean_stay_slots", bin.mean_stay_slots},
                      {"mean_energy_kwh", bin.mean_energy_kwh}});
    }
    j[weekday_name(w)] = std::move(bins);
  }
  return j;
}

DailyModel daily_model_from_json(const nlohmann::json& j) {
  DailyModel model;
  try {
    for (int w = 0; w < kWeekdays; ++w) {
      const auto& bins = j.at(weekday_name(w));
      if (!bins.is_array() || bins.size() != kArrivalBins) {
        throw Error(ErrorKind::InvalidModel, std::string("weekday ") + weekday_name(w) + " needs 12 bins");
      }
      for (const auto& entry : bins) {
        const int b = entry.at("bin").get<int>();
        if (b < 0 || b >= kArrivalBins) throw Error(ErrorKind::InvalidModel, "bin index out of range");
        model.bin(w, b) = {entry.at("expected_count").get<double>(), entry.at("mean_stay_slots").get<double>(),
                           entry.at("mean_energy_kwh").get<double>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidModel, std::string("daily model: ") + e.what());
  }
  model.validate();
  return model;
}

DailyModel read_daily_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidModel, "cannot open model " + path.string());
  try {
    return daily_model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidModel, std::string("daily model: ") + e.what());
  }
}

void write_daily_model(const DailyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

SessionTrace generate_synthetic_trace(const DailyModel& model, int days, int num_evse, std::uint64_t seed,
                                      const GenerationOptions& options, const TimeGrid& grid) {
  model.validate();
  if (days < 0) throw Error(ErrorKind::InvalidConfig, "days must be >= 0");
  std::mt19937_64 rng(seed);
  SessionTrace trace;
  trace.num_evse = num_evse;
  trace.days = days;
  const int spd = grid.slots_per_day;
  auto round_slot = [](double x) { return std::round(x); };
  auto round_energy = [](double x) { return std::round(x * 1000.0) / 1000.0; };
  for (int d = 0; d < days; ++d) {
    if (options.weekdays_only && weekday_of(d) >= 5) continue;
    std::vector<ChargingSession> day;
    for (int b = 0; b < kArrivalBins; ++b) {
      const auto& bin = model.bin(weekday_of(d), b);
      const double lambda = options.scale * bin.expected_count;
      if (lambda <= 0.0) continue;
      const int n = std::poisson_distribution<int>(lambda)(rng);
      const auto [first, last] = bin_slots(b, grid);
      std::uniform_int_distribution<int> arrival(first, last - 1);
      for (int i = 0; i < n; ++i) {
        ChargingSession s;
        s.day = d;
        s.arrival_slot = arrival(rng);
        const double stay = truncated_normal(rng, bin.mean_stay_slots, options.dispersion * bin.mean_stay_slots, 1.0,
                                             static_cast<double>(spd - s.arrival_slot), round_slot);
        s.departure_slot = s.arrival_slot + static_cast<int>(stay);
        s.energy_kwh = truncated_normal(rng, bin.mean_energy_kwh, options.dispersion * bin.mean_energy_kwh,
                                        options.min_energy_kwh, std::numeric_limits<double>::infinity(), round_energy);
        day.push_back(std::move(s));
      }
    }
    std::stable_sort(day.begin(), day.end(), [](const auto& a, const auto& b) { return a.arrival_slot < b.arrival_slot; });
    // Arrivals that find every EVSE busy are turned away.
    std::vector<int> busy_until;
    int kept = 0;
    for (auto& s : day) {
      std::erase_if(busy_until, [&](int dep) { return dep <= s.arrival_slot; });
      if (static_cast<int>(busy_until.size()) >= num_evse) continue;
      busy_until.push_back(s.departure_slot);
      s.id = "d" + std::to_string(d) + "-" + std::to_string(kept++);
      trace.sessions.push_back(std::move(s));
    }
  }
  return trace;
}

double estimate_demand(const ChargingSession& session, const DailyModel& model, const TimeGrid& grid) {
  const auto& bin = model.bin(weekday_of(session.day), arrival_bin(session.arrival_slot, grid));
  return bin.expected_count > 0.0 ? bin.mean_energy_kwh : model.global_mean_energy();
}

}  // namespace smartcharge
