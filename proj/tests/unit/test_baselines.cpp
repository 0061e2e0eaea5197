#include <doctest.h>

#include <string>

#include "fixtures.hpp"
#include "smartcharge/baselines.hpp"

using namespace smartcharge;
using testing::make_session;

namespace {

LotState lot_at(int t, std::vector<ChargingSession> sessions, std::vector<double> delivered = {}) {
  LotState lot;
  lot.slot = t;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    lot.plugged.push_back({i, sessions[i], delivered.empty() ? 0.0 : delivered[i]});
  }
  return lot;
}

}  // namespace

TEST_CASE("laxity counts slack slots") {
  const auto s = make_session("a", 0, 0, 14, 20.0);
  CHECK(laxity(s, 10, 6.6, 1.65) == 0);
  CHECK(laxity(s, 10, 0.0, 1.65) == 4);
  CHECK(laxity(s, 10, 8.0, 1.65) == -1);
  // Exact multiples are not pushed to the next slot by rounding noise.
  CHECK(laxity(s, 10, 1.65 * 3, 1.65) == 1);
}

TEST_CASE("uncontrolled curtails in arrival order at the transformer limit") {
  std::vector<ChargingSession> sessions;
  for (int k = 0; k < 30; ++k) sessions.push_back(make_session("ev" + std::to_string(100 + k), 0, k, 90, 30.0));
  const auto cfg = testing::flat_facility();
  const auto kw = schedule_uncontrolled(lot_at(40, sessions), cfg);
  double total = 0.0;
  for (int k = 0; k < 24; ++k) CHECK(kw[static_cast<std::size_t>(k)] == 6.6);
  CHECK(kw[24] == doctest::Approx(1.6));
  for (int k = 25; k < 30; ++k) CHECK(kw[static_cast<std::size_t>(k)] == 0.0);
  for (double v : kw) total += v;
  CHECK(total <= 160.0 + 1e-12);

  const auto two = schedule_uncontrolled(lot_at(40, {sessions[0], sessions[1]}), cfg);
  CHECK(two == std::vector<double>{6.6, 6.6});
}

TEST_CASE("requests stop at the remaining demand") {
  const auto cfg = testing::flat_facility();
  const auto s = make_session("a", 0, 0, 40, 10.0);
  CHECK(schedule_uncontrolled(lot_at(5, {s}, {10.0}), cfg)[0] == 0.0);
  CHECK(schedule_uncontrolled(lot_at(5, {s}, {9.5}), cfg)[0] == doctest::Approx(2.0));
  CHECK(schedule_edf(lot_at(5, {s}, {10.0}), cfg)[0] == 0.0);
  CHECK(schedule_llf(lot_at(5, {s}, {10.0}), cfg)[0] == 0.0);
}

TEST_CASE("least laxity first serves the tightest EV") {
  auto cfg = testing::flat_facility();
  cfg.transformer_kw = 6.6;
  const auto loose = make_session("a", 0, 0, 20, 6.6);  // needs 4 slots, 10 remain
  const auto tight = make_session("b", 0, 2, 14, 6.6);  // needs 4 slots, 4 remain
  const auto kw = schedule_llf(lot_at(10, {loose, tight}), cfg);
  CHECK(kw == std::vector<double>{0.0, 6.6});

  const auto twin = make_session("c", 0, 1, 14, 6.6);
  CHECK(schedule_llf(lot_at(10, {tight, twin}), cfg) == std::vector<double>{0.0, 6.6});
}

TEST_CASE("earliest deadline first orders by departure then arrival") {
  auto cfg = testing::flat_facility();
  cfg.transformer_kw = 6.6;
  const auto late = make_session("a", 0, 0, 60, 30.0);
  const auto early = make_session("b", 0, 5, 40, 30.0);
  CHECK(schedule_edf(lot_at(10, {late, early}), cfg) == std::vector<double>{0.0, 6.6});
  const auto same_deadline = make_session("c", 0, 3, 40, 30.0);
  CHECK(schedule_edf(lot_at(10, {early, same_deadline}), cfg) == std::vector<double>{0.0, 6.6});
  // Same arrival and deadline fall back to the id.
  const auto twin = make_session("a0", 0, 5, 40, 30.0);
  CHECK(schedule_edf(lot_at(10, {early, twin}), cfg) == std::vector<double>{0.0, 6.6});
}

TEST_CASE("with slack capacity all priorities agree") {
  const auto cfg = testing::flat_facility();
  std::vector<ChargingSession> sessions = {make_session("a", 0, 0, 30, 12.0), make_session("b", 0, 3, 20, 4.0),
                                           make_session("c", 0, 4, 80, 40.0)};
  const auto lot = lot_at(8, sessions, {1.0, 3.9, 0.0});
  const auto u = schedule_uncontrolled(lot, cfg);
  CHECK(schedule_llf(lot, cfg) == u);
  CHECK(schedule_edf(lot, cfg) == u);
  CHECK(PriorityStrategy(Priority::LeastLaxity, cfg).name() == "llf");
}
