#include <doctest.h>

#include <cmath>
#include <random>

#include "smartcharge/objectives.hpp"

using namespace smartcharge;

namespace {

FacilityConfig flat_config(double retail, double tou, double demand_rate = 0.0) {
  FacilityConfig cfg;
  cfg.retail_price.assign(96, retail);
  cfg.tou_price.assign(96, tou);
  cfg.demand_charge_rate = demand_rate;
  return cfg;
}

ObjectiveContext context(const FacilityConfig& cfg, std::size_t sessions, std::vector<std::optional<double>> d = {}) {
  ObjectiveContext ctx{cfg, TimeGrid{}, DemandTracker{}, std::move(d), {}};
  if (ctx.demands.empty()) ctx.demands.assign(sessions, std::nullopt);
  ctx.availability.assign(sessions, {0, 96});
  return ctx;
}

Schedule random_schedule(std::mt19937_64& rng, std::size_t sessions) {
  std::uniform_real_distribution<double> e(0.0, 1.65);
  Schedule s(sessions, 96);
  for (std::size_t i = 0; i < sessions; ++i) {
    for (std::size_t t = 0; t < 96; ++t) s.at(i, t) = (rng() % 3 == 0) ? e(rng) : 0.0;
  }
  return s;
}

}  // namespace

TEST_CASE("owner utility") {
  CHECK(eval_owner_utility(Schedule(5, 96)) == 0.0);
  Schedule one(1, 96);
  one.at(0, 3) = 9.0;
  CHECK(eval_owner_utility(one) == doctest::Approx(2.302585).epsilon(1e-6));
  Schedule even(2, 96), skewed(2, 96);
  even.at(0, 0) = 3.0;
  even.at(1, 0) = 3.0;
  skewed.at(0, 0) = 6.0;
  CHECK(eval_owner_utility(even) > eval_owner_utility(skewed));
  CHECK(eval_owner_utility(even) == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(eval_owner_utility(skewed) == doctest::Approx(std::log(7.0)));
}

TEST_CASE("quick charging weights decrease over the day") {
  const TimeGrid grid;
  CHECK(eval_quick_charging(Schedule(2, 96), grid) == 0.0);
  Schedule first(1, 96), second(1, 96), last(1, 96);
  first.at(0, 0) = 1.0;
  second.at(0, 1) = 1.0;
  last.at(0, 95) = 1.0;
  CHECK(eval_quick_charging(first, grid) == 1.0);
  CHECK(eval_quick_charging(first, grid) > eval_quick_charging(second, grid));
  CHECK(eval_quick_charging(last, grid) == doctest::Approx(1.0 / 96.0));
}

TEST_CASE("profit") {
  const auto cost_only = flat_config(0.0, 0.2);
  Schedule s(1, 96);
  s.at(0, 10) = 4.0;
  s.at(0, 11) = 6.0;
  CHECK(eval_profit(s, context(cost_only, 1)) == doctest::Approx(-2.0));
  CHECK(eval_profit(Schedule(1, 96), context(cost_only, 1)) == 0.0);
  CHECK(eval_profit(s, context(flat_config(0.30, 0.20), 1)) == doctest::Approx(1.00));
}

TEST_CASE("profit charges base load") {
  auto cfg = flat_config(0.0, 0.1);
  cfg.base_load_kw.assign(96, 4.0);  // 1 kWh per slot
  CHECK(eval_profit(Schedule(1, 96), context(cfg, 1)) == doctest::Approx(-9.6));
}

TEST_CASE("demand charge uses the increase over the previous peak") {
  auto ctx = context(flat_config(0.0, 0.0, 18.0), 1);
  Schedule flat(1, 96);
  for (std::size_t t = 0; t < 96; ++t) flat.at(0, t) = 25.0;  // 100 kW
  CHECK(eval_demand_charge(flat, ctx) == doctest::Approx(-1800.0));
  ctx.tracker.peak_kw = 120.0;
  CHECK(eval_demand_charge(flat, ctx) == 0.0);
  ctx.tracker.peak_kw = 0.0;
  auto doubled = ctx;
  doubled.config.demand_charge_rate = 36.0;
  CHECK(eval_demand_charge(flat, doubled) == doctest::Approx(2.0 * eval_demand_charge(flat, ctx)));
}

TEST_CASE("load flattening") {
  const auto ctx = context(flat_config(0.0, 0.0), 1);
  CHECK(eval_load_flattening(Schedule(1, 96), ctx) == 0.0);
  Schedule two(1, 96);
  two.at(0, 5) = 2.0;
  CHECK(eval_load_flattening(two, ctx) == -4.0);
  const double energy = 12.0;
  for (int k = 1; k <= 8; ++k) {
    Schedule spread(1, 96);
    for (int t = 0; t < k; ++t) spread.at(0, static_cast<std::size_t>(t)) = energy / k;
    CHECK(eval_load_flattening(spread, ctx) == doctest::Approx(-energy * energy / k));
  }
}

TEST_CASE("equal sharing") {
  CHECK(eval_equal_sharing(Schedule(3, 96)) == 0.0);
  Schedule split(2, 96), lumped(2, 96);
  split.at(0, 0) = 1.0;
  split.at(1, 0) = 1.0;
  lumped.at(0, 0) = 2.0;
  CHECK(eval_equal_sharing(split) == -2.0);
  CHECK(eval_equal_sharing(lumped) == -4.0);
  std::mt19937_64 rng(3);
  const auto s = random_schedule(rng, 4);
  CHECK(eval_equal_sharing(s.scaled(3.0)) == doctest::Approx(9.0 * eval_equal_sharing(s)));
}

TEST_CASE("energy deficit") {
  Schedule s(1, 96);
  for (std::size_t t = 0; t < 10; ++t) s.at(0, t) = 1.5;
  auto ctx = context(flat_config(0, 0), 1, {15.0});
  CHECK(eval_energy_deficit(s, ctx) == 0.0);
  ctx.demands = {20.0};
  CHECK(eval_energy_deficit(s, ctx) == doctest::Approx(-5.0));
  ctx.demands = {10.0};
  CHECK(eval_energy_deficit(s, ctx) == doctest::Approx(-5.0));
  ctx.demands = {std::nullopt};
  CHECK_THROWS_AS(eval_energy_deficit(s, ctx), Error);
}

TEST_CASE("composite weighting") {
  std::mt19937_64 rng(11);
  const auto s = random_schedule(rng, 3);
  auto ctx = context(flat_config(0.3, 0.2, 18.0), 3, {10.0, 5.0, 8.0});
  ObjectiveWeights es_only;
  es_only.equal_sharing = 1.0;
  CHECK(eval_composite(s, es_only, ctx) == eval_equal_sharing(s));

  // missing demands are fine while the deficit weight is zero
  auto no_demand = ctx;
  no_demand.demands.assign(3, std::nullopt);
  CHECK_NOTHROW(eval_composite(s, ObjectiveWeights::u2(), no_demand));

  // linear in the weights
  ObjectiveWeights w1 = ObjectiveWeights::u1();
  ObjectiveWeights w2 = ObjectiveWeights::u2();
  w2.energy_deficit = 0.5;
  w2.quick_charging = 2.0;
  CHECK(eval_composite(s, w1 + w2, ctx) ==
        doctest::Approx(eval_composite(s, w1, ctx) + eval_composite(s, w2, ctx)).epsilon(1e-12));
}

TEST_CASE("zero schedule evaluates to zero except the deficit") {
  const Schedule zero(3, 96);
  auto ctx = context(flat_config(0.3, 0.2, 18.0), 3, {10.0, 5.0, 8.0});
  CHECK(eval_owner_utility(zero) == 0.0);
  CHECK(eval_quick_charging(zero, ctx.grid) == 0.0);
  CHECK(eval_profit(zero, ctx) == 0.0);
  CHECK(eval_demand_charge(zero, ctx) == 0.0);
  CHECK(eval_load_flattening(zero, ctx) == 0.0);
  CHECK(eval_equal_sharing(zero) == 0.0);
  CHECK(eval_energy_deficit(zero, ctx) == -23.0);
}

TEST_CASE("concave components satisfy midpoint concavity") {
  std::mt19937_64 rng(5);
  const auto ctx = context(flat_config(0, 0), 4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_schedule(rng, 4);
    const auto b = random_schedule(rng, 4);
    const auto mid = a.averaged_with(b);
    CHECK(eval_owner_utility(mid) >= 0.5 * (eval_owner_utility(a) + eval_owner_utility(b)) - 1e-9);
    CHECK(eval_load_flattening(mid, ctx) >=
          0.5 * (eval_load_flattening(a, ctx) + eval_load_flattening(b, ctx)) - 1e-9);
    CHECK(eval_equal_sharing(mid) >= 0.5 * (eval_equal_sharing(a) + eval_equal_sharing(b)) - 1e-9);
  }
}

TEST_CASE("tangent cuts") {
  const auto cuts = tangent_cuts(60.0, 32);
  REQUIRE(cuts.size() == 32);
  CHECK(cuts.front().slope == 1.0);
  CHECK(cuts.front().intercept == 0.0);
  for (const auto& c : cuts) CHECK(c.slope > 0.0);

  // tight at each tangent point g = (1 - intercept... ) recovered from slope
  for (const auto& c : cuts) {
    const double g = 1.0 / c.slope - 1.0;
    CHECK(envelope_value(cuts, g) == doctest::Approx(std::log1p(g)).epsilon(1e-12));
  }

  // dense sweep: envelope is an upper bound with gap below 0.01
  double worst = 0.0;
  for (int k = 0; k <= 600000; ++k) {
    const double x = 60.0 * k / 600000.0;
    const double gap = envelope_value(cuts, x) - std::log1p(x);
    CHECK_MESSAGE(gap >= -1e-12, "envelope dips below log at x=" << x);
    worst = std::max(worst, gap);
  }
  CHECK(worst < 0.01);

  CHECK_THROWS_AS(tangent_cuts(0.0, 32), Error);
  CHECK_THROWS_AS(tangent_cuts(10.0, 1), Error);
}
