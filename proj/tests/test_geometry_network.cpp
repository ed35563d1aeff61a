#include <gtest/gtest.h>

#include <cmath>

#include <algorithm>
#include <random>

#include "rtsim/geometry.hpp"
#include "rtsim/scenario.hpp"
#include "rtsim/transit.hpp"

using namespace rtsim;

namespace {

TravelTimeModel table_speeds() { return {36.0, 5.0, 80.0}; }

TransitNetwork single_line(double headway, double offset, std::vector<Point> at) {
  std::vector<TransitStation> st;
  std::vector<int> ids;
  for (std::size_t i = 0; i < at.size(); ++i) {
    st.push_back({static_cast<int>(i), at[i], {}});
    ids.push_back(static_cast<int>(i));
  }
  return TransitNetwork(st, {{0, ids, headway, offset, 80.0}}, table_speeds());
}

}  // namespace

TEST(TravelTime, ModeSpeeds) {
  const auto tt = table_speeds();
  EXPECT_DOUBLE_EQ(tt.minutes({0, 0}, {0, 6}, Mode::vehicle), 10.0);
  EXPECT_DOUBLE_EQ(tt.minutes({3, 4}, {3, 4}, Mode::walk), 0.0);
  EXPECT_DOUBLE_EQ(tt.minutes({0, 0}, {3, 4}, Mode::walk), 60.0);
  EXPECT_THROW(parse_mode("bike"), std::invalid_argument);
  EXPECT_THROW(TravelTimeModel(0.0, 5.0, 80.0), std::invalid_argument);
}

TEST(TravelTime, SymmetryAndTriangle) {
  const auto tt = table_speeds();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 2000; ++k) {
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    EXPECT_NEAR(tt.vehicle(a, b), tt.vehicle(b, a), 1e-12);
    EXPECT_LE(tt.vehicle(a, c), tt.vehicle(a, b) + tt.vehicle(b, c) + 1e-9);
    EXPECT_GE(tt.walk(a, b), 0.0);
  }
}

TEST(Zones, GridPartition) {
  const auto zs = ZoneSet::grid({-10, -10, 10, 10}, 4, 4);
  ASSERT_EQ(zs.size(), 16u);
  EXPECT_EQ(zs.zone_of({-9.9, -9.9}), 0);
  EXPECT_EQ(zs.zone_of({9.9, 9.9}), 15);
  EXPECT_EQ(zs.zone_of({0.0, 0.0}), 10);  // shared corner goes up and right
  for (const auto& z : zs.zones()) {
    EXPECT_TRUE(z.bounds.contains(z.centroid));
    EXPECT_DOUBLE_EQ(z.bounds.width(), 5.0);
  }
}

TEST(Zones, RectanglesMustTile) {
  const Rect area{0, 0, 2, 1};
  EXPECT_NO_THROW(ZoneSet::from_rects(area, {{0, 0, 1, 1}, {1, 0, 2, 1}}));
  EXPECT_THROW(ZoneSet::from_rects(area, {{0, 0, 1.5, 1}, {1, 0, 2, 1}}), std::invalid_argument);
  EXPECT_THROW(ZoneSet::from_rects(area, {{0, 0, 1, 1}}), std::invalid_argument);
  const auto zs = ZoneSet::from_rects(area, {{0, 0, 1, 1}, {1, 0, 2, 1}});
  EXPECT_EQ(zs.zone_of({1.5, 0.5}), 1);
  EXPECT_EQ(zs.zone_of({5.0, 0.5}), 1);
}

TEST(Stations, KNearestSmall) {
  const auto net = single_line(10, 0, {{1, 0}, {2, 0}, {5, 0}});
  const auto near = net.k_nearest({0, 0}, 2);
  EXPECT_EQ(near.stations, (std::vector<int>{0, 1}));
  EXPECT_FALSE(near.short_list);
  const auto at = net.k_nearest({2, 0}, 1);
  EXPECT_EQ(at.stations, std::vector<int>{1});
  EXPECT_DOUBLE_EQ(at.walk_minutes[0], 0.0);
  const auto all = net.k_nearest({0, 0}, 5);
  EXPECT_TRUE(all.short_list);
  EXPECT_EQ(all.stations.size(), 3u);
}

TEST(Stations, TieBreakById) {
  const auto net = single_line(10, 0, {{1, 0}, {-1, 0}, {0, 1}});
  EXPECT_EQ(net.k_nearest({0, 0}, 3).stations, (std::vector<int>{0, 1, 2}));
}

TEST(Stations, SyntheticGridMatchesScan) {
  const auto sc = load_scenario_file(std::string(RTSIM_SOURCE_DIR) + "/scenarios/synthetic_grid.json");
  const auto& net = *sc.network.transit;
  ASSERT_EQ(net.station_count(), 89u);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 500; ++k) {
    const Point p{u(rng), u(rng)};
    std::vector<std::pair<double, int>> all;
    for (const auto& s : net.stations()) all.emplace_back(distance(p, s.location), s.id);
    std::sort(all.begin(), all.end());
    const auto got = net.k_nearest(p, 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(got.stations[i], all[i].second);
    // prefix of the full ordering
    const auto full = net.k_nearest(p, net.station_count());
    EXPECT_TRUE(std::equal(got.stations.begin(), got.stations.end(), full.stations.begin()));
  }
}

TEST(Transit, PlannedCostSingleLine) {
  const auto net = single_line(10, 0, {{0, 0}, {20, 0}});
  const auto c = net.planned_cost(0, 1);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->first, 5.0);
  EXPECT_DOUBLE_EQ(c->second, 15.0);
  const auto same = net.planned_cost(1, 1);
  ASSERT_TRUE(same);
  EXPECT_DOUBLE_EQ(same->first, 0.0);
  EXPECT_DOUBLE_EQ(same->second, 0.0);
}

TEST(Transit, TransferSumsHalfHeadways) {
  // L-shaped pair of lines meeting at station 1
  std::vector<TransitStation> st{{0, {0, 0}, {}}, {1, {8, 0}, {}}, {2, {8, 8}, {}}};
  TransitNetwork net(st, {{0, {0, 1}, 10.0, 0.0, 80.0}, {1, {1, 2}, 20.0, 3.0, 80.0}}, table_speeds());
  const auto& p = net.planned_path(0, 2);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->boardings(), 2);
  EXPECT_DOUBLE_EQ(p->expected_wait, 15.0);
  EXPECT_DOUBLE_EQ(p->in_vehicle, 12.0);

  // with commensurate headways every transfer lands on the same phase of
  // line 1: arrivals at 6 and 16 mod 20 wait 17 and 7 for departures at 3 mod 20
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1000);
  double waited = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) waited += net.ride(*p, u(rng)).waited;
  EXPECT_NEAR(waited / n, 5.0 + 12.0, 0.1);

  // an incommensurate headway recovers the half-headway mean
  const double h = 10.0 * std::sqrt(2.0);
  TransitNetwork irr(st, {{0, {0, 1}, 10.0, 0.0, 80.0}, {1, {1, 2}, h, 3.0, 80.0}}, table_speeds());
  const auto& q = irr.planned_path(0, 2);
  ASSERT_TRUE(q);
  EXPECT_DOUBLE_EQ(q->expected_wait, 5.0 + h / 2);
  std::uniform_real_distribution<double> wide(0, 1e6);
  waited = 0.0;
  for (int k = 0; k < n; ++k) waited += irr.ride(*q, wide(rng)).waited;
  EXPECT_NEAR(waited / n, 5.0 + h / 2, 0.15);
}

TEST(Transit, UnconnectedPair) {
  std::vector<TransitStation> st{{0, {0, 0}, {}}, {1, {1, 0}, {}}, {2, {0, 5}, {}}, {3, {1, 5}, {}}};
  TransitNetwork net(st, {{0, {0, 1}, 10, 0, 80}, {1, {2, 3}, 10, 0, 80}}, table_speeds());
  EXPECT_FALSE(net.planned_path(0, 3));
  EXPECT_FALSE(net.planned_cost(1, 2));
}

TEST(Transit, NextDeparture) {
  const auto net = single_line(10, 0, {{0, 0}, {20, 0}});
  EXPECT_DOUBLE_EQ(net.next_departure(0, 0, Direction::forward, 12), 20);
  EXPECT_DOUBLE_EQ(net.next_departure(0, 0, Direction::forward, 20), 20);
  const auto off = single_line(7, 3, {{0, 0}, {20, 0}});
  EXPECT_DOUBLE_EQ(off.next_departure(0, 0, Direction::forward, 0), 3);
  // downstream station: the run leaving at 0 reaches km 20 after 15 min
  EXPECT_DOUBLE_EQ(net.next_departure(1, 0, Direction::forward, 14), 15);
  EXPECT_DOUBLE_EQ(net.next_departure(1, 0, Direction::backward, 1), 10);
}

TEST(Transit, HalfHeadwayIsMeanWait) {
  const auto net = single_line(10, 2.5, {{0, 0}, {7, 0}, {20, 0}});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 5000);
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double t = u(rng);
    sum += net.next_departure(1, 0, Direction::backward, t) - t;
  }
  EXPECT_NEAR(sum / n, 5.0, 0.05);
}

TEST(Transit, RejectsBadLines) {
  std::vector<TransitStation> st{{0, {0, 0}, {}}, {1, {1, 0}, {}}};
  EXPECT_THROW(TransitNetwork(st, {{0, {0}, 10, 0, 80}}, table_speeds()), std::invalid_argument);
  EXPECT_THROW(TransitNetwork(st, {{0, {0, 1}, 0, 0, 80}}, table_speeds()), std::invalid_argument);
  EXPECT_THROW(TransitNetwork(st, {{0, {0, 5}, 10, 0, 80}}, table_speeds()), std::invalid_argument);
}
