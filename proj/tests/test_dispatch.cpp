#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "rtsim/dispatch.hpp"
#include "rtsim/scenario.hpp"

using namespace rtsim;

namespace {

const TravelTimeModel kKmPerMin(60.0, 5.0, 80.0);
constexpr double kNone = std::numeric_limits<double>::infinity();

Vehicle idle_at(int id, Point p, double clock = 0.0) {
  Vehicle v;
  v.id = id;
  v.tour = Tour{p, clock, {}, {}};
  return v;
}

std::vector<const Vehicle*> ptrs(const std::vector<Vehicle>& f) {
  std::vector<const Vehicle*> out;
  for (const auto& v : f) out.push_back(&v);
  return out;
}

Request request(int id, Point o, Point d, double t = 0.0) {
  Request r;
  r.id = id;
  r.origin = o;
  r.destination = d;
  r.arrival_time = t;
  return r;
}

// Random fleet: some idle, some carrying requests, some with passengers aboard.
std::vector<Vehicle> random_fleet(std::mt19937_64& rng, int n, double now, int first_request) {
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> kind(0, 3);
  std::vector<Vehicle> fleet;
  int rid = first_request;
  for (int i = 0; i < n; ++i) {
    Vehicle v = idle_at(i, {u(rng), u(rng)}, now);
    switch (kind(rng)) {
      case 0: break;
      case 1:
        v.tour.stops = {Stop::pickup(rid, {u(rng), u(rng)}, now - 2), Stop::dropoff(rid, {u(rng), u(rng)}, now - 2)};
        ++rid;
        break;
      case 2:
        v.tour.onboard = {rid};
        v.tour.stops = {Stop::dropoff(rid, {u(rng), u(rng)}, now - 8)};
        ++rid;
        break;
      default:
        v.status = VehicleStatus::repositioning;
        v.tour.stops = {Stop::reposition({u(rng), u(rng)})};
    }
    if (!v.tour.stops.empty() && v.status != VehicleStatus::repositioning) v.status = VehicleStatus::serving;
    fleet.push_back(std::move(v));
  }
  return fleet;
}

double replay_cost(const Tour& t, const TravelTimeModel& tt, TourCost w) {
  Tour c = t;
  std::erase_if(c.stops, [](const Stop& s) { return s.kind == StopKind::reposition; });
  const auto r = oracle::replay(c, tt);
  return w.gamma * r.end + (1.0 - w.gamma) * (w.beta * r.end * r.end + r.sum_y);
}

struct Scan {
  std::array<double, 4> best{kNone, kNone, kNone, kNone};
  double cost = kNone;
  double runner_up = kNone;
  ServiceOption option = ServiceOption::R;
  int vehicle = -1, s1 = -1, s2 = -1;

  void offer(ServiceOption o, int v, int a, int b, double c) {
    auto& slot = best[static_cast<std::size_t>(o)];
    slot = std::min(slot, c);
    if (c < cost) {
      runner_up = cost;
      cost = c;
      option = o;
      vehicle = v;
      s1 = a;
      s2 = b;
    } else {
      runner_up = std::min(runner_up, c);
    }
  }
};

std::vector<std::pair<double, int>> stations_by_distance(const TransitNetwork& net, Point p) {
  std::vector<std::pair<double, int>> all;
  for (const auto& s : net.stations()) all.emplace_back(distance(p, s.location), s.id);
  std::sort(all.begin(), all.end());
  return all;
}

// Every option x station pair x vehicle, priced from scratch.
Scan exhaustive(const Request& r, const std::vector<Vehicle>& fleet, const TransitNetwork& net,
                const TravelTimeModel& tt, const DispatchConfig& cfg, double now) {
  const TourCost w = cfg.weights();
  const double g1 = 1.0 - cfg.gamma;
  Scan s;
  auto delta = [&](const Vehicle& v, const Stop& p, const Stop& d) -> std::optional<double> {
    const auto b = oracle::brute_insertion(v.tour, p, d, v.capacity, tt, w);
    if (!b) return std::nullopt;
    return b->cost - replay_cost(v.tour, tt, w);
  };
  for (const auto& v : fleet)
    if (auto c = delta(v, Stop::pickup(r.id, r.origin, r.arrival_time, now),
                       Stop::dropoff(r.id, r.destination, r.arrival_time)))
      s.offer(ServiceOption::R, v.id, -1, -1, *c);

  const auto in = stations_by_distance(net, r.origin);
  const auto out = stations_by_distance(net, r.destination);
  for (int a = 0; a < cfg.k; ++a)
    for (int b = 0; b < cfg.k; ++b) {
      const int s1 = in[static_cast<std::size_t>(a)].second, s2 = out[static_cast<std::size_t>(b)].second;
      const auto path = net.planned_cost(s1, s2);
      if (s1 == s2 || !path) continue;
      const double transit = path->first + path->second;
      const Point p1 = net.station(s1).location, p2 = net.station(s2).location;
      const double walk_in = tt.walk(r.origin, p1), walk_out = tt.walk(p2, r.destination);
      for (const auto& v : fleet) {
        // first rideshare leg to s1
        const auto b1 = oracle::brute_insertion(v.tour, Stop::pickup(r.id, r.origin, r.arrival_time, now),
                                                Stop::dropoff(r.id, p1, r.arrival_time), v.capacity, tt, w);
        if (b1) {
          const double d1 = b1->cost - replay_cost(v.tour, tt, w);
          if (walk_out <= cfg.walk_limit) s.offer(ServiceOption::RTW, v.id, s1, s2, d1 + g1 * (transit + walk_out));
          // arrival at s1 in the cheapest tour, then the estimated second leg
          Tour t = v.tour;
          std::erase_if(t.stops, [](const Stop& x) { return x.kind == StopKind::reposition; });
          t.stops.insert(t.stops.begin() + static_cast<std::ptrdiff_t>(b1->j - 1), Stop::dropoff(r.id, p1, 0));
          t.stops.insert(t.stops.begin() + static_cast<std::ptrdiff_t>(b1->i),
                         Stop::pickup(r.id, r.origin, r.arrival_time, now));
          double clock = t.clock;
          Point at = t.anchor;
          for (const auto& x : t.stops) {
            clock = std::max(clock + tt.vehicle(at, x.location), x.kind == StopKind::pickup ? x.ready : 0.0);
            at = x.location;
            if (x.kind == StopKind::dropoff && x.request == r.id) break;
          }
          const double t_exit = clock + transit;
          double wait = kNone;
          for (const auto& u : fleet) {
            Tour q = u.tour;
            std::erase_if(q.stops, [](const Stop& x) { return x.kind == StopKind::reposition; });
            const double finish = q.clock + oracle::replay(q, tt).end;
            if (!q.stops.empty() && finish > t_exit) continue;
            const Point end = q.stops.empty() ? q.anchor : q.stops.back().location;
            wait = std::min(wait, std::max(0.0, std::max(finish, now) + tt.vehicle(end, p2) - t_exit));
          }
          if (!std::isfinite(wait)) wait = cfg.second_leg_wait_cap;
          const double t2 = wait + tt.vehicle(p2, r.destination);
          s.offer(ServiceOption::RTR, v.id, s1, s2, d1 + g1 * transit + w(t2, t2));
        }
        if (walk_in <= cfg.walk_limit) {
          if (auto c = delta(v, Stop::pickup(r.id, p2, r.arrival_time, now + walk_in + transit),
                             Stop::dropoff(r.id, r.destination, r.arrival_time)))
            s.offer(ServiceOption::WTR, v.id, s1, s2, *c);
        }
      }
    }
  return s;
}

}  // namespace

TEST(VehicleCost, DirectEvaluation) {
  // T = 5, sum Y = 5 on a 1 km/min tour
  Tour t{{0, 0}, 0.0, {Stop::pickup(0, {0, 3}, 0.0), Stop::dropoff(0, {0, 5}, 0.0)}, {}};
  DispatchConfig cfg;
  EXPECT_NEAR(vehicle_cost(t, kKmPerMin, cfg), 5.0, 1e-12);
  cfg.beta = 0.1;
  EXPECT_NEAR(vehicle_cost(t, kKmPerMin, cfg), 6.25, 1e-12);
  cfg.gamma = 1.0;
  EXPECT_NEAR(vehicle_cost(t, kKmPerMin, cfg), 5.0, 1e-12);
}

TEST(VehicleCost, RepositionStopsCostNothing) {
  Tour t{{0, 0}, 0.0, {Stop::reposition({9, 9})}, {}};
  EXPECT_EQ(vehicle_cost(t, kKmPerMin, DispatchConfig{}), 0.0);
}

TEST(MarginalCost, IdleVehicleAtPickup) {
  const Vehicle v = idle_at(0, {1, 1});
  const auto m = marginal_cost(v, Stop::pickup(7, {1, 1}, 0.0), Stop::dropoff(7, {1, 5}, 0.0), kKmPerMin,
                               DispatchConfig{});
  ASSERT_TRUE(m);
  EXPECT_NEAR(m->delta, 4.0, 1e-12);
}

TEST(MarginalCost, TourEndingAtPickupBeatsEquidistantIdleVehicle) {
  Vehicle busy = idle_at(0, {0, 0});
  busy.tour.onboard = {1};
  busy.tour.stops = {Stop::dropoff(1, {3, 0}, 0.0)};
  const Vehicle idle = idle_at(1, {6, 0});  // 3 away from the pickup, like busy's current position
  const Stop p = Stop::pickup(9, {3, 0}, 0.0), d = Stop::dropoff(9, {3, 4}, 0.0);
  const DispatchConfig cfg;
  const auto a = marginal_cost(busy, p, d, kKmPerMin, cfg);
  const auto b = marginal_cost(idle, p, d, kKmPerMin, cfg);
  ASSERT_TRUE(a && b);
  EXPECT_LT(a->delta, b->delta);
}

TEST(MarginalCost, FullVehicleIsInfeasible) {
  Vehicle v = idle_at(0, {0, 0});
  v.capacity = 1;
  v.tour.onboard = {1};
  v.tour.stops = {Stop::dropoff(1, {5, 0}, 0.0)};
  // the only feasible slot is after the dropoff
  const auto m = marginal_cost(v, Stop::pickup(2, {1, 0}, 0.0), Stop::dropoff(2, {2, 0}, 0.0), kKmPerMin,
                               DispatchConfig{});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->insertion.pickup_index, 1u);
}

TEST(Nearby, PicksClosestTiesById) {
  std::vector<Vehicle> f = {idle_at(0, {5, 0}), idle_at(1, {1, 0}), idle_at(2, {-1, 0}), idle_at(3, {2, 0})};
  const auto n = nearby(ptrs(f), {0, 0}, kKmPerMin, 2);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0]->id, 1);
  EXPECT_EQ(n[1]->id, 2);
  EXPECT_EQ(nearby(ptrs(f), {0, 0}, kKmPerMin, 0).size(), 4u);
}

TEST(PlanService, ChosenVehicleMatchesExhaustiveRideshareOnly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  DispatchConfig cfg;
  cfg.transit = false;
  for (int trial = 0; trial < 60; ++trial) {
    auto fleet = random_fleet(rng, 3, 20.0, 100);
    const Request r = request(1, {u(rng), u(rng)}, {u(rng), u(rng)}, 20.0);
    const auto plan = plan_service(r, ptrs(fleet), nullptr, kKmPerMin, cfg, 20.0);
    EXPECT_EQ(plan.option, ServiceOption::R);
    double best = kNone;
    for (const auto& v : fleet) {
      const auto b = oracle::brute_insertion(v.tour, Stop::pickup(1, r.origin, 20.0, 20.0),
                                             Stop::dropoff(1, r.destination, 20.0), v.capacity, kKmPerMin,
                                             cfg.weights());
      if (b) best = std::min(best, b->cost - replay_cost(v.tour, kKmPerMin, cfg.weights()));
    }
    EXPECT_NEAR(plan.cost, best, 1e-9);
  }
}

TEST(PlanService, NoTransitMeansRideshareOnly) {
  std::vector<Vehicle> f = {idle_at(0, {0, 0})};
  const auto plan = plan_service(request(0, {1, 1}, {8, 8}), ptrs(f), nullptr, kKmPerMin, DispatchConfig{}, 0.0);
  EXPECT_EQ(plan.option, ServiceOption::R);
  EXPECT_EQ(plan.s1, -1);
  EXPECT_EQ(plan.best_cost(ServiceOption::RTR), kNone);
}

TEST(PlanService, WalkToTrainThenShortRideWins) {
  // o sits on s1; 100 min direct drive; 20 min of transit; idle vehicle at s2, 5 min from d
  const TravelTimeModel tt(60.0, 5.0, 60.0);
  std::vector<TransitStation> st = {{0, {0, 0}, {}}, {1, {100, 0}, {}}};
  const TransitNetwork net(st, {{0, {0, 1}, 30.0, 0.0, 600.0}}, tt);  // 10 min ride + 15 min planned wait
  std::vector<Vehicle> f = {idle_at(0, {100, 0})};
  DispatchConfig cfg;
  cfg.k = 1;
  const auto plan = plan_service(request(0, {0, 0}, {100, 5}), ptrs(f), &net, tt, cfg, 0.0);
  EXPECT_EQ(plan.option, ServiceOption::WTR);
  EXPECT_EQ(plan.s1, 0);
  EXPECT_EQ(plan.s2, 1);
  EXPECT_LT(plan.cost, plan.best_cost(ServiceOption::R));
}

TEST(PlanService, MatchesExhaustiveScanOnSyntheticGrid) {
  const auto sc = load_scenario_file(std::string(RTSIM_SOURCE_DIR) + "/scenarios/synthetic_grid.json");
  const auto& net = *sc.network.transit;
  const auto& tt = sc.network.tt;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  DispatchConfig cfg = sc.sim.dispatch;
  cfg.reoptimize_limit = 0;
  int compared = 0;
  std::array<int, 4> seen{};
  for (int trial = 0; trial < 40; ++trial) {
    const double now = 30.0;
    auto fleet = random_fleet(rng, 5, now, 100);
    const Request r = request(1, {u(rng), u(rng)}, {u(rng), u(rng)}, now);
    const auto cands = ptrs(fleet);
    const auto plan = plan_service(r, cands, &net, tt, cfg, now, SecondLegContext{&cands, nullptr, nullptr});
    const Scan s = exhaustive(r, fleet, net, tt, cfg, now);
    for (std::size_t o = 0; o < 4; ++o) {
      if (std::isfinite(s.best[o]))
        EXPECT_NEAR(plan.best[o], s.best[o], 1e-6) << "trial " << trial << " option " << o;
      else
        EXPECT_EQ(plan.best[o], kNone);
    }
    EXPECT_NEAR(plan.cost, s.cost, 1e-6);
    if (s.runner_up - s.cost > 1e-6) {
      ++compared;
      EXPECT_EQ(plan.option, s.option) << "trial " << trial;
      EXPECT_EQ(plan.vehicle, s.vehicle) << "trial " << trial;
      EXPECT_EQ(plan.s1, s.s1) << "trial " << trial;
      EXPECT_EQ(plan.s2, s.s2) << "trial " << trial;
    }
    ++seen[static_cast<std::size_t>(plan.option)];
  }
  EXPECT_GT(compared, 30);
  EXPECT_GT(seen[static_cast<std::size_t>(ServiceOption::R)] + seen[static_cast<std::size_t>(ServiceOption::RTR)], 0);
}

TEST(PlanService, ArgminOverEvaluatedOptions) {
  const auto sc = load_scenario_file(std::string(RTSIM_SOURCE_DIR) + "/scenarios/synthetic_grid.json");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 30; ++trial) {
    auto fleet = random_fleet(rng, 6, 0.0, 100);
    const auto cands = ptrs(fleet);
    const auto plan = plan_service(request(1, {u(rng), u(rng)}, {u(rng), u(rng)}), cands, &*sc.network.transit,
                                   sc.network.tt, sc.sim.dispatch, 0.0, SecondLegContext{&cands, nullptr, nullptr});
    for (double c : plan.best) EXPECT_LE(plan.best_cost(plan.option), c + 1e-12);
    // one rideshare leg is committed, never two
    int pickups = 0;
    for (const auto& s : plan.tour.stops) pickups += s.kind == StopKind::pickup && s.request == 1;
    EXPECT_EQ(pickups, 1);
    if (plan.path) EXPECT_LE(plan.path->boardings(), 2);
  }
}

TEST(PlanService, UnitGammaIsMinimumAddedTourTime) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10, 10);
  DispatchConfig cfg;
  cfg.gamma = 1.0;
  cfg.transit = false;
  cfg.reoptimize_limit = 0;
  const TravelTimeModel tt(36, 5, 80);
  for (int trial = 0; trial < 50; ++trial) {
    auto fleet = random_fleet(rng, 4, 0.0, 100);
    const Request r = request(1, {u(rng), u(rng)}, {u(rng), u(rng)});
    const auto plan = plan_service(r, ptrs(fleet), nullptr, tt, cfg, 0.0);
    // direct: minimum over vehicles and positions of new length minus old length
    double best = kNone;
    for (const auto& v : fleet) {
      Tour base = v.tour;
      std::erase_if(base.stops, [](const Stop& s) { return s.kind == StopKind::reposition; });
      const double old_len = oracle::replay(base, tt).end;
      for (std::size_t i = 0; i <= base.stops.size(); ++i)
        for (std::size_t j = i; j <= base.stops.size(); ++j) {
          Tour c = base;
          c.stops.insert(c.stops.begin() + static_cast<std::ptrdiff_t>(j), Stop::dropoff(1, r.destination, 0));
          c.stops.insert(c.stops.begin() + static_cast<std::ptrdiff_t>(i), Stop::pickup(1, r.origin, 0));
          if (oracle::order_ok(c, v.capacity)) best = std::min(best, oracle::replay(c, tt).end - old_len);
        }
    }
    EXPECT_NEAR(plan.cost, best, 1e-9);
  }
}

TEST(PlanService, EmptyFleetIsAnError) {
  EXPECT_THROW(plan_service(request(0, {0, 0}, {1, 1}), {}, nullptr, kKmPerMin, DispatchConfig{}, 0.0),
               std::invalid_argument);
}

TEST(SecondLeg, IdleVehicleAtExit) {
  std::vector<Vehicle> f = {idle_at(0, {2, 0}), idle_at(1, {9, 9})};
  const auto c = ptrs(f);
  DispatchConfig cfg;
  const double e = rtr_second_leg_estimate({2, 0}, {2, 3}, 0.0, 10.0, SecondLegContext{&c, nullptr, nullptr},
                                           kKmPerMin, cfg);
  EXPECT_NEAR(e, cfg.weights()(3.0, 3.0), 1e-12);
}

TEST(SecondLeg, VehicleArrivingLateAddsWait) {
  std::vector<Vehicle> f = {idle_at(0, {0, 0})};
  const auto c = ptrs(f);
  const double e = rtr_second_leg_estimate({10, 0}, {10, 2}, 0.0, 4.0, SecondLegContext{&c, nullptr, nullptr},
                                           kKmPerMin, DispatchConfig{});
  EXPECT_NEAR(e, 6.0 + 2.0, 1e-12);
}

TEST(SecondLeg, FallsBackToZoneRateWhenEveryoneIsBusy) {
  const ZoneSet zones = ZoneSet::grid({-10, -10, 10, 10}, 2, 2);
  EstimationConfig ec;
  ec.mu0 = 0.05;
  ZoneState zs(zones, ec);
  Vehicle busy = idle_at(0, {5, 5});
  busy.tour.onboard = {3};
  busy.tour.stops = {Stop::dropoff(3, {6, 6}, 0.0)};
  Vehicle busy2 = busy;
  busy2.id = 1;
  std::vector<Vehicle> f = {busy, busy2};
  const auto c = ptrs(f);
  DispatchConfig cfg;
  // both vehicles end in the exit's zone: wait = 1 / (0.05 * 2) = 10
  const double e =
      rtr_second_leg_estimate({5, 5}, {5, 8}, 0.0, 0.0, SecondLegContext{&c, &zs, &zones}, kKmPerMin, cfg);
  EXPECT_NEAR(e, 13.0, 1e-12);
  // without zone data the cap applies
  const double capped =
      rtr_second_leg_estimate({5, 5}, {5, 8}, 0.0, 0.0, SecondLegContext{&c, nullptr, nullptr}, kKmPerMin, cfg);
  EXPECT_NEAR(capped, 33.0, 1e-12);
}

TEST(SecondLeg, DestinationAtExitStationPrefersWalking) {
  const TravelTimeModel tt(36.0, 5.0, 80.0);
  std::vector<TransitStation> st = {{0, {0, 0}, {}}, {1, {8, 0}, {}}};
  const TransitNetwork net(st, {{0, {0, 1}, 10.0, 0.0, 80.0}}, tt);
  std::vector<Vehicle> f = {idle_at(0, {-3, 0}), idle_at(1, {8, 0})};
  const auto c = ptrs(f);
  DispatchConfig cfg;
  cfg.k = 1;
  const auto plan =
      plan_service(request(0, {-2, 0}, {8, 0}), c, &net, tt, cfg, 0.0, SecondLegContext{&c, nullptr, nullptr});
  EXPECT_LE(plan.best_cost(ServiceOption::RTW), plan.best_cost(ServiceOption::RTR));
  EXPECT_NE(plan.option, ServiceOption::RTR);
}

TEST(Options, RoundTripNames) {
  for (auto o : kAllOptions) EXPECT_EQ(parse_option(to_string(o)), o);
  EXPECT_THROW(parse_option("TAXI"), std::invalid_argument);
}

TEST(DispatchConfig, Validation) {
  DispatchConfig c;
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = DispatchConfig{};
  c.k = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
