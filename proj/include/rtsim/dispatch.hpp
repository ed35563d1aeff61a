#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rtsim/demand.hpp"
#include "rtsim/estimation.hpp"
#include "rtsim/tour.hpp"
#include "rtsim/transit.hpp"

namespace rtsim {

/// Service options in tie-break order: fewer committed legs first.
enum class ServiceOption { R = 0, RTW = 1, WTR = 2, RTR = 3 };
inline constexpr std::array<ServiceOption, 4> kAllOptions{ServiceOption::R, ServiceOption::RTW, ServiceOption::WTR,
                                                          ServiceOption::RTR};

inline const char* to_string(ServiceOption o) {
  switch (o) {
    case ServiceOption::R: return "R";
    case ServiceOption::RTW: return "RTW";
    case ServiceOption::WTR: return "WTR";
    case ServiceOption::RTR: return "RTR";
  }
  return "?";
}

inline ServiceOption parse_option(std::string_view s) {
  for (auto o : kAllOptions)
    if (s == to_string(o)) return o;
  throw std::invalid_argument("unknown service option '" + std::string(s) + "'");
}

enum class VehicleStatus { available, serving, repositioning };

inline const char* to_string(VehicleStatus s) {
  switch (s) {
    case VehicleStatus::available: return "available";
    case VehicleStatus::serving: return "serving";
    case VehicleStatus::repositioning: return "repositioning";
  }
  return "?";
}

/// A fleet vehicle. The tour anchor is the vehicle's position at the tour
/// clock.
struct Vehicle {
  int id = 0;
  int capacity = 4;
  VehicleStatus status = VehicleStatus::available;
  Tour tour;
  double drive_minutes = 0.0;       // all driving, relocation included
  double relocation_minutes = 0.0;  // driving toward relocation targets

  Point position() const { return tour.anchor; }
  Point tour_end() const { return tour.stops.empty() ? tour.anchor : tour.stops.back().location; }
};

struct DispatchConfig {
  double gamma = 0.5;
  double beta = 0.0;               // per minute
  int k = 4;                       // stations considered at each end
  int n_nearby = 0;                // candidate vehicles per leg; 0 = whole fleet
  double walk_limit = 30.0;        // minutes per walking leg
  double second_leg_wait_cap = 30.0;
  int reoptimize_limit = 12;       // largest tour (stops) that gets re-sequenced
  bool transit = true;

  TourCost weights() const { return {gamma, beta}; }
  void validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must lie in [0,1]");
    if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (n_nearby < 0) throw std::invalid_argument("n_nearby must be >= 0");
    if (walk_limit < 0.0) throw std::invalid_argument("walk limit must be >= 0");
    if (second_leg_wait_cap < 0.0) throw std::invalid_argument("second-leg wait cap must be >= 0");
  }
};

/// c(v,x) of the vehicle's current commitments. Relocation targets carry no
/// passengers and are not part of the cost.
inline double vehicle_cost(const Tour& tour, const TravelTimeModel& tt, const DispatchConfig& cfg,
                           int capacity = kUnlimitedCapacity) {
  return tour_cost(without_reposition(tour), tt, cfg.weights(), capacity);
}

struct Marginal {
  double delta = 0.0;
  Insertion insertion;
};

/// Added cost of inserting one rideshare leg into the vehicle's tour, or
/// nullopt when capacity rules out every position.
inline std::optional<Marginal> marginal_cost(const Vehicle& v, const Stop& pickup, const Stop& dropoff,
                                             const TravelTimeModel& tt, const DispatchConfig& cfg) {
  auto ins = cheapest_insertion(v.tour, pickup, dropoff, v.capacity, tt, cfg.weights());
  if (!ins) return std::nullopt;
  const double base = vehicle_cost(v.tour, tt, cfg, v.capacity);
  return Marginal{ins->cost - base, std::move(*ins)};
}

/// The `n` vehicles closest (driving time from their current position) to
/// `at`, ties by id; all of them when n is 0 or exceeds the fleet.
inline std::vector<const Vehicle*> nearby(const std::vector<const Vehicle*>& fleet, Point at, const TravelTimeModel& tt,
                                          int n) {
  std::vector<const Vehicle*> out = fleet;
  if (n <= 0 || static_cast<std::size_t>(n) >= out.size()) return out;
  std::stable_sort(out.begin(), out.end(), [&](const Vehicle* a, const Vehicle* b) {
    const double da = tt.vehicle(a->position(), at), db = tt.vehicle(b->position(), at);
    if (da != db) return da < db;
    return a->id < b->id;
  });
  out.resize(static_cast<std::size_t>(n));
  std::sort(out.begin(), out.end(), [](const Vehicle* a, const Vehicle* b) { return a->id < b->id; });
  return out;
}

/// Inputs of the post-transit leg estimate.
struct SecondLegContext {
  const std::vector<const Vehicle*>* fleet = nullptr;
  const ZoneState* zones = nullptr;
  const ZoneSet* zone_set = nullptr;
};

/// Estimated dispatch cost of the deferred rideshare leg from exit station
/// `exit` to `dest` for a passenger alighting at clock `t_exit`. The wait is
/// how long the first idle (or idle-by-then) vehicle needs to reach the
/// station after the passenger gets there; with no such vehicle it falls
/// back to 1/(mu_z m_z) for the station's zone, capped.
inline double rtr_second_leg_estimate(Point exit, Point dest, double now, double t_exit, const SecondLegContext& ctx,
                                      const TravelTimeModel& tt, const DispatchConfig& cfg) {
  double wait = std::numeric_limits<double>::infinity();
  if (ctx.fleet) {
    for (const Vehicle* v : *ctx.fleet) {
      const Tour t = without_reposition(v->tour);
      const double finish = t.clock + tour_length(t, tt);
      if (!t.stops.empty() && finish > t_exit) continue;
      const Point end = t.stops.empty() ? t.anchor : t.stops.back().location;
      const double ready = std::max(finish, now) + tt.vehicle(end, exit);
      wait = std::min(wait, std::max(0.0, ready - t_exit));
    }
  }
  if (!std::isfinite(wait)) {
    wait = cfg.second_leg_wait_cap;
    if (ctx.zones && ctx.zone_set && ctx.fleet) {
      const int z = ctx.zone_set->zone_of(exit);
      int m = 0;
      for (const Vehicle* v : *ctx.fleet)
        if (ctx.zone_set->zone_of(v->tour_end()) == z) ++m;
      const double mu = ctx.zones->mu(static_cast<std::size_t>(z));
      if (m > 0 && mu > 0.0) wait = std::min(wait, 1.0 / (mu * m));
    }
  }
  const double t2 = wait + tt.vehicle(exit, dest);
  return cfg.weights()(t2, t2);
}

/// A dispatch decision. For transit options `path` is the planned station
/// route; the rideshare leg committed now is `pickup` -> `dropoff`.
struct ServicePlan {
  ServiceOption option = ServiceOption::R;
  int vehicle = -1;
  Tour tour;
  double cost = std::numeric_limits<double>::infinity();
  int s1 = -1;
  int s2 = -1;
  std::optional<TransitPath> path;
  Stop pickup;
  Stop dropoff;
  double walk_minutes = 0.0;        // walking leg of RTW / WTR
  double expected_pickup = 0.0;     // clock times along the planned journey
  double expected_dropoff = 0.0;
  double expected_exit = 0.0;       // alighting at s2 (transit options)
  std::array<double, 4> best{};     // cheapest cost per option, +inf if none

  double best_cost(ServiceOption o) const { return best[static_cast<std::size_t>(o)]; }
};

namespace detail {

inline double stop_time(const Tour& t, int request, StopKind kind, const TravelTimeModel& tt) {
  const auto times = schedule(t, tt);
  for (std::size_t i = 0; i < t.stops.size(); ++i)
    if (t.stops[i].request == request && t.stops[i].kind == kind) return times[i];
  throw std::logic_error("stop not in tour");
}

}  // namespace detail

/// Evaluate every option for one request over the candidate vehicles and
/// return the cheapest plan. `network` may be null (transit off). With
/// `rideshare_only` the transit options are skipped (post-transit legs).
inline ServicePlan plan_service(const Request& req, const std::vector<const Vehicle*>& fleet,
                                const TransitNetwork* network, const TravelTimeModel& tt, const DispatchConfig& cfg,
                                double now, const SecondLegContext& ctx = {}, bool rideshare_only = false) {
  if (fleet.empty()) throw std::invalid_argument("no vehicles to dispatch");
  ServicePlan best;
  best.best.fill(std::numeric_limits<double>::infinity());
  const double g1 = 1.0 - cfg.gamma;

  auto consider = [&](ServiceOption opt, const Vehicle* v, const Marginal& m, double extra, int s1, int s2,
                      const TransitPath* path, double walk) {
    const double c = m.delta + extra;
    auto& slot = best.best[static_cast<std::size_t>(opt)];
    slot = std::min(slot, c);
    if (c < best.cost - 1e-9) {
      best.option = opt;
      best.vehicle = v->id;
      best.tour = m.insertion.tour;
      best.cost = c;
      best.s1 = s1;
      best.s2 = s2;
      best.path = path ? std::optional<TransitPath>(*path) : std::nullopt;
      best.pickup = m.insertion.tour.stops[m.insertion.pickup_index];
      best.dropoff = m.insertion.tour.stops[m.insertion.dropoff_index];
      best.walk_minutes = walk;
    }
  };

  // R
  {
    const Stop p = Stop::pickup(req.id, req.origin, req.arrival_time, now);
    const Stop d = Stop::dropoff(req.id, req.destination, req.arrival_time);
    for (const Vehicle* v : nearby(fleet, req.origin, tt, cfg.n_nearby))
      if (auto m = marginal_cost(*v, p, d, tt, cfg)) consider(ServiceOption::R, v, *m, 0.0, -1, -1, nullptr, 0.0);
  }

  const bool transit = cfg.transit && network && network->station_count() > 0 && !rideshare_only;
  if (transit) {
    const auto k = static_cast<std::size_t>(cfg.k);
    const NearestStations entry = network->k_nearest(req.origin, k);
    const NearestStations exit = network->k_nearest(req.destination, k);
    auto station_at = [&](int s) { return network->station(s).location; };

    // Car legs ending at an entry station: shared by RTW and RTR.
    struct FirstLeg {
      const Vehicle* v;
      Marginal m;
    };
    std::vector<std::vector<FirstLeg>> first(entry.stations.size());
    for (std::size_t a = 0; a < entry.stations.size(); ++a) {
      const Stop p = Stop::pickup(req.id, req.origin, req.arrival_time, now);
      const Stop d = Stop::dropoff(req.id, station_at(entry.stations[a]), req.arrival_time);
      for (const Vehicle* v : nearby(fleet, req.origin, tt, cfg.n_nearby))
        if (auto m = marginal_cost(*v, p, d, tt, cfg)) first[a].push_back({v, std::move(*m)});
    }

    // RTW
    for (std::size_t a = 0; a < entry.stations.size(); ++a)
      for (std::size_t b = 0; b < exit.stations.size(); ++b) {
        const int s1 = entry.stations[a], s2 = exit.stations[b];
        const auto& path = network->planned_path(s1, s2);
        const double walk = exit.walk_minutes[b];
        if (s1 == s2 || !path || walk > cfg.walk_limit) continue;
        for (const auto& f : first[a])
          consider(ServiceOption::RTW, f.v, f.m, g1 * (path->total() + walk), s1, s2, &*path, walk);
      }

    // WTR: the vehicle meets the passenger at s2 once the train is in
    for (std::size_t a = 0; a < entry.stations.size(); ++a) {
      const double walk = entry.walk_minutes[a];
      if (walk > cfg.walk_limit) continue;
      for (std::size_t b = 0; b < exit.stations.size(); ++b) {
        const int s1 = entry.stations[a], s2 = exit.stations[b];
        const auto& path = network->planned_path(s1, s2);
        if (s1 == s2 || !path) continue;
        const double ready = now + walk + path->total();
        const Stop p = Stop::pickup(req.id, station_at(s2), req.arrival_time, ready);
        const Stop d = Stop::dropoff(req.id, req.destination, req.arrival_time);
        for (const Vehicle* v : nearby(fleet, station_at(s2), tt, cfg.n_nearby))
          if (auto m = marginal_cost(*v, p, d, tt, cfg))
            consider(ServiceOption::WTR, v, *m, 0.0, s1, s2, &*path, walk);
      }
    }

    // RTR: second leg estimated, not committed
    for (std::size_t a = 0; a < entry.stations.size(); ++a)
      for (std::size_t b = 0; b < exit.stations.size(); ++b) {
        const int s1 = entry.stations[a], s2 = exit.stations[b];
        const auto& path = network->planned_path(s1, s2);
        if (s1 == s2 || !path) continue;
        for (const auto& f : first[a]) {
          const double at_s1 = detail::stop_time(f.m.insertion.tour, req.id, StopKind::dropoff, tt);
          const double t_exit = at_s1 + path->total();
          const double second = rtr_second_leg_estimate(station_at(s2), req.destination, now, t_exit, ctx, tt, cfg);
          consider(ServiceOption::RTR, f.v, f.m, g1 * path->total() + second, s1, s2, &*path, 0.0);
        }
      }
  }

  if (best.vehicle < 0) throw std::logic_error("no feasible insertion for request " + std::to_string(req.id));

  // Re-sequence small tours with nobody aboard; keep whichever is cheaper.
  if (best.tour.onboard.empty() && static_cast<int>(best.tour.stops.size()) <= cfg.reoptimize_limit) {
    const Vehicle* chosen = nullptr;
    for (const Vehicle* v : fleet)
      if (v->id == best.vehicle) chosen = v;
    if (auto re = reoptimize(best.tour, chosen->capacity, tt, cfg.weights())) {
      if (tour_cost(*re, tt, cfg.weights(), chosen->capacity) <
          tour_cost(best.tour, tt, cfg.weights(), chosen->capacity) - 1e-9)
        best.tour = std::move(*re);
    }
  }
  best.expected_pickup = detail::stop_time(best.tour, req.id, StopKind::pickup, tt);
  best.expected_dropoff = detail::stop_time(best.tour, req.id, StopKind::dropoff, tt);
  if (best.path) {
    if (best.option == ServiceOption::WTR)
      best.expected_exit = now + best.walk_minutes + best.path->total();
    else
      best.expected_exit = best.expected_dropoff + best.path->total();
  }
  return best;
}

}  // namespace rtsim
