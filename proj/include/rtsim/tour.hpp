#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rtsim/geometry.hpp"

namespace rtsim {

enum class StopKind { pickup, dropoff, reposition };

inline constexpr double kNoReadyTime = -std::numeric_limits<double>::infinity();

/// One stop of a vehicle tour. `request` identifies a passenger leg;
/// `reference` is the time that leg's journey clock started (used for the
/// journey time Y). Pickups may carry a `ready` time before which the
/// passenger is not at the stop and the vehicle waits.
struct Stop {
  StopKind kind = StopKind::pickup;
  int request = -1;
  Point location;
  double reference = 0.0;
  double ready = kNoReadyTime;

  static Stop pickup(int request, Point at, double reference, double ready = kNoReadyTime) {
    return {StopKind::pickup, request, at, reference, ready};
  }
  static Stop dropoff(int request, Point at, double reference) {
    return {StopKind::dropoff, request, at, reference, kNoReadyTime};
  }
  static Stop reposition(Point at) { return {StopKind::reposition, -1, at, 0.0, kNoReadyTime}; }
};

/// Ordered stops starting from `anchor` at time `clock`. Passengers in
/// `onboard` are already in the vehicle and only have their dropoff here.
struct Tour {
  Point anchor;
  double clock = 0.0;
  std::vector<Stop> stops;
  std::vector<int> onboard;

  bool empty() const { return stops.empty(); }
  bool has_passenger_stops() const {
    return std::any_of(stops.begin(), stops.end(), [](const Stop& s) { return s.kind != StopKind::reposition; });
  }
};

/// c(v,x) = gamma*T + (1-gamma)*(beta*T^2 + sum Y). gamma = 1, beta = 0
/// gives plain tour length.
struct TourCost {
  double gamma = 1.0;
  double beta = 0.0;

  double operator()(double length, double total_journey) const {
    return gamma * length + (1.0 - gamma) * (beta * length * length + total_journey);
  }
};

struct TourMetrics {
  double length = 0.0;         // T, minutes from the anchor clock to the last stop
  double total_journey = 0.0;  // sum of Y over passengers with a dropoff
  std::vector<std::pair<int, double>> journeys;
  std::vector<double> service_times;  // completion time of each stop
};

inline constexpr int kUnlimitedCapacity = std::numeric_limits<int>::max();

/// Throws std::logic_error on precedence or capacity violations.
inline void validate(const Tour& tour, int capacity = kUnlimitedCapacity) {
  std::set<int> inside(tour.onboard.begin(), tour.onboard.end());
  if (inside.size() != tour.onboard.size()) throw std::logic_error("tour: duplicate onboard passenger");
  if (static_cast<int>(inside.size()) > capacity) throw std::logic_error("tour: onboard count exceeds capacity at anchor");
  std::set<int> picked;
  std::set<int> dropped;
  for (const auto& s : tour.stops) {
    switch (s.kind) {
      case StopKind::pickup:
        if (inside.count(s.request) || picked.count(s.request) || dropped.count(s.request))
          throw std::logic_error("tour: request " + std::to_string(s.request) + " picked up twice");
        picked.insert(s.request);
        inside.insert(s.request);
        if (static_cast<int>(inside.size()) > capacity)
          throw std::logic_error("tour: capacity exceeded after pickup of " + std::to_string(s.request));
        break;
      case StopKind::dropoff:
        if (!inside.count(s.request))
          throw std::logic_error("tour: dropoff of " + std::to_string(s.request) + " before its pickup");
        inside.erase(s.request);
        dropped.insert(s.request);
        break;
      case StopKind::reposition:
        if (s.request != -1) throw std::logic_error("tour: reposition stop carries a request");
        break;
    }
  }
  if (!inside.empty()) throw std::logic_error("tour: passenger " + std::to_string(*inside.begin()) + " never dropped off");
}

/// Forward simulation of the tour: completion time of every stop.
inline std::vector<double> schedule(const Tour& tour, const TravelTimeModel& tt) {
  std::vector<double> done;
  done.reserve(tour.stops.size());
  Point at = tour.anchor;
  double t = tour.clock;
  for (const auto& s : tour.stops) {
    t += tt.vehicle(at, s.location);
    if (s.kind == StopKind::pickup) t = std::max(t, s.ready);
    done.push_back(t);
    at = s.location;
  }
  return done;
}

inline double tour_length(const Tour& tour, const TravelTimeModel& tt) {
  if (tour.stops.empty()) return 0.0;
  return schedule(tour, tt).back() - tour.clock;
}

/// T and Y_n for a tour; validates precedence and capacity first.
inline TourMetrics tour_metrics(const Tour& tour, const TravelTimeModel& tt, int capacity = kUnlimitedCapacity) {
  validate(tour, capacity);
  TourMetrics m;
  m.service_times = schedule(tour, tt);
  if (!m.service_times.empty()) m.length = m.service_times.back() - tour.clock;
  for (std::size_t k = 0; k < tour.stops.size(); ++k) {
    const auto& s = tour.stops[k];
    if (s.kind != StopKind::dropoff) continue;
    const double y = m.service_times[k] - s.reference;
    m.journeys.emplace_back(s.request, y);
    m.total_journey += y;
  }
  return m;
}

inline double tour_cost(const Tour& tour, const TravelTimeModel& tt, TourCost w, int capacity = kUnlimitedCapacity) {
  const auto m = tour_metrics(tour, tt, capacity);
  return w(m.length, m.total_journey);
}

/// Copy of `tour` without reposition stops.
inline Tour without_reposition(const Tour& tour) {
  Tour out = tour;
  std::erase_if(out.stops, [](const Stop& s) { return s.kind == StopKind::reposition; });
  return out;
}

struct Insertion {
  Tour tour;
  std::size_t pickup_index = 0;   // position of the pickup in the new tour
  std::size_t dropoff_index = 0;  // position of the dropoff in the new tour
  double length = 0.0;
  double total_journey = 0.0;
  double cost = 0.0;
  double delta_length = 0.0;  // T_new - T_old
};

/// Cheapest feasible insertion of a pickup/dropoff pair. Every pair of
/// positions (pickup before dropoff) is priced exactly, including waiting at
/// pickups with ready times, in O(n^2) overall. Reposition stops are dropped
/// first. Ties go to the smaller pickup index, then the smaller dropoff
/// index. Returns nullopt when capacity rules out every position pair.
inline std::optional<Insertion> cheapest_insertion(const Tour& tour_in, const Stop& pickup, const Stop& dropoff,
                                                   int capacity, const TravelTimeModel& tt, TourCost w = {}) {
  if (pickup.kind != StopKind::pickup || dropoff.kind != StopKind::dropoff || pickup.request != dropoff.request)
    throw std::invalid_argument("cheapest_insertion needs a matching pickup/dropoff pair");
  const Tour tour = without_reposition(tour_in);
  const auto& st = tour.stops;
  const std::size_t n = st.size();

  // 1-based arrays; index 0 is the anchor.
  std::vector<double> arrive(n + 2, 0.0), depart(n + 1, 0.0), slack(n + 2, 0.0);
  std::vector<int> load(n + 1, 0);
  std::vector<int> drops_before(n + 2, 0);  // dropoffs among stops 1..k-1
  std::vector<std::size_t> next_slack(n + 2, n + 1);
  auto loc = [&](std::size_t k) { return k == 0 ? tour.anchor : st[k - 1].location; };

  depart[0] = tour.clock;
  load[0] = static_cast<int>(tour.onboard.size());
  double old_journey = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const Stop& s = st[k - 1];
    arrive[k] = depart[k - 1] + tt.vehicle(loc(k - 1), s.location);
    depart[k] = s.kind == StopKind::pickup ? std::max(arrive[k], s.ready) : arrive[k];
    slack[k] = depart[k] - arrive[k];
    load[k] = load[k - 1] + (s.kind == StopKind::pickup ? 1 : s.kind == StopKind::dropoff ? -1 : 0);
    drops_before[k + 1] = drops_before[k] + (s.kind == StopKind::dropoff ? 1 : 0);
    if (s.kind == StopKind::dropoff) old_journey += depart[k] - s.reference;
  }
  for (std::size_t k = n; k >= 1; --k) next_slack[k] = slack[k] > 1e-12 ? k : next_slack[k + 1];
  const double old_length = n == 0 ? 0.0 : depart[n] - tour.clock;

  // Push an arrival delay `delta` at stop j through the rest of the tour.
  // Adds the resulting dropoff delays to `journey` and returns the delay of
  // the final stop.
  auto propagate = [&](std::size_t j, double delta, double& journey) {
    double s = delta;
    std::size_t m = j;
    while (m <= n && s > 0.0) {
      const std::size_t stop = next_slack[m];
      const std::size_t upto = std::min(stop, n + 1);
      journey += s * (drops_before[upto] - drops_before[m]);
      if (stop > n) return s;
      s = std::max(0.0, s - slack[stop]);
      m = stop + 1;
    }
    return m > n ? s : 0.0;
  };

  std::optional<Insertion> best;
  std::size_t best_i = 0, best_j = 0;
  double best_len = 0.0, best_y = 0.0;
  auto offer = [&](std::size_t i, std::size_t j, double len, double y) {
    const double c = w(len, y);
    if (!best || c < best->cost - 1e-9) {
      best = Insertion{};
      best->cost = c;
      best_i = i;
      best_j = j;
      best_len = len;
      best_y = y;
    }
  };

  for (std::size_t i = 1; i <= n + 1; ++i) {
    // pickup goes between stop i-1 and stop i
    if (load[i - 1] + 1 > capacity) continue;
    const Point prev = loc(i - 1);
    const double pick_arrive = depart[i - 1] + tt.vehicle(prev, pickup.location);
    const double pick_depart = std::max(pick_arrive, pickup.ready);

    {  // dropoff immediately after the pickup
      const double drop_time = pick_depart + tt.vehicle(pickup.location, dropoff.location);
      double journey = old_journey + (drop_time - dropoff.reference);
      double len;
      if (i <= n) {
        const double delta = drop_time + tt.vehicle(dropoff.location, st[i - 1].location) - arrive[i];
        len = old_length + propagate(i, delta, journey);
      } else {
        len = drop_time - tour.clock;
      }
      offer(i, i, len, journey);
    }
    if (i > n) continue;

    // dropoff between stop j-1 and stop j for j > i
    const double delta_i = pick_depart + tt.vehicle(pickup.location, st[i - 1].location) - arrive[i];
    double shift = delta_i;  // arrival delay at the stop being absorbed
    double mid_journey = 0.0;
    for (std::size_t j = i + 1; j <= n + 1; ++j) {
      const std::size_t m = j - 1;  // old stop now sitting between pickup and dropoff
      if (load[m] + 1 > capacity) break;
      shift = std::max(0.0, shift - slack[m]);  // departure delay of stop m
      if (st[m - 1].kind == StopKind::dropoff) mid_journey += shift;
      const double drop_time = depart[m] + shift + tt.vehicle(st[m - 1].location, dropoff.location);
      double journey = old_journey + mid_journey + (drop_time - dropoff.reference);
      double len;
      if (j <= n) {
        const double delta = drop_time + tt.vehicle(dropoff.location, st[j - 1].location) - arrive[j];
        len = old_length + propagate(j, delta, journey);
      } else {
        len = drop_time - tour.clock;
      }
      offer(i, j, len, journey);
    }
  }
  if (!best) return std::nullopt;

  Insertion out;
  out.tour = tour;
  const std::size_t pi = best_i - 1;
  const std::size_t dj = best_j - 1;
  out.tour.stops.insert(out.tour.stops.begin() + static_cast<std::ptrdiff_t>(dj), dropoff);
  out.tour.stops.insert(out.tour.stops.begin() + static_cast<std::ptrdiff_t>(pi), pickup);
  out.pickup_index = pi;
  out.dropoff_index = dj + 1;
  out.length = best_len;
  out.total_journey = best_y;
  out.cost = best->cost;
  out.delta_length = best_len - old_length;
  return out;
}

namespace detail {

inline bool feasible_order(const std::vector<Stop>& stops, const std::vector<int>& onboard, int capacity) {
  std::set<int> inside(onboard.begin(), onboard.end());
  if (static_cast<int>(inside.size()) > capacity) return false;
  for (const auto& s : stops) {
    if (s.kind == StopKind::pickup) {
      inside.insert(s.request);
      if (static_cast<int>(inside.size()) > capacity) return false;
    } else if (s.kind == StopKind::dropoff) {
      if (!inside.erase(s.request)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// 2-opt over the stop sequence: reverse any segment that shortens T while
/// keeping precedence and capacity, until no such segment remains.
inline Tour two_opt(Tour tour, const TravelTimeModel& tt, int capacity = kUnlimitedCapacity) {
  const std::size_t n = tour.stops.size();
  if (n < 2) return tour;
  double current = tour_length(tour, tt);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n && !improved; ++i) {
      for (std::size_t j = i + 1; j < n && !improved; ++j) {
        Tour cand = tour;
        std::reverse(cand.stops.begin() + static_cast<std::ptrdiff_t>(i),
                     cand.stops.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        if (!detail::feasible_order(cand.stops, cand.onboard, capacity)) continue;
        const double len = tour_length(cand, tt);
        if (len < current - 1e-9) {
          tour = std::move(cand);
          current = len;
          improved = true;
        }
      }
    }
  }
  return tour;
}

/// Or-opt: move a run of 1 to 3 consecutive stops to another position
/// (same orientation) when that shortens T and keeps precedence and
/// capacity. First improvement, repeated until none is left.
inline Tour or_opt(Tour tour, const TravelTimeModel& tt, int capacity = kUnlimitedCapacity) {
  const std::size_t n = tour.stops.size();
  if (n < 2) return tour;
  double current = tour_length(tour, tt);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t len = 1; len <= 3 && len < n && !improved; ++len) {
      for (std::size_t i = 0; i + len <= n && !improved; ++i) {
        std::vector<Stop> rest = tour.stops;
        std::vector<Stop> seg(rest.begin() + static_cast<std::ptrdiff_t>(i),
                              rest.begin() + static_cast<std::ptrdiff_t>(i + len));
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i), rest.begin() + static_cast<std::ptrdiff_t>(i + len));
        for (std::size_t k = 0; k <= rest.size() && !improved; ++k) {
          if (k == i) continue;
          Tour cand = tour;
          cand.stops = rest;
          cand.stops.insert(cand.stops.begin() + static_cast<std::ptrdiff_t>(k), seg.begin(), seg.end());
          if (!detail::feasible_order(cand.stops, cand.onboard, capacity)) continue;
          const double l = tour_length(cand, tt);
          if (l < current - 1e-9) {
            tour = std::move(cand);
            current = l;
            improved = true;
          }
        }
      }
    }
  }
  return tour;
}

/// Open Hamiltonian path from the anchor through all dropoffs:
/// nearest-neighbour construction, then 2-opt and Or-opt until neither
/// finds a shorter path.
inline Tour build_delivery_tour(Point anchor, double clock, std::vector<int> onboard, std::vector<Stop> dropoffs,
                                const TravelTimeModel& tt) {
  Tour tour{anchor, clock, {}, std::move(onboard)};
  std::vector<bool> used(dropoffs.size(), false);
  Point at = anchor;
  for (std::size_t step = 0; step < dropoffs.size(); ++step) {
    std::size_t pick = dropoffs.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < dropoffs.size(); ++k) {
      if (used[k]) continue;
      const double d = tt.vehicle(at, dropoffs[k].location);
      if (d < best) {
        best = d;
        pick = k;
      }
    }
    used[pick] = true;
    tour.stops.push_back(dropoffs[pick]);
    at = dropoffs[pick].location;
  }
  double len = tour_length(tour, tt);
  for (;;) {
    tour = or_opt(two_opt(std::move(tour), tt), tt);
    const double next = tour_length(tour, tt);
    if (next >= len - 1e-9) break;
    len = next;
  }
  return tour;
}

/// Re-optimization-based insertion for tours with nobody on board: rebuild
/// the delivery backbone over all dropoffs, then insert each pickup at its
/// cheapest position ahead of its dropoff, then 2-opt. Returns nullopt when
/// passengers are on board (insert-only regime).
inline std::optional<Tour> reoptimize(const Tour& tour_in, int capacity, const TravelTimeModel& tt, TourCost w = {}) {
  const Tour tour = without_reposition(tour_in);
  if (!tour.onboard.empty() || tour.stops.empty()) return std::nullopt;
  std::vector<Stop> drops;
  std::vector<Stop> picks;
  for (const auto& s : tour.stops) (s.kind == StopKind::dropoff ? drops : picks).push_back(s);
  Tour out = build_delivery_tour(tour.anchor, tour.clock, {}, drops, tt);
  for (const auto& p : picks) {
    const auto drop_at = std::find_if(out.stops.begin(), out.stops.end(), [&](const Stop& s) {
      return s.kind == StopKind::dropoff && s.request == p.request;
    });
    const auto limit = static_cast<std::size_t>(drop_at - out.stops.begin());
    std::optional<Tour> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos <= limit; ++pos) {
      Tour cand = out;
      cand.stops.insert(cand.stops.begin() + static_cast<std::ptrdiff_t>(pos), p);
      // dropoffs whose pickups are not inserted yet are left out of pricing
      std::vector<Stop> priced;
      for (const auto& s : cand.stops) {
        if (s.kind == StopKind::dropoff && std::none_of(cand.stops.begin(), cand.stops.end(), [&](const Stop& q) {
              return q.kind == StopKind::pickup && q.request == s.request;
            }))
          continue;
        priced.push_back(s);
      }
      if (!detail::feasible_order(priced, {}, capacity)) continue;
      Tour pricing{cand.anchor, cand.clock, priced, {}};
      const double c = tour_cost(pricing, tt, w);
      if (c < best_cost - 1e-9) {
        best_cost = c;
        best = std::move(cand);
      }
    }
    if (!best) return std::nullopt;
    out = std::move(*best);
  }
  out = two_opt(std::move(out), tt, capacity);
  return out;
}

}  // namespace rtsim
