#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rtsim/geometry.hpp"

namespace rtsim {

struct TransitStation {
  int id = 0;
  Point location;
  std::vector<int> lines;
};

struct TransitLine {
  int id = 0;
  std::vector<int> stations;  // ordered station ids
  double headway = 10.0;      // minutes
  double offset = 0.0;        // first terminal departure, minutes
  double speed_kmh = 80.0;
};

enum class Direction { forward, backward };

struct TransitLeg {
  int line = 0;
  Direction direction = Direction::forward;
  int from = 0;
  int to = 0;
  double ride_minutes = 0.0;
};

/// Planned station-to-station route: expected wait is half the headway per
/// boarding, in-vehicle time comes from the line geometry.
struct TransitPath {
  int entry = 0;
  int exit = 0;
  std::vector<TransitLeg> legs;
  double expected_wait = 0.0;
  double in_vehicle = 0.0;

  double total() const { return expected_wait + in_vehicle; }
  int boardings() const { return static_cast<int>(legs.size()); }
};

/// Outcome of riding a path against the timetable.
struct TransitRide {
  double first_board = 0.0;
  double alight = 0.0;
  double waited = 0.0;
};

struct NearestStations {
  std::vector<int> stations;
  std::vector<double> walk_minutes;
  bool short_list = false;  // fewer than k stations exist
};

/// Immutable transit overlay. Station and line ids equal their positions in
/// the input vectors. Every line runs in both directions; each direction
/// leaves its terminal at offset + n * headway with zero dwell.
class TransitNetwork {
 public:
  TransitNetwork() = default;

  TransitNetwork(std::vector<TransitStation> stations, std::vector<TransitLine> lines, TravelTimeModel tt)
      : stations_(std::move(stations)), lines_(std::move(lines)), tt_(std::move(tt)) {
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (stations_[i].id != static_cast<int>(i)) throw std::invalid_argument("station ids must be 0..n-1 in order");
      stations_[i].lines.clear();
    }
    position_.assign(lines_.size(), {});
    cumulative_.assign(lines_.size(), {});
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      auto& line = lines_[l];
      if (line.id != static_cast<int>(l)) throw std::invalid_argument("line ids must be 0..n-1 in order");
      if (line.stations.size() < 2) throw std::invalid_argument("line " + std::to_string(l) + " needs >= 2 stations");
      if (!(line.headway > 0.0)) throw std::invalid_argument("line " + std::to_string(l) + " headway must be > 0");
      if (!(line.speed_kmh > 0.0)) throw std::invalid_argument("line " + std::to_string(l) + " speed must be > 0");
      double acc = 0.0;
      for (std::size_t k = 0; k < line.stations.size(); ++k) {
        const int s = line.stations[k];
        if (s < 0 || s >= static_cast<int>(stations_.size()))
          throw std::invalid_argument("line " + std::to_string(l) + " references unknown station");
        if (position_[l].count(s)) throw std::invalid_argument("line " + std::to_string(l) + " visits a station twice");
        if (k > 0) acc += distance(stations_[line.stations[k - 1]].location, stations_[s].location);
        position_[l][s] = static_cast<int>(k);
        cumulative_[l].push_back(acc);
        stations_[s].lines.push_back(static_cast<int>(l));
      }
    }
    for (const auto& s : stations_)
      if (s.lines.empty()) throw std::invalid_argument("station " + std::to_string(s.id) + " belongs to no line");
    build_paths();
  }

  std::size_t station_count() const { return stations_.size(); }
  const std::vector<TransitStation>& stations() const { return stations_; }
  const std::vector<TransitLine>& lines() const { return lines_; }
  const TransitStation& station(int id) const { return stations_.at(static_cast<std::size_t>(id)); }
  const TravelTimeModel& travel_times() const { return tt_; }

  /// The k stations closest on foot to p, ascending, ties by station id.
  NearestStations k_nearest(Point p, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    std::vector<std::pair<double, int>> d;
    d.reserve(stations_.size());
    for (const auto& s : stations_) d.emplace_back(tt_.walk(p, s.location), s.id);
    NearestStations out;
    out.short_list = d.size() < k;
    const std::size_t n = std::min(k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n), d.end());
    for (std::size_t i = 0; i < n; ++i) {
      out.stations.push_back(d[i].second);
      out.walk_minutes.push_back(d[i].first);
    }
    return out;
  }

  /// Planned cost between two stations, or nullopt when no route with at
  /// most one in-network transfer exists.
  const std::optional<TransitPath>& planned_path(int entry, int exit) const {
    return paths_.at(static_cast<std::size_t>(entry) * stations_.size() + static_cast<std::size_t>(exit));
  }

  double ride_minutes(int line, int from, int to) const {
    const auto& cum = cumulative_.at(static_cast<std::size_t>(line));
    const double km = std::abs(cum[static_cast<std::size_t>(index_on(line, to))] -
                               cum[static_cast<std::size_t>(index_on(line, from))]);
    return km / lines_[static_cast<std::size_t>(line)].speed_kmh * 60.0;
  }

  /// Earliest scheduled departure at or after t from `station` on `line`
  /// heading in `direction`.
  double next_departure(int station, int line, Direction direction, double t) const {
    const auto& l = lines_.at(static_cast<std::size_t>(line));
    const auto& cum = cumulative_[static_cast<std::size_t>(line)];
    const auto idx = static_cast<std::size_t>(index_on(line, station));
    const double km_from_terminal = direction == Direction::forward ? cum[idx] : cum.back() - cum[idx];
    const double base = l.offset + km_from_terminal / l.speed_kmh * 60.0;
    const double n = std::ceil((t - base) / l.headway - 1e-9);
    return base + n * l.headway;
  }

  /// Ride a planned path starting at the entry station at time t.
  TransitRide ride(const TransitPath& path, double t) const {
    TransitRide r{t, t, 0.0};
    bool first = true;
    for (const auto& leg : path.legs) {
      const double dep = next_departure(leg.from, leg.line, leg.direction, t);
      if (first) r.first_board = dep;
      first = false;
      r.waited += dep - t;
      t = dep + leg.ride_minutes;
    }
    r.alight = t;
    return r;
  }

  /// Expected wait and in-vehicle minutes of the planned route.
  std::optional<std::pair<double, double>> planned_cost(int entry, int exit) const {
    const auto& p = planned_path(entry, exit);
    if (!p) return std::nullopt;
    return std::make_pair(p->expected_wait, p->in_vehicle);
  }

  bool on_line(int line, int station) const {
    return position_.at(static_cast<std::size_t>(line)).count(station) > 0;
  }

 private:
  int index_on(int line, int station) const {
    const auto& pos = position_.at(static_cast<std::size_t>(line));
    const auto it = pos.find(station);
    if (it == pos.end()) throw std::invalid_argument("station not on line");
    return it->second;
  }

  TransitLeg make_leg(int line, int from, int to) const {
    const Direction dir = index_on(line, to) > index_on(line, from) ? Direction::forward : Direction::backward;
    return {line, dir, from, to, ride_minutes(line, from, to)};
  }

  void build_paths() {
    const std::size_t n = stations_.size();
    paths_.assign(n * n, std::nullopt);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const int s1 = static_cast<int>(a);
        const int s2 = static_cast<int>(b);
        if (a == b) {
          paths_[a * n + b] = TransitPath{s1, s2, {}, 0.0, 0.0};
          continue;
        }
        std::optional<TransitPath> best;
        auto consider = [&](TransitPath p) {
          if (!best || p.total() < best->total() - 1e-12) best = std::move(p);
        };
        for (int l1 : stations_[a].lines) {
          if (on_line(l1, s2)) {
            TransitLeg leg = make_leg(l1, s1, s2);
            const double wait = 0.5 * lines_[static_cast<std::size_t>(l1)].headway;
            consider(TransitPath{s1, s2, {leg}, wait, leg.ride_minutes});
          }
          for (int l2 : stations_[b].lines) {
            if (l2 == l1) continue;
            for (int x : lines_[static_cast<std::size_t>(l1)].stations) {
              if (x == s1 || x == s2 || !on_line(l2, x)) continue;
              TransitLeg first = make_leg(l1, s1, x);
              TransitLeg second = make_leg(l2, x, s2);
              const double wait = 0.5 * (lines_[static_cast<std::size_t>(l1)].headway +
                                         lines_[static_cast<std::size_t>(l2)].headway);
              consider(TransitPath{s1, s2, {first, second}, wait, first.ride_minutes + second.ride_minutes});
            }
          }
        }
        paths_[a * n + b] = std::move(best);
      }
    }
  }

  std::vector<TransitStation> stations_;
  std::vector<TransitLine> lines_;
  TravelTimeModel tt_;
  std::vector<std::map<int, int>> position_;
  std::vector<std::vector<double>> cumulative_;
  std::vector<std::optional<TransitPath>> paths_;
};

}  // namespace rtsim
