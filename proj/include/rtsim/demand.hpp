#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtsim/geometry.hpp"

namespace rtsim {

enum class LegRole { primary, rtr_followup };

/// A trip request. Follow-up requests for the post-transit leg of a
/// rideshare-transit-rideshare journey point back at their primary request.
struct Request {
  int id = 0;
  Point origin;
  Point destination;
  double arrival_time = 0.0;  // clock minutes
  LegRole role = LegRole::primary;
  std::optional<int> parent;
};

struct DemandSpec {
  double rate_per_hour = 100.0;
  double horizon = 120.0;  // minutes
  Rect area{-10.0, -10.0, 10.0, 10.0};
  std::uint64_t seed = 1;
  // Optional spatial laws over `zones`: per-zone origin/destination weights,
  // or a full origin-destination weight matrix (row = origin zone).
  std::vector<double> zone_weights;
  std::vector<std::vector<double>> od_weights;
};

namespace detail {

inline Point uniform_in(const Rect& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(r.xmin, r.xmax);
  std::uniform_real_distribution<double> uy(r.ymin, r.ymax);
  const double x = ux(rng);
  return {x, uy(rng)};
}

}  // namespace detail

/// Poisson arrivals over [0, horizon] with i.i.d. endpoints. `zones` is only
/// consulted when the spec carries zone or OD weights.
inline std::vector<Request> generate(const DemandSpec& spec, const ZoneSet* zones = nullptr) {
  if (!(spec.rate_per_hour > 0.0)) throw std::invalid_argument("arrival rate must be > 0");
  if (spec.horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  const bool weighted = !spec.zone_weights.empty() || !spec.od_weights.empty();
  if (weighted && zones == nullptr) throw std::invalid_argument("zone weights need a zone set");
  if (!spec.zone_weights.empty() && spec.zone_weights.size() != zones->size())
    throw std::invalid_argument("zone weight count does not match zones");
  if (!spec.od_weights.empty()) {
    if (spec.od_weights.size() != zones->size()) throw std::invalid_argument("OD matrix size does not match zones");
    for (const auto& row : spec.od_weights)
      if (row.size() != zones->size()) throw std::invalid_argument("OD matrix must be square");
  }

  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gap(spec.rate_per_hour / 60.0);
  std::discrete_distribution<int> zone_pick;
  std::discrete_distribution<int> pair_pick;
  if (!spec.zone_weights.empty()) zone_pick = std::discrete_distribution<int>(spec.zone_weights.begin(), spec.zone_weights.end());
  std::vector<double> flat;
  for (const auto& row : spec.od_weights) flat.insert(flat.end(), row.begin(), row.end());
  if (!flat.empty()) pair_pick = std::discrete_distribution<int>(flat.begin(), flat.end());

  auto draw = [&](int zone) {
    return zone < 0 ? detail::uniform_in(spec.area, rng) : detail::uniform_in((*zones)[static_cast<std::size_t>(zone)].bounds, rng);
  };

  std::vector<Request> out;
  double t = 0.0;
  for (;;) {
    double step = gap(rng);
    while (step <= 0.0) step = gap(rng);
    t += step;
    if (t > spec.horizon) break;
    int oz = -1;
    int dz = -1;
    if (!flat.empty()) {
      const int k = pair_pick(rng);
      oz = k / static_cast<int>(zones->size());
      dz = k % static_cast<int>(zones->size());
    } else if (!spec.zone_weights.empty()) {
      oz = zone_pick(rng);
      dz = zone_pick(rng);
    }
    Request r;
    r.id = static_cast<int>(out.size());
    r.arrival_time = t;
    r.origin = draw(oz);
    r.destination = draw(dz);
    while (r.destination == r.origin) r.destination = draw(dz);
    out.push_back(r);
  }
  return out;
}

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;  // exclusive
  double length() const { return end - begin; }
};

/// Origins per zone inside [begin, end), divided by the window length.
inline std::vector<double> zone_arrival_rates(const std::vector<Request>& requests, const ZoneSet& zones,
                                              TimeWindow window) {
  if (!(window.length() > 0.0)) throw std::invalid_argument("window length must be > 0");
  std::vector<double> rate(zones.size(), 0.0);
  for (const auto& r : requests)
    if (r.arrival_time >= window.begin && r.arrival_time < window.end)
      rate[static_cast<std::size_t>(zones.zone_of(r.origin))] += 1.0;
  for (auto& v : rate) v /= window.length();
  return rate;
}

// CSV layout: id,ox,oy,dx,dy,arrival_min

inline void write_requests_csv(std::ostream& os, const std::vector<Request>& requests) {
  os << "id,ox,oy,dx,dy,arrival_min\n";
  os << std::setprecision(17);
  for (const auto& r : requests)
    os << r.id << ',' << r.origin.x << ',' << r.origin.y << ',' << r.destination.x << ',' << r.destination.y << ','
       << r.arrival_time << '\n';
}

inline std::vector<Request> read_requests_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("request CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,ox,oy,dx,dy,arrival_min") throw std::runtime_error("request CSV line 1: unexpected header '" + line + "'");
  std::vector<Request> out;
  int lineno = 1;
  double last = -std::numeric_limits<double>::infinity();
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error("request CSV line " + std::to_string(lineno) + ": expected 6 fields");
    Request r;
    try {
      r.id = std::stoi(cells[0]);
      r.origin = {std::stod(cells[1]), std::stod(cells[2])};
      r.destination = {std::stod(cells[3]), std::stod(cells[4])};
      r.arrival_time = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw std::runtime_error("request CSV line " + std::to_string(lineno) + ": malformed number");
    }
    if (r.arrival_time < last) throw std::runtime_error("request CSV line " + std::to_string(lineno) + ": arrivals not sorted");
    if (r.origin == r.destination)
      throw std::runtime_error("request CSV line " + std::to_string(lineno) + ": origin equals destination");
    last = r.arrival_time;
    out.push_back(r);
  }
  return out;
}

}  // namespace rtsim
