#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rtsim {

/// A location on the service plane, in kilometres.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline Point lerp(Point a, Point b, double f) { return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}; }

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  Point center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  bool contains(Point p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
  bool valid() const { return xmax > xmin && ymax > ymin; }
};

enum class Mode { vehicle, walk, train };

inline Mode parse_mode(std::string_view s) {
  if (s == "vehicle") return Mode::vehicle;
  if (s == "walk") return Mode::walk;
  if (s == "train") return Mode::train;
  throw std::invalid_argument("unknown travel mode '" + std::string(s) + "'");
}

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::vehicle: return "vehicle";
    case Mode::walk: return "walk";
    case Mode::train: return "train";
  }
  return "?";
}

/// Euclidean travel times per mode. Speeds are km/h, results are minutes.
/// An optional zone-to-zone matrix overrides the metric for relocation
/// times on networks loaded from elsewhere.
class TravelTimeModel {
 public:
  TravelTimeModel() = default;
  TravelTimeModel(double vehicle_kmh, double walk_kmh, double train_kmh)
      : vehicle_kmh_(vehicle_kmh), walk_kmh_(walk_kmh), train_kmh_(train_kmh) {
    if (!(vehicle_kmh > 0.0) || !(walk_kmh > 0.0) || !(train_kmh > 0.0))
      throw std::invalid_argument("travel speeds must be positive");
  }

  double speed_kmh(Mode m) const {
    switch (m) {
      case Mode::vehicle: return vehicle_kmh_;
      case Mode::walk: return walk_kmh_;
      case Mode::train: return train_kmh_;
    }
    throw std::invalid_argument("unknown travel mode");
  }

  double minutes(Point a, Point b, Mode m) const { return distance(a, b) / speed_kmh(m) * 60.0; }
  double vehicle(Point a, Point b) const { return distance(a, b) / vehicle_kmh_ * 60.0; }
  double walk(Point a, Point b) const { return distance(a, b) / walk_kmh_ * 60.0; }

  void set_zone_matrix(std::vector<std::vector<double>> m) { zone_matrix_ = std::move(m); }
  const std::optional<std::vector<std::vector<double>>>& zone_matrix() const { return zone_matrix_; }

 private:
  double vehicle_kmh_ = 36.0;
  double walk_kmh_ = 5.0;
  double train_kmh_ = 80.0;
  std::optional<std::vector<std::vector<double>>> zone_matrix_;
};

struct Zone {
  int id = 0;
  Rect bounds;
  Point centroid;
};

/// Partition of the service area into rectangular zones.
class ZoneSet {
 public:
  ZoneSet() = default;

  static ZoneSet grid(Rect area, int nx, int ny) {
    if (!area.valid() || nx < 1 || ny < 1) throw std::invalid_argument("invalid zone grid");
    std::vector<Zone> zones;
    const double w = area.width() / nx;
    const double h = area.height() / ny;
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) {
        Rect b{area.xmin + c * w, area.ymin + r * h, area.xmin + (c + 1) * w, area.ymin + (r + 1) * h};
        if (c == nx - 1) b.xmax = area.xmax;
        if (r == ny - 1) b.ymax = area.ymax;
        zones.push_back({static_cast<int>(zones.size()), b, b.center()});
      }
    }
    ZoneSet out(area, std::move(zones));
    out.grid_nx_ = nx;
    out.grid_ny_ = ny;
    return out;
  }

  /// Explicit rectangles; they must tile `area` exactly.
  static ZoneSet from_rects(Rect area, const std::vector<Rect>& rects) {
    if (!area.valid() || rects.empty()) throw std::invalid_argument("invalid zone rectangles");
    std::vector<Zone> zones;
    double covered = 0.0;
    for (const auto& r : rects) {
      if (!r.valid()) throw std::invalid_argument("degenerate zone rectangle");
      if (r.xmin < area.xmin - 1e-9 || r.ymin < area.ymin - 1e-9 || r.xmax > area.xmax + 1e-9 ||
          r.ymax > area.ymax + 1e-9)
        throw std::invalid_argument("zone rectangle outside the service area");
      covered += r.width() * r.height();
      zones.push_back({static_cast<int>(zones.size()), r, r.center()});
    }
    for (std::size_t i = 0; i < rects.size(); ++i) {
      for (std::size_t j = i + 1; j < rects.size(); ++j) {
        const double ox = std::min(rects[i].xmax, rects[j].xmax) - std::max(rects[i].xmin, rects[j].xmin);
        const double oy = std::min(rects[i].ymax, rects[j].ymax) - std::max(rects[i].ymin, rects[j].ymin);
        if (ox > 1e-9 && oy > 1e-9) throw std::invalid_argument("zone rectangles overlap");
      }
    }
    if (std::abs(covered - area.width() * area.height()) > 1e-6 * area.width() * area.height())
      throw std::invalid_argument("zone rectangles do not cover the service area");
    return ZoneSet(area, std::move(zones));
  }

  std::size_t size() const { return zones_.size(); }
  const Zone& operator[](std::size_t i) const { return zones_[i]; }
  const std::vector<Zone>& zones() const { return zones_; }
  const Rect& area() const { return area_; }

  /// Zone containing p. Points on shared edges go to the zone with the
  /// larger coordinate; points outside the area are clamped in.
  int zone_of(Point p) const {
    if (grid_nx_ > 0) {
      const double w = area_.width() / grid_nx_;
      const double h = area_.height() / grid_ny_;
      const int c = std::clamp(static_cast<int>(std::floor((p.x - area_.xmin) / w)), 0, grid_nx_ - 1);
      const int r = std::clamp(static_cast<int>(std::floor((p.y - area_.ymin) / h)), 0, grid_ny_ - 1);
      return r * grid_nx_ + c;
    }
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& z : zones_) {
      const auto& b = z.bounds;
      if (p.x >= b.xmin && p.x < b.xmax && p.y >= b.ymin && p.y < b.ymax) return z.id;
      const double dx = std::max({b.xmin - p.x, 0.0, p.x - b.xmax});
      const double dy = std::max({b.ymin - p.y, 0.0, p.y - b.ymax});
      const double d = std::hypot(dx, dy);
      if (d < best_d) {
        best_d = d;
        best = z.id;
      }
    }
    return best;
  }

 private:
  ZoneSet(Rect area, std::vector<Zone> zones) : area_(area), zones_(std::move(zones)) {}

  Rect area_;
  std::vector<Zone> zones_;
  int grid_nx_ = 0;
  int grid_ny_ = 0;
};

}  // namespace rtsim
