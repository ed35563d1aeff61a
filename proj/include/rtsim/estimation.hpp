#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rtsim/geometry.hpp"

namespace rtsim {

/// Mean of the last `window` pushed values (fewer while warming up).
template <typename T>
class MovingAverage {
 public:
  explicit MovingAverage(std::size_t window = 3) : window_(window) {
    if (window == 0) throw std::invalid_argument("moving-average window must be >= 1");
  }

  void push(const T& v) {
    values_.push_back(v);
    if (values_.size() > window_) values_.pop_front();
  }
  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  const std::deque<T>& values() const { return values_; }

  T mean() const {
    if (values_.empty()) throw std::logic_error("moving average of nothing");
    T acc = values_.front();
    for (std::size_t i = 1; i < values_.size(); ++i) acc = acc + values_[i];
    return acc * (1.0 / static_cast<double>(values_.size()));
  }

 private:
  std::size_t window_;
  std::deque<T> values_;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(Point a, double f) { return {a.x * f, a.y * f}; }

/// Raw service rate of one epoch: customers served over their total
/// in-vehicle minutes; 0 without service.
inline double raw_service_rate(const std::vector<double>& in_vehicle_minutes) {
  const double total = std::accumulate(in_vehicle_minutes.begin(), in_vehicle_minutes.end(), 0.0);
  return in_vehicle_minutes.empty() || total <= 0.0 ? 0.0 : static_cast<double>(in_vehicle_minutes.size()) / total;
}

/// Unweighted centroid of the points, or `fallback` when there are none.
inline Point gravity_center(const std::vector<Point>& pts, Point fallback) {
  if (pts.empty()) return fallback;
  Point s{0.0, 0.0};
  for (const auto& p : pts) s = s + p;
  return s * (1.0 / static_cast<double>(pts.size()));
}

struct EstimationConfig {
  double interval = 10.0;  // epoch length, minutes
  double mu0 = 0.05;       // customers/min before any service is observed
  bool adaptive_mu = true;
  bool dynamic_centroid = true;
  bool mu_skip_empty = false;  // leave epochs without service out of the mu average
  std::size_t window = 3;
};

/// Per-zone online estimates of arrival rate, service rate and demand
/// centroid. Observations are accumulated during an epoch and folded into
/// the moving averages by `close_epoch`.
class ZoneState {
 public:
  ZoneState() = default;
  ZoneState(const ZoneSet& zones, EstimationConfig cfg) : zones_(zones), cfg_(cfg) {
    if (!(cfg.interval > 0.0)) throw std::invalid_argument("epoch interval must be > 0");
    if (cfg.mu0 < 0.0) throw std::invalid_argument("mu0 must be >= 0");
    const std::size_t n = zones.size();
    counts_.assign(n, MovingAverage<double>(cfg.window));
    mu_.assign(n, MovingAverage<double>(cfg.window));
    centroid_.assign(n, MovingAverage<Point>(cfg.window));
    open_counts_.assign(n, 0);
    open_served_.assign(n, 0);
    open_in_vehicle_.assign(n, 0.0);
    open_pickups_.assign(n, {});
    idle_.assign(n, 0);
  }

  std::size_t zones() const { return counts_.size(); }
  const EstimationConfig& config() const { return cfg_; }
  int epochs_closed() const { return closed_; }

  void record_origin(Point p) { ++open_counts_.at(index(p)); }
  void record_pickup(Point p) { open_pickups_.at(index(p)).push_back(p); }
  void record_service(Point pickup, double in_vehicle_minutes) {
    const std::size_t z = index(pickup);
    ++open_served_[z];
    open_in_vehicle_[z] += in_vehicle_minutes;
  }
  /// A rideshare pickup expected at `p` around clock time `t` (follow-up leg
  /// of a transit journey). Counted toward the epoch containing `t`.
  void add_exit_forecast(Point p, double t) { ++forecast_[epoch_of(t)][index(p)]; }
  void set_idle(std::vector<int> idle) { idle_ = std::move(idle); }

  /// Origins recorded in the still-open epoch.
  const std::vector<int>& open_counts() const { return open_counts_; }

  /// Fold the open epoch into the averages. Returns the raw per-zone
  /// origin counts of the epoch just closed.
  std::vector<int> close_epoch() {
    const std::size_t n = zones();
    for (std::size_t z = 0; z < n; ++z) {
      counts_[z].push(static_cast<double>(open_counts_[z]));
      const double raw_mu = open_served_[z] > 0 ? open_served_[z] / open_in_vehicle_[z] : 0.0;
      if (open_served_[z] > 0 || !cfg_.mu_skip_empty) mu_[z].push(raw_mu);
      centroid_[z].push(gravity_center(open_pickups_[z], zones_[z].bounds.center()));
    }
    std::vector<int> out = open_counts_;
    std::fill(open_counts_.begin(), open_counts_.end(), 0);
    std::fill(open_served_.begin(), open_served_.end(), 0);
    std::fill(open_in_vehicle_.begin(), open_in_vehicle_.end(), 0.0);
    for (auto& v : open_pickups_) v.clear();
    ++closed_;
    return out;
  }

  /// Smoothed observed arrival rate (customers/min).
  double lambda(std::size_t z) const {
    return counts_.at(z).empty() ? 0.0 : counts_[z].mean() / cfg_.interval;
  }

  /// Smoothed rate plus forecast follow-up pickups expected during epoch
  /// `epoch` (epochs numbered from 0 at clock 0).
  double forecast_lambda(std::size_t z, int epoch) const {
    double extra = 0.0;
    const auto it = forecast_.find(epoch);
    if (it != forecast_.end()) {
      const auto jt = it->second.find(z);
      if (jt != it->second.end()) extra = jt->second / cfg_.interval;
    }
    return lambda(z) + extra;
  }

  double mu(std::size_t z) const {
    if (!cfg_.adaptive_mu || mu_.at(z).empty()) return cfg_.mu0;
    return mu_[z].mean();
  }

  Point centroid(std::size_t z) const {
    if (!cfg_.dynamic_centroid || centroid_.at(z).empty()) return zones_[z].bounds.center();
    return centroid_[z].mean();
  }

  int idle(std::size_t z) const { return idle_.at(z); }

  int epoch_of(double t) const { return static_cast<int>(std::floor(t / cfg_.interval + 1e-9)); }

  const MovingAverage<double>& count_history(std::size_t z) const { return counts_.at(z); }
  const MovingAverage<double>& mu_history(std::size_t z) const { return mu_.at(z); }
  const MovingAverage<Point>& centroid_history(std::size_t z) const { return centroid_.at(z); }

 private:
  std::size_t index(Point p) const {
    if (zones_.size() == 0) throw std::logic_error("zone state without zones");
    return static_cast<std::size_t>(zones_.zone_of(p));
  }

  ZoneSet zones_;
  EstimationConfig cfg_;
  std::vector<MovingAverage<double>> counts_, mu_;
  std::vector<MovingAverage<Point>> centroid_;
  std::vector<int> open_counts_, open_served_;
  std::vector<double> open_in_vehicle_;
  std::vector<std::vector<Point>> open_pickups_;
  std::map<int, std::map<std::size_t, int>> forecast_;
  std::vector<int> idle_;
  int closed_ = 0;
};

}  // namespace rtsim
