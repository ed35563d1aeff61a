#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rtsim/demand.hpp"
#include "rtsim/dispatch.hpp"
#include "rtsim/estimation.hpp"
#include "rtsim/geometry.hpp"
#include "rtsim/queueing.hpp"
#include "rtsim/relocation.hpp"
#include "rtsim/tour.hpp"
#include "rtsim/transit.hpp"

namespace rtsim {

enum class RelocationPolicy { waiting, busiest, myopic, nonmyopic };

inline const char* to_string(RelocationPolicy p) {
  switch (p) {
    case RelocationPolicy::waiting: return "waiting";
    case RelocationPolicy::busiest: return "busiest";
    case RelocationPolicy::myopic: return "myopic";
    case RelocationPolicy::nonmyopic: return "nonmyopic";
  }
  return "?";
}

inline RelocationPolicy parse_policy(std::string_view s) {
  for (auto p : {RelocationPolicy::waiting, RelocationPolicy::busiest, RelocationPolicy::myopic,
                 RelocationPolicy::nonmyopic})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown relocation policy '" + std::string(s) + "'");
}

struct Network {
  TravelTimeModel tt;
  ZoneSet zones;
  std::optional<TransitNetwork> transit;
};

struct SimConfig {
  int fleet = 40;
  int capacity = 4;
  bool spread = false;  // one vehicle per zone centroid in turn instead of the depot
  Point depot{0.0, 0.0};
  double interval = 10.0;  // relocation epoch, minutes
  double warmup = 10.0;
  RelocationPolicy policy = RelocationPolicy::nonmyopic;
  bool switching = true;
  bool transit = true;
  bool count_repositioning_idle = false;  // relocation counts vehicles already in transition
  double theta = 0.1;
  double eta = 0.95;
  int queue_b = 0;
  int zone_cap = 0;  // C_j; 0 means B
  long node_limit = 100000;
  std::uint64_t seed = 1;
  bool log_events = false;
  DispatchConfig dispatch;
  EstimationConfig estimation;

  void validate() const {
    if (fleet < 1) throw std::invalid_argument("fleet size must be >= 1");
    if (capacity < 1) throw std::invalid_argument("vehicle capacity must be >= 1");
    if (!(interval > 0.0)) throw std::invalid_argument("relocation interval must be > 0");
    if (warmup < 0.0) throw std::invalid_argument("warm-up must be >= 0");
    if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    if (queue_b < 0 || zone_cap < 0) throw std::invalid_argument("queue length and zone cap must be >= 0");
    if (node_limit < 1) throw std::invalid_argument("node limit must be >= 1");
    dispatch.validate();
  }
};

struct Scenario {
  std::string description;
  Network network;
  DemandSpec demand;
  std::optional<std::vector<Request>> requests;  // fixed list instead of generated demand
  SimConfig sim;
};

struct PassengerRecord {
  int id = 0;
  ServiceOption option = ServiceOption::R;
  Point origin, destination;
  double arrival = 0.0;
  double wait = 0.0;  // waiting for rideshare vehicles
  double transit_wait = 0.0;
  double finish = 0.0;
  Point final_location;
  int s1 = -1, s2 = -1;
  bool done = false;

  double journey() const { return finish - arrival; }
};

struct EpochRecord {
  int epoch = 0;  // epochs closed so far
  double time = 0.0;
  std::vector<int> counts;  // request origins per zone during the epoch
  std::vector<double> lambda, mu;
  std::vector<Point> centroid;
  std::vector<int> idle;
};

struct RelocationRecord {
  int epoch = 0;
  double time = 0.0;
  RelocationPolicy policy = RelocationPolicy::waiting;
  double phi = 0.0;
  int idle = 0;
  int moved = 0;
  double minutes = 0.0;
  bool fell_back = false;
  SolveStatus status = SolveStatus::optimal;
  long nodes = 0;
};

struct DecisionRecord {
  int request = 0;
  ServiceOption option = ServiceOption::R;
  int vehicle = 0;
  int s1 = -1, s2 = -1;
  std::array<double, 4> cost{};
};

struct EventRecord {
  double time = 0.0;
  std::string kind;
  int vehicle = -1;
  int request = -1;
  Point at;  // vehicle position for vehicle events
};

struct MetricsReport {
  int customers = 0;
  int followups = 0;
  double wt_mean = 0.0;
  double wt_max = 0.0;
  double jt_mean = 0.0;
  double vtl_mean = 0.0;
  double deadhead_mean = 0.0;
  std::array<double, 4> share{};  // percent of customers per option
  int switches = 0;         // repositioning vehicles diverted to a pickup
  int forced_switches = 0;  // ...because nothing else was available
  double finish_time = 0.0;
  double wall_seconds = 0.0;
  std::vector<PassengerRecord> passengers;
  std::vector<EpochRecord> epochs;
  std::vector<RelocationRecord> relocations;
  std::vector<DecisionRecord> decisions;
  std::vector<EventRecord> events;

  double share_of(ServiceOption o) const { return share[static_cast<std::size_t>(o)]; }
};

/// Mean Euclidean distance between two uniform points of the rectangle,
/// by fixed-seed sampling.
inline double mean_trip_km(const Rect& area, int samples = 200000) {
  std::mt19937_64 rng(12345);
  double s = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Point a = detail::uniform_in(area, rng);
    const Point b = detail::uniform_in(area, rng);
    s += distance(a, b);
  }
  return s / samples;
}

/// Move a tour's anchor toward its first stop until clock `t` without
/// completing the stop: linear interpolation, clamped at the stop. Returns
/// the minutes driven.
inline double advance_along(Tour& tour, double t, const TravelTimeModel& tt) {
  if (t <= tour.clock) return 0.0;
  double driven = 0.0;
  if (!tour.stops.empty()) {
    const Point to = tour.stops.front().location;
    const double leg = tt.vehicle(tour.anchor, to);
    const double elapsed = t - tour.clock;
    if (elapsed >= leg) {
      driven = leg;
      tour.anchor = to;
    } else if (leg > 0.0) {
      driven = elapsed;
      tour.anchor = lerp(tour.anchor, to, elapsed / leg);
    }
  }
  tour.clock = t;
  return driven;
}

/// Vehicles that may take a new request: all of them, minus repositioning
/// ones when en-route switching is off.
inline std::vector<const Vehicle*> candidate_fleet(const std::vector<Vehicle>& fleet, bool switching) {
  std::vector<const Vehicle*> out;
  for (const auto& v : fleet)
    if (switching || v.status != VehicleStatus::repositioning) out.push_back(&v);
  return out;
}

class Simulator {
 public:
  enum class EventKind { request_arrival = 0, station_exit = 1, relocation_epoch = 2 };

  explicit Simulator(Scenario sc) : sc_(std::move(sc)) {
    sc_.sim.validate();
    if (sc_.network.zones.size() == 0) throw std::invalid_argument("scenario has no zones");
    requests_ = sc_.requests ? *sc_.requests : generate(sc_.demand, &sc_.network.zones);
    const Rect& area = sc_.network.zones.area();
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      const auto& r = requests_[i];
      if (!area.contains(r.origin) || !area.contains(r.destination))
        throw std::invalid_argument("request " + std::to_string(r.id) + " lies outside the zoned area");
      if (i > 0 && r.arrival_time < requests_[i - 1].arrival_time)
        throw std::invalid_argument("requests must be ordered by arrival time");
    }
    if (sc_.sim.transit && sc_.network.transit) transit_ = &*sc_.network.transit;
    sc_.sim.dispatch.transit = transit_ != nullptr;
  }

  const std::vector<Request>& requests() const { return requests_; }
  const std::vector<Vehicle>& fleet() const { return fleet_; }

  MetricsReport run() {
    const auto wall0 = std::chrono::steady_clock::now();
    const auto& cfg = sc_.sim;
    const auto& tt = sc_.network.tt;
    init_fleet();
    zone_state_ = ZoneState(sc_.network.zones, cfg.estimation);
    rng_.seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    report_ = MetricsReport{};
    passengers_.clear();
    legs_.clear();
    next_leg_id_ = 0;
    for (const auto& r : requests_) next_leg_id_ = std::max(next_leg_id_, r.id + 1);

    for (std::size_t i = 0; i < requests_.size(); ++i)
      push({requests_[i].arrival_time, EventKind::request_arrival, static_cast<int>(i)});
    const double horizon = requests_.empty() ? sc_.demand.horizon : std::max(sc_.demand.horizon, requests_.back().arrival_time);
    for (int h = 1; h * cfg.interval <= horizon + 1e-9; ++h)
      push({h * cfg.interval, EventKind::relocation_epoch, h});
    if (cfg.warmup > 0.0 && cfg.warmup <= horizon + 1e-9 &&
        std::abs(std::remainder(cfg.warmup, cfg.interval)) > 1e-9)
      push({cfg.warmup, EventKind::relocation_epoch, -1});

    for (;;) {
      const double next_event = queue_.empty() ? kInf : queue_.top().time;
      int who = -1;
      double when = kInf;
      for (std::size_t v = 0; v < fleet_.size(); ++v) {
        const double c = next_completion(fleet_[v]);
        if (c < when) {
          when = c;
          who = static_cast<int>(v);
        }
      }
      if (who >= 0 && when <= next_event) {
        complete_stop(fleet_[static_cast<std::size_t>(who)], when);
        continue;
      }
      if (queue_.empty()) break;
      const Event e = queue_.top();
      queue_.pop();
      for (auto& v : fleet_) sync(v, e.time);
      now_ = e.time;
      switch (e.kind) {
        case EventKind::request_arrival: on_request(requests_[static_cast<std::size_t>(e.id)]); break;
        case EventKind::station_exit: on_station_exit(e.id); break;
        case EventKind::relocation_epoch: on_epoch(e.id); break;
      }
    }
    (void)tt;
    finish_report();
    report_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return report_;
  }

 private:
  struct Event {
    double time;
    EventKind kind;
    int id;
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind > o.kind;
      return id > o.id;
    }
  };

  // One rideshare leg: which passenger, and what happens at its dropoff.
  struct Leg {
    int passenger = 0;
    bool first = true;  // false for the post-transit leg of RTR
    double ready = 0.0;  // when the passenger is at the pickup point
    double picked = -1.0;
    Point pickup_at;
  };

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void push(Event e) { queue_.push(e); }

  void log(double t, const char* kind, int vehicle, int request, Point at = {}) {
    if (sc_.sim.log_events) report_.events.push_back({t, kind, vehicle, request, at});
  }

  void init_fleet() {
    fleet_.clear();
    const auto& zones = sc_.network.zones;
    for (int i = 0; i < sc_.sim.fleet; ++i) {
      Vehicle v;
      v.id = i;
      v.capacity = sc_.sim.capacity;
      const Point at = sc_.sim.spread ? zones[static_cast<std::size_t>(i) % zones.size()].centroid : sc_.sim.depot;
      v.tour = Tour{at, 0.0, {}, {}};
      fleet_.push_back(std::move(v));
    }
  }

  double next_completion(const Vehicle& v) const {
    if (v.tour.stops.empty()) return kInf;
    const Stop& s = v.tour.stops.front();
    const double arrive = v.tour.clock + sc_.network.tt.vehicle(v.tour.anchor, s.location);
    return s.kind == StopKind::pickup ? std::max(arrive, s.ready) : arrive;
  }

  void drive(Vehicle& v, double minutes, bool relocating) {
    v.drive_minutes += minutes;
    if (relocating) v.relocation_minutes += minutes;
  }

  void sync(Vehicle& v, double t) {
    const bool reloc = !v.tour.stops.empty() && v.tour.stops.front().kind == StopKind::reposition;
    drive(v, advance_along(v.tour, t, sc_.network.tt), reloc);
  }

  void refresh_status(Vehicle& v) {
    if (v.tour.stops.empty())
      v.status = VehicleStatus::available;
    else if (!v.tour.has_passenger_stops())
      v.status = VehicleStatus::repositioning;
    else
      v.status = VehicleStatus::serving;
  }

  void complete_stop(Vehicle& v, double t) {
    const Stop s = v.tour.stops.front();
    const double leg = sc_.network.tt.vehicle(v.tour.anchor, s.location);
    drive(v, leg, s.kind == StopKind::reposition);
    v.tour.anchor = s.location;
    v.tour.clock = t;
    v.tour.stops.erase(v.tour.stops.begin());
    switch (s.kind) {
      case StopKind::pickup: {
        Leg& l = legs_.at(s.request);
        l.picked = t;
        l.pickup_at = s.location;
        passengers_.at(l.passenger).wait += std::max(0.0, t - l.ready);
        v.tour.onboard.push_back(s.request);
        zone_state_.record_pickup(s.location);
        log(t, "pickup", v.id, s.request, s.location);
        break;
      }
      case StopKind::dropoff: {
        std::erase(v.tour.onboard, s.request);
        const Leg& l = legs_.at(s.request);
        zone_state_.record_service(l.pickup_at, t - l.picked);
        log(t, "dropoff", v.id, s.request, s.location);
        on_dropoff(l, s.location, t);
        break;
      }
      case StopKind::reposition: log(t, "reposition_done", v.id, -1, s.location); break;
    }
    refresh_status(v);
  }

  void finish(PassengerRecord& p, Point at, double t) {
    p.done = true;
    p.finish = t;
    p.final_location = at;
  }

  void on_dropoff(const Leg& l, Point at, double t) {
    PassengerRecord& p = passengers_.at(l.passenger);
    const bool rtw = p.option == ServiceOption::RTW;
    const bool rtr_first = p.option == ServiceOption::RTR && l.first;
    if (!rtw && !rtr_first) {
      finish(p, at, t);
      return;
    }
    const TransitPath& path = paths_.at(l.passenger);
    const TransitRide ride = transit_->ride(path, t);
    p.transit_wait += ride.waited;
    if (rtw) {
      const Point exit = transit_->station(path.exit).location;
      finish(p, p.destination, ride.alight + sc_.network.tt.walk(exit, p.destination));
    } else {
      push({ride.alight, EventKind::station_exit, l.passenger});
    }
  }

  SecondLegContext context(const std::vector<const Vehicle*>& cands) const {
    return SecondLegContext{&cands, &zone_state_, &sc_.network.zones};
  }

  std::vector<const Vehicle*> candidates() {
    auto c = candidate_fleet(fleet_, sc_.sim.switching);
    if (c.empty()) {
      ++report_.forced_switches;
      c = candidate_fleet(fleet_, true);
    }
    return c;
  }

  // Commit a plan for leg `leg_id` of passenger `pid`.
  void commit(const ServicePlan& plan, int leg_id, int pid, double ready) {
    Vehicle& v = fleet_.at(static_cast<std::size_t>(plan.vehicle));
    if (v.status == VehicleStatus::repositioning) ++report_.switches;
    v.tour = plan.tour;
    legs_[leg_id] = Leg{pid, true, ready, -1.0, {}};
    refresh_status(v);
  }

  void record_decision(const ServicePlan& plan, int id) {
    report_.decisions.push_back({id, plan.option, plan.vehicle, plan.s1, plan.s2, plan.best});
  }

  void on_request(const Request& r) {
    log(now_, "request", -1, r.id);
    zone_state_.record_origin(r.origin);
    const auto cands = candidates();
    ServicePlan plan = plan_service(r, cands, transit_, sc_.network.tt, sc_.sim.dispatch, now_, context(cands));
    PassengerRecord p;
    p.id = r.id;
    p.option = plan.option;
    p.origin = r.origin;
    p.destination = r.destination;
    p.arrival = r.arrival_time;
    p.s1 = plan.s1;
    p.s2 = plan.s2;
    passengers_[r.id] = p;
    double ready = now_;
    if (plan.option == ServiceOption::WTR) {
      // the vehicle meets the actual train, not the planned average
      const TransitRide ride = transit_->ride(*plan.path, now_ + plan.walk_minutes);
      passengers_[r.id].transit_wait += ride.waited;
      ready = ride.alight;
      for (auto& s : plan.tour.stops)
        if (s.kind == StopKind::pickup && s.request == r.id) s.ready = ready;
    }
    if (plan.path) paths_[r.id] = *plan.path;
    if (plan.option == ServiceOption::RTR)
      zone_state_.add_exit_forecast(transit_->station(plan.s2).location, plan.expected_exit);
    commit(plan, r.id, r.id, ready);
    record_decision(plan, r.id);
  }

  void on_station_exit(int pid) {
    PassengerRecord& p = passengers_.at(pid);
    const Point at = transit_->station(p.s2).location;
    log(now_, "station_exit", -1, pid);
    Request f;
    f.id = next_leg_id_++;
    f.origin = at;
    f.destination = p.destination;
    f.arrival_time = now_;
    f.role = LegRole::rtr_followup;
    f.parent = pid;
    ++report_.followups;
    zone_state_.record_origin(at);
    if (at == p.destination) {  // exit station is the destination itself
      finish(p, at, now_);
      return;
    }
    const auto cands = candidates();
    const ServicePlan plan =
        plan_service(f, cands, transit_, sc_.network.tt, sc_.sim.dispatch, now_, context(cands), true);
    commit(plan, f.id, pid, now_);
    legs_[f.id].first = false;
    record_decision(plan, f.id);
  }

  std::vector<int> idle_counts(std::vector<IdleVehicle>* out) const {
    std::vector<int> idle(sc_.network.zones.size(), 0);
    for (const auto& v : fleet_) {
      const bool counted = v.status == VehicleStatus::available ||
                           (sc_.sim.count_repositioning_idle && v.status == VehicleStatus::repositioning);
      if (!counted) continue;
      const int z = sc_.network.zones.zone_of(v.position());
      ++idle[static_cast<std::size_t>(z)];
      if (out) out->push_back({v.id, z, v.position()});
    }
    return idle;
  }

  void on_epoch(int h) {
    const auto& cfg = sc_.sim;
    const std::size_t n = sc_.network.zones.size();
    log(now_, "epoch", -1, h);
    if (h >= 0) {
      EpochRecord rec;
      rec.epoch = h;
      rec.time = now_;
      rec.counts = zone_state_.close_epoch();
      rec.idle = idle_counts(nullptr);
      zone_state_.set_idle(rec.idle);
      for (std::size_t z = 0; z < n; ++z) {
        rec.lambda.push_back(zone_state_.lambda(z));
        rec.mu.push_back(zone_state_.mu(z));
        rec.centroid.push_back(zone_state_.centroid(z));
      }
      report_.epochs.push_back(std::move(rec));
    }
    if (now_ + 1e-9 < cfg.warmup) return;
    relocate(zone_state_.epoch_of(now_));
  }

  void relocate(int epoch) {
    const auto& cfg = sc_.sim;
    const auto& tt = sc_.network.tt;
    const std::size_t n = sc_.network.zones.size();
    RelocationRecord rec;
    rec.epoch = epoch;
    rec.time = now_;
    rec.policy = cfg.policy;
    std::vector<IdleVehicle> idle;
    const std::vector<int> counts = idle_counts(&idle);
    rec.idle = static_cast<int>(idle.size());
    std::vector<Point> centers;
    std::vector<double> lambda;
    for (std::size_t z = 0; z < n; ++z) {
      centers.push_back(zone_state_.centroid(z));
      lambda.push_back(zone_state_.forecast_lambda(z, epoch));
    }
    std::vector<RelocationOrder> orders;
    if (idle.empty() || cfg.policy == RelocationPolicy::waiting) {
      // nothing to move
    } else if (cfg.policy == RelocationPolicy::busiest) {
      orders = busiest_zone_orders(idle, lambda, centers, tt, rng_);
    } else {
      RelocationInstance in;
      in.lambda = lambda;
      for (std::size_t z = 0; z < n; ++z) in.mu.push_back(zone_state_.mu(z));
      in.t.assign(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) in.t[i][j] = tt.vehicle(centers[i], centers[j]);
      if (const auto& m = tt.zone_matrix(); m && m->size() == n) in.t = *m;
      in.r = in.t;
      in.idle = counts;
      const int B = in.total_idle();
      in.cap.assign(n, cfg.zone_cap > 0 ? std::max(cfg.zone_cap, 0) : B);
      for (std::size_t z = 0; z < n; ++z) in.cap[z] = std::max(in.cap[z], 0);
      in.theta = cfg.theta;
      int cmax = 1;
      for (int c : in.cap) cmax = std::max(cmax, c);
      in.rho = RhoTable(cfg.eta, cfg.queue_b, cmax);
      MilpOptions opt;
      opt.node_limit = cfg.node_limit;
      const RelocationSolution sol =
          cfg.policy == RelocationPolicy::nonmyopic ? solve_nonmyopic(in, opt) : solve_myopic(in, opt);
      rec.status = sol.status;
      rec.fell_back = sol.fell_back;
      rec.nodes = sol.nodes;
      if (sol.solved()) {
        rec.phi = sol.phi;
        orders = orders_from_flows(sol.W, idle, centers);
      }
    }
    for (const auto& o : orders) {
      Vehicle& v = fleet_.at(static_cast<std::size_t>(o.vehicle));
      rec.minutes += tt.vehicle(v.position(), o.target);
      v.tour.stops = {Stop::reposition(o.target)};
      refresh_status(v);
      if (v.tour.anchor == o.target) v.tour.stops.clear(), refresh_status(v);
      log(now_, "reposition", v.id, -1, v.position());
    }
    rec.moved = static_cast<int>(orders.size());
    report_.relocations.push_back(rec);
  }

  void finish_report() {
    MetricsReport& m = report_;
    m.customers = static_cast<int>(passengers_.size());
    double wt = 0.0, jt = 0.0;
    std::array<int, 4> by_option{};
    for (auto& [id, p] : passengers_) {
      if (!p.done) throw std::logic_error("passenger " + std::to_string(id) + " never reached the destination");
      wt += p.wait;
      jt += p.journey();
      m.wt_max = std::max(m.wt_max, p.wait);
      m.finish_time = std::max(m.finish_time, p.finish);
      ++by_option[static_cast<std::size_t>(p.option)];
      m.passengers.push_back(p);
    }
    if (m.customers > 0) {
      m.wt_mean = wt / m.customers;
      m.jt_mean = jt / m.customers;
      for (std::size_t o = 0; o < 4; ++o) m.share[o] = 100.0 * by_option[o] / m.customers;
    }
    double vtl = 0.0, dead = 0.0;
    for (const auto& v : fleet_) {
      vtl += v.drive_minutes;
      dead += v.relocation_minutes;
      m.finish_time = std::max(m.finish_time, v.tour.clock);
    }
    m.vtl_mean = vtl / static_cast<double>(fleet_.size());
    m.deadhead_mean = dead / static_cast<double>(fleet_.size());
  }

  Scenario sc_;
  std::vector<Request> requests_;
  const TransitNetwork* transit_ = nullptr;
  std::vector<Vehicle> fleet_;
  ZoneState zone_state_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  double now_ = 0.0;
  MetricsReport report_;
  std::map<int, PassengerRecord> passengers_;
  std::map<int, Leg> legs_;
  std::map<int, TransitPath> paths_;
  int next_leg_id_ = 0;
};

inline MetricsReport simulate(const Scenario& sc) { return Simulator(sc).run(); }

}  // namespace rtsim
