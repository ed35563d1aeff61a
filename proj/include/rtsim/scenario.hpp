#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rtsim/simulator.hpp"

namespace rtsim {

using json = nlohmann::json;

/// Scenario problem with the offending line (1-based, 0 when unknown).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& where, int line, const std::string& msg)
      : std::runtime_error(where + (line > 0 ? ":" + std::to_string(line) : "") + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Line of every value in a syntactically valid JSON text, keyed by JSON
// pointer ("" for the root).
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : s_(text) {
    skip_ws();
    value("");
  }
  const std::map<std::string, int>& lines() const { return lines_; }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }
  std::string string() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      if (i_ < s_.size()) out += s_[i_++];
    }
    ++i_;
    return out;
  }
  void value(const std::string& ptr) {
    lines_[ptr] = line_;
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::string key = string();
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(ptr + "/" + pointer_token(key));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      for (int k = 0; i_ < s_.size() && s_[i_] != ']'; ++k) {
        value(ptr + "/" + std::to_string(k));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '"') {
      string();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
             !std::isspace(static_cast<unsigned char>(s_[i_])))
        ++i_;
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

inline int line_of_byte(std::string_view text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

/// Parsed scenario document plus where it came from. Overrides edit `doc`
/// before it is turned into a Scenario.
struct ScenarioDocument {
  json doc;
  std::string source = "<scenario>";
  std::filesystem::path base_dir = ".";
  std::map<std::string, int> lines;
};

inline ScenarioDocument parse_scenario_text(const std::string& text, const std::string& source = "<scenario>") {
  ScenarioDocument d;
  d.source = source;
  try {
    d.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(source, detail::line_of_byte(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  d.lines = detail::LineIndex(text).lines();
  return d;
}

inline ScenarioDocument read_scenario_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, 0, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  ScenarioDocument d = parse_scenario_text(ss.str(), path);
  d.base_dir = std::filesystem::path(path).parent_path();
  if (d.base_dir.empty()) d.base_dir = ".";
  return d;
}

namespace detail {

class SchemaReader {
 public:
  explicit SchemaReader(const ScenarioDocument& d) : d_(d) {}

  [[noreturn]] void fail(std::string ptr, const std::string& msg) const {
    const std::string shown = ptr.empty() ? "/" : ptr;
    for (;;) {
      const auto it = d_.lines.find(ptr);
      if (it != d_.lines.end()) throw ScenarioError(d_.source, it->second, shown + ": " + msg);
      if (ptr.empty()) throw ScenarioError(d_.source, 0, shown + ": " + msg);
      ptr.erase(ptr.rfind('/'));
    }
  }

  const json& object(const json& parent, const std::string& ptr, const char* key, bool required,
                     std::initializer_list<const char*> allowed) const {
    static const json empty = json::object();
    const std::string p = ptr + "/" + key;
    if (!parent.contains(key)) {
      if (required) fail(ptr, std::string("missing section '") + key + "'");
      return empty;
    }
    const json& j = parent.at(key);
    check_keys(j, p, allowed);
    return j;
  }

  void check_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(ptr, "expected an object");
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(ptr + "/" + pointer_token(k), "unknown key '" + k + "'");
    }
  }

  double number(const json& j, const std::string& ptr, const char* key, double dflt) const {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number()) fail(ptr + "/" + key, "expected a number");
    return v.get<double>();
  }

  double positive(const json& j, const std::string& ptr, const char* key, double dflt) const {
    const double v = number(j, ptr, key, dflt);
    if (!(v > 0.0)) fail(ptr + "/" + key, "must be > 0");
    return v;
  }

  double nonnegative(const json& j, const std::string& ptr, const char* key, double dflt) const {
    const double v = number(j, ptr, key, dflt);
    if (!(v >= 0.0)) fail(ptr + "/" + key, "must be >= 0");
    return v;
  }

  long integer(const json& j, const std::string& ptr, const char* key, long dflt, long min) const {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer() && !(v.is_number() && std::floor(v.get<double>()) == v.get<double>()))
      fail(ptr + "/" + key, "expected an integer");
    const long x = static_cast<long>(v.get<double>());
    if (x < min) fail(ptr + "/" + key, "must be >= " + std::to_string(min));
    return x;
  }

  bool boolean(const json& j, const std::string& ptr, const char* key, bool dflt) const {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(ptr + "/" + key, "expected true or false");
    return v.get<bool>();
  }

  std::string text(const json& j, const std::string& ptr, const char* key, const std::string& dflt) const {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string()) fail(ptr + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  Point point(const json& v, const std::string& ptr) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail(ptr, "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Rect rect(const json& v, const std::string& ptr) const {
    if (!v.is_array() || v.size() != 4) fail(ptr, "expected [xmin, ymin, xmax, ymax]");
    for (const auto& x : v)
      if (!x.is_number()) fail(ptr, "expected [xmin, ymin, xmax, ymax]");
    const Rect r{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
    if (!r.valid()) fail(ptr, "empty rectangle");
    return r;
  }

 private:
  const ScenarioDocument& d_;
};

}  // namespace detail

/// Validate the document and build a runnable Scenario. Every schema
/// problem is reported with the line it occurs on.
inline Scenario build_scenario(const ScenarioDocument& d) {
  detail::SchemaReader r(d);
  const json& root = d.doc;
  r.check_keys(root, "", {"description", "network", "demand", "fleet", "dispatch", "relocation", "estimation",
                          "simulation"});
  Scenario sc;
  sc.description = r.text(root, "", "description", "");

  // network
  const json& net = r.object(root, "", "network", true, {"area", "zones", "speeds", "transit"});
  if (!net.contains("area")) r.fail("/network", "missing 'area'");
  const Rect area = r.rect(net.at("area"), "/network/area");
  const json& sp = r.object(net, "/network", "speeds", false, {"vehicle", "walk", "train"});
  const double train_kmh = r.positive(sp, "/network/speeds", "train", 80.0);
  sc.network.tt = TravelTimeModel(r.positive(sp, "/network/speeds", "vehicle", 36.0),
                                  r.positive(sp, "/network/speeds", "walk", 5.0), train_kmh);
  const json& zj = r.object(net, "/network", "zones", true, {"grid", "rects"});
  try {
    if (zj.contains("grid") == zj.contains("rects")) r.fail("/network/zones", "give exactly one of 'grid' or 'rects'");
    if (zj.contains("grid")) {
      const json& g = zj.at("grid");
      if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
        r.fail("/network/zones/grid", "expected [columns, rows]");
      sc.network.zones = ZoneSet::grid(area, g[0].get<int>(), g[1].get<int>());
    } else {
      const json& rs = zj.at("rects");
      if (!rs.is_array() || rs.empty()) r.fail("/network/zones/rects", "expected a list of rectangles");
      std::vector<Rect> rects;
      for (std::size_t i = 0; i < rs.size(); ++i) rects.push_back(r.rect(rs[i], "/network/zones/rects/" + std::to_string(i)));
      sc.network.zones = ZoneSet::from_rects(area, rects);
    }
  } catch (const std::invalid_argument& e) {
    r.fail("/network/zones", e.what());
  }

  bool transit_enabled = false;
  if (net.contains("transit")) {
    const std::string tp = "/network/transit";
    const json& tj = r.object(net, "/network", "transit", false, {"enabled", "headway", "stations", "lines"});
    transit_enabled = r.boolean(tj, tp, "enabled", true);
    const double headway = r.positive(tj, tp, "headway", 10.0);
    std::vector<TransitStation> stations;
    if (!tj.contains("stations") || !tj.at("stations").is_array()) r.fail(tp, "missing 'stations' list");
    const json& sj = tj.at("stations");
    for (std::size_t i = 0; i < sj.size(); ++i) {
      const Point p = r.point(sj[i], tp + "/stations/" + std::to_string(i));
      if (!area.contains(p)) r.fail(tp + "/stations/" + std::to_string(i), "station outside the area");
      stations.push_back({static_cast<int>(i), p, {}});
    }
    std::vector<TransitLine> lines;
    if (!tj.contains("lines") || !tj.at("lines").is_array()) r.fail(tp, "missing 'lines' list");
    const json& lj = tj.at("lines");
    for (std::size_t l = 0; l < lj.size(); ++l) {
      const std::string lp = tp + "/lines/" + std::to_string(l);
      r.check_keys(lj[l], lp, {"stations", "headway", "offset"});
      TransitLine line;
      line.id = static_cast<int>(l);
      line.headway = r.positive(lj[l], lp, "headway", headway);
      line.offset = r.nonnegative(lj[l], lp, "offset", 0.0);
      line.speed_kmh = train_kmh;
      if (!lj[l].contains("stations") || !lj[l].at("stations").is_array()) r.fail(lp, "missing 'stations' list");
      for (const auto& s : lj[l].at("stations")) {
        if (!s.is_number_integer()) r.fail(lp + "/stations", "station ids must be integers");
        line.stations.push_back(s.get<int>());
      }
      lines.push_back(std::move(line));
    }
    try {
      sc.network.transit = TransitNetwork(std::move(stations), std::move(lines), sc.network.tt);
    } catch (const std::invalid_argument& e) {
      r.fail(tp, e.what());
    }
  }

  // demand
  const json& dj = r.object(root, "", "demand", true, {"rate_per_hour", "horizon", "seed", "requests_csv"});
  sc.demand.area = area;
  sc.demand.rate_per_hour = r.positive(dj, "/demand", "rate_per_hour", 100.0);
  sc.demand.horizon = r.nonnegative(dj, "/demand", "horizon", 120.0);
  sc.demand.seed = static_cast<std::uint64_t>(r.integer(dj, "/demand", "seed", 1, 0));
  if (dj.contains("requests_csv")) {
    const std::filesystem::path p = d.base_dir / r.text(dj, "/demand", "requests_csv", "");
    std::ifstream in(p);
    if (!in) r.fail("/demand/requests_csv", "cannot open " + p.string());
    try {
      sc.requests = read_requests_csv(in);
    } catch (const std::exception& e) {
      r.fail("/demand/requests_csv", e.what());
    }
    for (const auto& q : *sc.requests)
      if (!area.contains(q.origin) || !area.contains(q.destination))
        r.fail("/demand/requests_csv", "request " + std::to_string(q.id) + " lies outside the zoned area");
  }

  SimConfig& cfg = sc.sim;
  cfg.seed = sc.demand.seed;
  cfg.transit = transit_enabled;

  // fleet
  const json& fj = r.object(root, "", "fleet", true, {"size", "capacity", "placement", "depot"});
  cfg.fleet = static_cast<int>(r.integer(fj, "/fleet", "size", 40, 1));
  cfg.capacity = static_cast<int>(r.integer(fj, "/fleet", "capacity", 4, 1));
  const std::string placement = r.text(fj, "/fleet", "placement", "depot");
  if (placement != "depot" && placement != "spread") r.fail("/fleet/placement", "expected 'depot' or 'spread'");
  cfg.spread = placement == "spread";
  if (fj.contains("depot")) cfg.depot = r.point(fj.at("depot"), "/fleet/depot");
  if (!area.contains(cfg.depot)) r.fail("/fleet/depot", "depot outside the area");

  // dispatch
  const json& pj = r.object(root, "", "dispatch", false,
                            {"gamma", "beta", "beta_k", "beta_tbar", "k", "n_nearby", "walk_limit",
                             "second_leg_wait_cap", "reoptimize_limit"});
  auto& dc = cfg.dispatch;
  dc.gamma = r.number(pj, "/dispatch", "gamma", 0.5);
  if (dc.gamma < 0.0 || dc.gamma > 1.0) r.fail("/dispatch/gamma", "must lie in [0, 1]");
  if (pj.contains("beta") && pj.contains("beta_k") && pj.at("beta_k").get<double>() != 0.0)
    r.fail("/dispatch/beta", "give 'beta' or 'beta_k', not both");
  dc.beta = r.nonnegative(pj, "/dispatch", "beta", 0.0);
  const double beta_k = r.nonnegative(pj, "/dispatch", "beta_k", 0.0);
  if (beta_k > 0.0) {
    const double tbar = r.nonnegative(pj, "/dispatch", "beta_tbar", 0.0);
    if (!(tbar > 0.0)) r.fail("/dispatch/beta_tbar", "beta_k needs a positive beta_tbar");
    dc.beta = beta_k / tbar;
  }
  dc.k = static_cast<int>(r.integer(pj, "/dispatch", "k", 4, 1));
  dc.n_nearby = static_cast<int>(r.integer(pj, "/dispatch", "n_nearby", 0, 0));
  dc.walk_limit = r.nonnegative(pj, "/dispatch", "walk_limit", 30.0);
  dc.second_leg_wait_cap = r.nonnegative(pj, "/dispatch", "second_leg_wait_cap", 30.0);
  dc.reoptimize_limit = static_cast<int>(r.integer(pj, "/dispatch", "reoptimize_limit", 12, 0));

  // relocation
  const json& rj = r.object(root, "", "relocation", false,
                            {"policy", "interval", "warmup", "theta", "eta", "b", "node_limit", "cap",
                             "count_repositioning"});
  try {
    cfg.policy = parse_policy(r.text(rj, "/relocation", "policy", "nonmyopic"));
  } catch (const std::invalid_argument& e) {
    r.fail("/relocation/policy", e.what());
  }
  cfg.interval = r.positive(rj, "/relocation", "interval", 10.0);
  cfg.warmup = r.nonnegative(rj, "/relocation", "warmup", 10.0);
  cfg.theta = r.nonnegative(rj, "/relocation", "theta", 0.1);
  cfg.eta = r.number(rj, "/relocation", "eta", 0.95);
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) r.fail("/relocation/eta", "must lie in (0, 1)");
  cfg.queue_b = static_cast<int>(r.integer(rj, "/relocation", "b", 0, 0));
  cfg.node_limit = r.integer(rj, "/relocation", "node_limit", 100000, 1);
  cfg.zone_cap = static_cast<int>(r.integer(rj, "/relocation", "cap", 0, 0));
  cfg.count_repositioning_idle = r.boolean(rj, "/relocation", "count_repositioning", false);

  // estimation
  const json& ej = r.object(root, "", "estimation", false,
                            {"adaptive_mu", "dynamic_centroid", "mu0", "mu_skip_empty", "window"});
  auto& ec = cfg.estimation;
  ec.interval = cfg.interval;
  ec.adaptive_mu = r.boolean(ej, "/estimation", "adaptive_mu", true);
  ec.dynamic_centroid = r.boolean(ej, "/estimation", "dynamic_centroid", true);
  ec.mu_skip_empty = r.boolean(ej, "/estimation", "mu_skip_empty", false);
  ec.window = static_cast<std::size_t>(r.integer(ej, "/estimation", "window", 3, 1));
  if (ej.contains("mu0") && ej.at("mu0").is_string()) {
    if (ej.at("mu0").get<std::string>() != "auto") r.fail("/estimation/mu0", "expected a number or \"auto\"");
    ec.mu0 = 60.0 * sc.network.tt.speed_kmh(Mode::vehicle) / 3600.0 / mean_trip_km(area);
  } else if (ej.contains("mu0")) {
    ec.mu0 = r.positive(ej, "/estimation", "mu0", 0.05);
  } else {
    ec.mu0 = 60.0 * sc.network.tt.speed_kmh(Mode::vehicle) / 3600.0 / mean_trip_km(area);
  }

  // simulation
  const json& mj = r.object(root, "", "simulation", false, {"switching", "log_events"});
  cfg.switching = r.boolean(mj, "/simulation", "switching", true);
  cfg.log_events = r.boolean(mj, "/simulation", "log_events", false);

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    r.fail("", e.what());
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) { return build_scenario(read_scenario_document(path)); }

// ---------------------------------------------------------------- overrides

/// Override names accepted by `apply_override` (also the sweep axis names).
inline const std::vector<std::string>& override_names() {
  static const std::vector<std::string> names = {"seed",    "policy",   "transit",     "headway",
                                                 "beta_k",  "beta",     "theta",       "fleet",
                                                 "switching", "adaptive_mu", "dynamic_centroid", "rate"};
  return names;
}

namespace detail {

inline bool parse_on_off(const std::string& name, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument(name + ": expected on or off, got '" + v + "'");
}

inline double parse_number(const std::string& name, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x))
    throw std::invalid_argument(name + ": expected a number, got '" + v + "'");
  return x;
}

inline long parse_integer(const std::string& name, const std::string& v) {
  const double x = parse_number(name, v);
  if (std::floor(x) != x) throw std::invalid_argument(name + ": expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

}  // namespace detail

/// Edit the scenario document for one command-line or sweep override.
/// Accepts dashes or underscores in the name.
inline void apply_override(json& doc, std::string name, const std::string& value) {
  for (auto& c : name)
    if (c == '-') c = '_';
  if (name == "seed") {
    doc["demand"]["seed"] = detail::parse_integer(name, value);
  } else if (name == "policy") {
    doc["relocation"]["policy"] = to_string(parse_policy(value));
  } else if (name == "transit") {
    if (!doc.contains("network") || !doc["network"].contains("transit"))
      throw std::invalid_argument("transit: scenario has no transit network");
    doc["network"]["transit"]["enabled"] = detail::parse_on_off(name, value);
  } else if (name == "headway") {
    if (!doc.contains("network") || !doc["network"].contains("transit"))
      throw std::invalid_argument("headway: scenario has no transit network");
    auto& t = doc["network"]["transit"];
    t["headway"] = detail::parse_number(name, value);
    if (t.contains("lines"))
      for (auto& l : t["lines"]) l.erase("headway");
  } else if (name == "beta_k") {
    doc["dispatch"]["beta_k"] = detail::parse_number(name, value);
    doc["dispatch"].erase("beta");
  } else if (name == "beta") {
    doc["dispatch"]["beta"] = detail::parse_number(name, value);
    doc["dispatch"].erase("beta_k");
  } else if (name == "theta") {
    doc["relocation"]["theta"] = detail::parse_number(name, value);
  } else if (name == "fleet") {
    doc["fleet"]["size"] = detail::parse_integer(name, value);
  } else if (name == "switching") {
    doc["simulation"]["switching"] = detail::parse_on_off(name, value);
  } else if (name == "adaptive_mu") {
    doc["estimation"]["adaptive_mu"] = detail::parse_on_off(name, value);
  } else if (name == "dynamic_centroid") {
    doc["estimation"]["dynamic_centroid"] = detail::parse_on_off(name, value);
  } else if (name == "rate") {
    doc["demand"]["rate_per_hour"] = detail::parse_number(name, value);
  } else {
    throw std::invalid_argument("unknown override '" + name + "'");
  }
}

/// FNV-1a 64 of the canonical (sorted-key, compact) document.
inline std::string config_hash(const json& doc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- CSV output

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline const char* metrics_header() {
  return "config_hash,WT_mean,WT_max,JT_mean,VTL_mean,share_R,share_WTR,share_RTW,share_RTR,sim_wall_seconds";
}

inline std::string metrics_row(const std::string& hash, const MetricsReport& m) {
  std::string s = hash;
  for (double v : {m.wt_mean, m.wt_max, m.jt_mean, m.vtl_mean, m.share_of(ServiceOption::R),
                   m.share_of(ServiceOption::WTR), m.share_of(ServiceOption::RTW), m.share_of(ServiceOption::RTR),
                   m.wall_seconds})
    s += "," + fmt6(v);
  return s;
}

inline void write_metrics_csv(std::ostream& os, const std::string& hash, const MetricsReport& m) {
  os << metrics_header() << '\n' << metrics_row(hash, m) << '\n';
}

inline void write_decisions_csv(std::ostream& os, const MetricsReport& m) {
  os << "request_id,option,vehicle_id,s1,s2,cost_R,cost_RTR,cost_RTW,cost_WTR\n";
  auto cost = [](double c) { return std::isfinite(c) ? fmt6(c) : std::string(); };
  for (const auto& d : m.decisions) {
    os << d.request << ',' << to_string(d.option) << ',' << d.vehicle << ',';
    if (d.s1 >= 0) os << d.s1;
    os << ',';
    if (d.s2 >= 0) os << d.s2;
    os << ',' << cost(d.cost[static_cast<std::size_t>(ServiceOption::R)]) << ','
       << cost(d.cost[static_cast<std::size_t>(ServiceOption::RTR)]) << ','
       << cost(d.cost[static_cast<std::size_t>(ServiceOption::RTW)]) << ','
       << cost(d.cost[static_cast<std::size_t>(ServiceOption::WTR)]) << '\n';
  }
}

inline void write_relocation_csv(std::ostream& os, const MetricsReport& m) {
  os << "epoch,policy,phi,moved_vehicles,total_reloc_minutes\n";
  for (const auto& r : m.relocations)
    os << r.epoch << ',' << to_string(r.policy) << ',' << fmt6(r.phi) << ',' << r.moved << ',' << fmt6(r.minutes)
       << '\n';
}

inline void write_zones_csv(std::ostream& os, const MetricsReport& m) {
  os << "epoch,zone,lambda,mu,cx,cy,idle_count\n";
  for (const auto& e : m.epochs)
    for (std::size_t z = 0; z < e.lambda.size(); ++z)
      os << e.epoch << ',' << z << ',' << fmt6(e.lambda[z]) << ',' << fmt6(e.mu[z]) << ','
         << fmt6(e.centroid[z].x) << ',' << fmt6(e.centroid[z].y) << ',' << e.idle[z] << '\n';
}

inline void write_events_csv(std::ostream& os, const MetricsReport& m) {
  os << "time,kind,vehicle_id,request_id,x,y\n";
  for (const auto& e : m.events) {
    os << fmt6(e.time) << ',' << e.kind << ',';
    if (e.vehicle >= 0) os << e.vehicle;
    os << ',';
    if (e.request >= 0) os << e.request;
    os << ',';
    if (e.vehicle >= 0) os << fmt6(e.at.x) << ',' << fmt6(e.at.y);
    else os << ',';
    os << '\n';
  }
}

/// Write metrics.csv, decisions.csv, relocation.csv, zones.csv (and
/// events.csv when events were logged) into `dir`.
inline void write_run_outputs(const std::filesystem::path& dir, const std::string& hash, const MetricsReport& m) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, hash, m);
  }
  {
    auto f = open("decisions.csv");
    write_decisions_csv(f, m);
  }
  {
    auto f = open("relocation.csv");
    write_relocation_csv(f, m);
  }
  {
    auto f = open("zones.csv");
    write_zones_csv(f, m);
  }
  if (!m.events.empty()) {
    auto f = open("events.csv");
    write_events_csv(f, m);
  }
}

// ---------------------------------------------------------------- CSV input

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') out.emplace_back();
    else if (c != '\r') out.back() += c;
  }
  return out;
}

inline CsvTable read_csv(std::istream& in, const std::string& name) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(name + ": empty file");
  t.header = split_csv_line(line);
  for (int n = 2; std::getline(in, line); ++n) {
    if (line.empty() || line == "\r") continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size())
      throw std::invalid_argument(name + ":" + std::to_string(n) + ": expected " + std::to_string(t.header.size()) +
                                  " fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_csv(in, path);
}

/// Percentage change of every numeric column, row by row:
/// (variant - baseline) / baseline * 100. Text columns are skipped.
struct DeltaRow {
  std::size_t row = 0;
  std::string column;
  double baseline = 0.0, variant = 0.0, percent = 0.0;
};

inline std::vector<DeltaRow> compare_tables(const CsvTable& base, const CsvTable& variant) {
  if (base.header != variant.header) throw std::invalid_argument("column mismatch between baseline and variant");
  if (base.rows.size() != variant.rows.size()) throw std::invalid_argument("row count mismatch between baseline and variant");
  std::vector<DeltaRow> out;
  for (std::size_t r = 0; r < base.rows.size(); ++r) {
    for (std::size_t c = 0; c < base.header.size(); ++c) {
      double b = 0.0, v = 0.0;
      try {
        b = detail::parse_number(base.header[c], base.rows[r][c]);
        v = detail::parse_number(base.header[c], variant.rows[r][c]);
      } catch (const std::invalid_argument&) {
        continue;
      }
      double pct = 0.0;
      if (b != 0.0) pct = (v - b) / b * 100.0;
      else if (v != 0.0) pct = std::copysign(std::numeric_limits<double>::infinity(), v);
      out.push_back({r, base.header[c], b, v, pct});
    }
  }
  return out;
}

// ---------------------------------------------------------------- sweep

struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

/// "name=v1,v2,..." with name one of override_names().
inline SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
    throw std::invalid_argument("axis '" + spec + "': expected name=v1,v2,...");
  SweepAxis a;
  a.name = spec.substr(0, eq);
  for (auto& c : a.name)
    if (c == '-') c = '_';
  bool known = false;
  for (const auto& n : override_names()) known = known || n == a.name;
  if (!known) throw std::invalid_argument("axis '" + a.name + "' is not a known override");
  a.values = split_csv_line(spec.substr(eq + 1));
  for (const auto& v : a.values)
    if (v.empty()) throw std::invalid_argument("axis '" + a.name + "' has an empty value");
  return a;
}

/// Cartesian product of the axes, first axis varying slowest. No axes
/// gives one empty cell.
inline std::vector<std::vector<std::pair<std::string, std::string>>> sweep_cells(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> cells(1);
  for (const auto& a : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& c : cells)
      for (const auto& v : a.values) {
        auto e = c;
        e.emplace_back(a.name, v);
        next.push_back(std::move(e));
      }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace rtsim
