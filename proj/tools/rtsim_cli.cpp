// rtsim: run, sweep, compare and validate ridesharing-with-transit scenarios.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rtsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace rtsim;

namespace {

struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;

  // Register one --flag that records an override named `name`.
  void add(CLI::App* cmd, const std::string& flag, const std::string& name, const std::string& help) {
    cmd->add_option_function<std::string>(
           flag, [this, name](const std::string& v) { items.emplace_back(name, v); }, help)
        ->type_name(name == "transit" || name == "switching" || name == "adaptive_mu" || name == "dynamic_centroid"
                        ? "on|off"
                        : "VALUE");
  }

  void attach(CLI::App* cmd) {
    add(cmd, "--seed", "seed", "demand and simulation seed");
    add(cmd, "--policy", "policy", "relocation policy: waiting, busiest, myopic, nonmyopic");
    add(cmd, "--transit", "transit", "enable the transit network");
    add(cmd, "--headway", "headway", "headway of every line, minutes");
    add(cmd, "--beta-k", "beta_k", "look-ahead weight as k / beta_tbar");
    add(cmd, "--theta", "theta", "relocation cost weight");
    add(cmd, "--fleet", "fleet", "number of vehicles");
    add(cmd, "--switching", "switching", "let repositioning vehicles take requests");
    add(cmd, "--adaptive-mu", "adaptive_mu", "learn per-zone service rates");
    add(cmd, "--dynamic-centroid", "dynamic_centroid", "move relocation targets to demand centroids");
    add(cmd, "--rate", "rate", "request rate per hour");
  }
};

ScenarioDocument load(const std::string& path, const Overrides& o) {
  ScenarioDocument d = read_scenario_document(path);
  for (const auto& [k, v] : o.items) apply_override(d.doc, k, v);
  return d;
}

int cmd_validate(const std::string& path, const Overrides& o) {
  const ScenarioDocument d = load(path, o);
  const Scenario sc = build_scenario(d);
  std::cout << path << ": ok (" << sc.network.zones.size() << " zones, "
            << (sc.network.transit ? sc.network.transit->station_count() : 0) << " stations, fleet " << sc.sim.fleet
            << ", transit " << (sc.sim.transit ? "on" : "off") << ", hash " << config_hash(d.doc) << ")\n";
  return 0;
}

int cmd_run(const std::string& path, const Overrides& o, const std::string& out, bool events) {
  ScenarioDocument d = load(path, o);
  if (events) d.doc["simulation"]["log_events"] = true;
  const Scenario sc = build_scenario(d);
  const std::string hash = config_hash(d.doc);
  const MetricsReport m = simulate(sc);
  write_run_outputs(out, hash, m);
  std::cout << metrics_header() << '\n' << metrics_row(hash, m) << '\n';
  return 0;
}

int cmd_sweep(const std::string& path, const Overrides& o, const std::vector<std::string>& axis_specs,
              const std::string& out) {
  std::vector<SweepAxis> axes;
  for (const auto& s : axis_specs) axes.push_back(parse_axis(s));
  const fs::path file = fs::path(out) / "sweep.csv";
  fs::create_directories(out);

  std::string header = "config_hash";
  for (const auto& a : axes) header += "," + a.name;
  header += std::string(metrics_header()).substr(std::string("config_hash").size());

  std::set<std::string> done;
  bool fresh = true;
  if (fs::exists(file)) {
    const CsvTable prev = read_csv_file(file.string());
    std::string prev_header;
    for (std::size_t i = 0; i < prev.header.size(); ++i) prev_header += (i ? "," : "") + prev.header[i];
    if (prev_header != header) throw std::invalid_argument(file.string() + " was written for different axes");
    for (const auto& r : prev.rows) done.insert(r[0]);
    fresh = false;
  }
  std::ofstream f(file, std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  if (fresh) f << header << '\n';

  const auto cells = sweep_cells(axes);
  int ran = 0;
  for (const auto& cell : cells) {
    ScenarioDocument d = load(path, o);
    for (const auto& [k, v] : cell) apply_override(d.doc, k, v);
    const std::string hash = config_hash(d.doc);
    std::string label;
    for (const auto& [k, v] : cell) label += " " + k + "=" + v;
    if (done.count(hash)) {
      std::cerr << "skip" << label << " (" << hash << ")\n";
      continue;
    }
    const MetricsReport m = simulate(build_scenario(d));
    std::string row = metrics_row(hash, m);
    std::string values;
    for (const auto& [k, v] : cell) values += "," + v;
    row.insert(hash.size(), values);
    f << row << '\n' << std::flush;
    done.insert(hash);
    ++ran;
    std::cerr << "cell" << label << ": WT " << fmt6(m.wt_mean) << " JT " << fmt6(m.jt_mean) << " VTL "
              << fmt6(m.vtl_mean) << '\n';
  }
  std::cout << file.string() << ": " << ran << " cells run, " << cells.size() - static_cast<std::size_t>(ran)
            << " already present\n";
  return 0;
}

int cmd_compare(const std::string& base, const std::string& variant) {
  const auto rows = compare_tables(read_csv_file(base), read_csv_file(variant));
  std::cout << "row,column,baseline,variant,delta_percent\n";
  for (const auto& r : rows)
    std::cout << r.row << ',' << r.column << ',' << fmt6(r.baseline) << ',' << fmt6(r.variant) << ','
              << fmt6(r.percent) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic ridesharing with transit transfers: discrete-event simulator"};
  app.require_subcommand(1);

  std::string scenario, out = "out";
  std::vector<std::string> axes;
  bool events = false;
  Overrides run_o, sweep_o, validate_o;

  auto* run = app.add_subcommand("run", "simulate one scenario and write CSV reports");
  run->add_option("--scenario", scenario, "scenario JSON file")->required();
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_flag("--events", events, "also write events.csv");
  run_o.attach(run);

  auto* sweep = app.add_subcommand("sweep", "cartesian parameter sweep into DIR/sweep.csv");
  sweep->add_option("--scenario", scenario, "scenario JSON file")->required();
  sweep->add_option("--axis", axes, "name=v1,v2,... (repeatable)");
  sweep->add_option("--out", out, "output directory")->capture_default_str();
  sweep_o.attach(sweep);

  std::string base, variant;
  auto* compare = app.add_subcommand("compare", "percentage change of a variant metrics.csv against a baseline");
  compare->add_option("baseline", base, "baseline metrics.csv")->required();
  compare->add_option("variant", variant, "variant metrics.csv")->required();

  auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
  validate->add_option("--scenario", scenario, "scenario JSON file")->required();
  validate_o.attach(validate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, run_o, out, events);
    if (*sweep) return cmd_sweep(scenario, sweep_o, axes, out);
    if (*compare) return cmd_compare(base, variant);
    if (*validate) return cmd_validate(scenario, validate_o);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
