#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rtsim/geometry.hpp"
#include "rtsim/milp.hpp"
#include "rtsim/queueing.hpp"

namespace rtsim {

/// Data of one idle-vehicle relocation problem. Rates are per minute,
/// times in minutes. `cap[j]` bounds how many idle vehicles zone j may hold
/// after relocation.
struct RelocationInstance {
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<std::vector<double>> t;
  std::vector<std::vector<double>> r;
  std::vector<int> idle;
  std::vector<int> cap;
  double theta = 0.1;
  RhoTable rho;

  std::size_t zones() const { return lambda.size(); }
  int total_idle() const {
    int b = 0;
    for (int v : idle) b += v;
    return b;
  }

  void validate() const {
    const std::size_t n = zones();
    if (n == 0) throw std::invalid_argument("relocation instance has no zones");
    if (mu.size() != n || t.size() != n || r.size() != n || idle.size() != n || cap.size() != n)
      throw std::invalid_argument("relocation instance arrays disagree on the zone count");
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i].size() != n || r[i].size() != n) throw std::invalid_argument("travel matrices must be square");
      if (lambda[i] < 0.0 || mu[i] < 0.0) throw std::invalid_argument("rates must be >= 0");
      if (idle[i] < 0 || cap[i] < 0) throw std::invalid_argument("counts must be >= 0");
      for (std::size_t j = 0; j < n; ++j)
        if (t[i][j] < 0.0 || r[i][j] < 0.0) throw std::invalid_argument("travel times must be >= 0");
    }
    if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
    int need = 0;
    for (int c : cap) need = std::max(need, c);
    if (rho.max_servers() < need) throw std::invalid_argument("rho table does not cover the per-zone caps");
  }
};

struct RelocationSolution {
  SolveStatus status = SolveStatus::infeasible;
  bool myopic = false;           // intensity rows were left out
  bool fell_back = false;        // non-myopic was infeasible, myopic solved instead
  double phi = 0.0;
  std::vector<std::vector<int>> X;
  std::vector<std::vector<double>> Y;  // Y[j][m-1]
  std::vector<std::vector<int>> W;
  std::vector<double> S;
  std::vector<double> D;
  long nodes = 0;

  bool solved() const { return status == SolveStatus::optimal || (status == SolveStatus::node_limit && !W.empty()); }
  int moved() const {
    int k = 0;
    for (std::size_t i = 0; i < W.size(); ++i)
      for (std::size_t j = 0; j < W.size(); ++j)
        if (i != j) k += W[i][j];
    return k;
  }
};

/// Column positions of the textbook formulation built by `to_milp`.
struct RelocationLayout {
  std::vector<std::vector<int>> X, Y, W;
  std::vector<int> S, D;
};

/// The relocation program exactly as stated: binary assignment X, ordered
/// fractional server levels Y, integer flows W and flow totals S, D. With
/// `intensity` false the queue-intensity rows are omitted (myopic variant).
inline MilpProblem to_milp(const RelocationInstance& in, bool intensity = true, RelocationLayout* layout = nullptr) {
  in.validate();
  const std::size_t n = in.zones();
  const int B = in.total_idle();
  MilpProblem p;
  RelocationLayout L;
  L.X.assign(n, std::vector<int>(n));
  L.W.assign(n, std::vector<int>(n));
  L.Y.assign(n, {});
  auto s = [](std::size_t a) { return std::to_string(a + 1); };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      L.X[i][j] = p.add_variable("X_" + s(i) + "_" + s(j), VarKind::binary, 0, 1, in.lambda[i] * in.t[i][j]);
  for (std::size_t j = 0; j < n; ++j)
    for (int m = 1; m <= in.cap[j]; ++m)
      L.Y[j].push_back(p.add_variable("Y_" + s(j) + "_" + std::to_string(m), VarKind::continuous, 0, 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      L.W[i][j] = p.add_variable("W_" + s(i) + "_" + s(j), VarKind::integer, 0, kInf, in.theta * in.r[i][j]);
  for (std::size_t i = 0; i < n; ++i) L.S.push_back(p.add_variable("S_" + s(i), VarKind::continuous, 0, kInf));
  for (std::size_t j = 0; j < n; ++j) L.D.push_back(p.add_variable("D_" + s(j), VarKind::continuous, 0, kInf));

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < n; ++j) row.emplace_back(L.X[i][j], 1.0);
    p.add_constraint(row, Sense::eq, 1.0, "assign_" + s(i));
    std::vector<int> group;
    for (std::size_t j = 0; j < n; ++j) group.push_back(L.X[i][j]);
    p.choice_groups.push_back(group);
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t m = 1; m < L.Y[j].size(); ++m)
      p.add_constraint({{L.Y[j][m], 1.0}, {L.Y[j][m - 1], -1.0}}, Sense::le, 0.0, "order_" + s(j) + "_" + std::to_string(m + 1));
  if (intensity) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<int, double>> row;
      for (std::size_t i = 0; i < n; ++i) row.emplace_back(L.X[i][j], in.lambda[i]);
      for (std::size_t m = 0; m < L.Y[j].size(); ++m) {
        const double inc = m == 0 ? in.rho(1) : in.rho(static_cast<int>(m) + 1) - in.rho(static_cast<int>(m));
        row.emplace_back(L.Y[j][m], -in.mu[j] * inc);
      }
      p.add_constraint(row, Sense::le, 0.0, "intensity_" + s(j));
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (L.Y[j].empty())
        p.add_constraint({{L.X[i][j], 1.0}}, Sense::le, 0.0, "link_" + s(i) + "_" + s(j));
      else
        p.add_constraint({{L.X[i][j], 1.0}, {L.Y[j][0], -1.0}}, Sense::le, 0.0, "link_" + s(i) + "_" + s(j));
    }
  {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < n; ++j)
      for (int v : L.Y[j]) row.emplace_back(v, 1.0);
    p.add_constraint(row, Sense::eq, B, "fleet");
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < n; ++j) row.emplace_back(L.W[i][j], 1.0);
    row.emplace_back(L.S[i], -1.0);
    p.add_constraint(row, Sense::eq, 0.0, "supply_" + s(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < n; ++i) row.emplace_back(L.W[i][j], 1.0);
    row.emplace_back(L.D[j], -1.0);
    p.add_constraint(row, Sense::eq, 0.0, "demand_" + s(j));
  }
  for (std::size_t j = 0; j < n; ++j) p.add_constraint({{L.S[j], 1.0}}, Sense::le, in.idle[j], "outflow_" + s(j));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row{{L.D[j], -1.0}, {L.S[j], 1.0}};
    for (int v : L.Y[j]) row.emplace_back(v, 1.0);
    p.add_constraint(row, Sense::le, in.idle[j], "balance_" + s(j));
  }
  if (layout) *layout = std::move(L);
  return p;
}

/// Names of every violated constraint family member; empty when the
/// solution is feasible within `tol`.
inline std::vector<std::string> violations(const RelocationInstance& in, const RelocationSolution& sol, bool intensity,
                                           double tol = 1e-6) {
  std::vector<std::string> bad;
  const std::size_t n = in.zones();
  auto at = [](const char* what, std::size_t a) { return std::string(what) + " " + std::to_string(a); };
  if (sol.X.size() != n || sol.W.size() != n || sol.Y.size() != n || sol.S.size() != n || sol.D.size() != n) {
    bad.push_back("shape");
    return bad;
  }
  for (std::size_t i = 0; i < n; ++i) {
    int row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (sol.X[i][j] != 0 && sol.X[i][j] != 1) bad.push_back(at("binary", i));
      row += sol.X[i][j];
    }
    if (row != 1) bad.push_back(at("assignment", i));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (sol.Y[j].size() != static_cast<std::size_t>(in.cap[j])) bad.push_back(at("levels", j));
    for (std::size_t m = 0; m < sol.Y[j].size(); ++m) {
      const double y = sol.Y[j][m];
      if (y < -tol || y > 1.0 + tol) bad.push_back(at("unit_interval", j));
      if (m > 0 && y > sol.Y[j][m - 1] + tol) bad.push_back(at("ordering", j));
      total += y;
    }
    if (intensity) {
      double load = 0.0;
      for (std::size_t i = 0; i < n; ++i) load += in.lambda[i] * sol.X[i][j];
      double capacity = 0.0;
      for (std::size_t m = 0; m < sol.Y[j].size(); ++m) {
        const double inc = m == 0 ? in.rho(1) : in.rho(static_cast<int>(m) + 1) - in.rho(static_cast<int>(m));
        capacity += sol.Y[j][m] * inc;
      }
      if (load > in.mu[j] * capacity + tol) bad.push_back(at("intensity", j));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double y1 = sol.Y[j].empty() ? 0.0 : sol.Y[j][0];
      if (sol.X[i][j] > y1 + tol) bad.push_back(at("linking", j));
    }
  }
  if (std::abs(total - in.total_idle()) > tol) bad.push_back("fleet_total");
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0, inflow = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (sol.W[i][j] < 0) bad.push_back(at("nonnegative", i));
      out += sol.W[i][j];
      inflow += sol.W[j][i];
    }
    if (std::abs(out - sol.S[i]) > tol) bad.push_back(at("supply", i));
    if (std::abs(inflow - sol.D[i]) > tol) bad.push_back(at("demand", i));
    if (sol.S[i] < -tol || sol.D[i] < -tol) bad.push_back(at("nonnegative", i));
    if (sol.S[i] > in.idle[i] + tol) bad.push_back(at("outflow_cap", i));
    double levels = 0.0;
    for (double y : sol.Y[i]) levels += y;
    if (-sol.D[i] + sol.S[i] - in.idle[i] + levels > tol) bad.push_back(at("balance", i));
  }
  return bad;
}

inline double relocation_objective(const RelocationInstance& in, const RelocationSolution& sol) {
  double phi = 0.0;
  for (std::size_t i = 0; i < in.zones(); ++i)
    for (std::size_t j = 0; j < in.zones(); ++j)
      phi += in.lambda[i] * in.t[i][j] * sol.X[i][j] + in.theta * in.r[i][j] * sol.W[i][j];
  return phi;
}

/// Solve the textbook model directly. Slower than the lifted form below; kept
/// for cross-checking.
inline RelocationSolution solve_direct(const RelocationInstance& in, bool intensity, const MilpOptions& opt = {}) {
  RelocationLayout L;
  const MilpProblem p = to_milp(in, intensity, &L);
  const MilpSolution ms = solve(p, opt);
  RelocationSolution out;
  out.status = ms.status;
  out.myopic = !intensity;
  out.nodes = ms.nodes;
  if (!ms.has_solution()) return out;
  const std::size_t n = in.zones();
  out.X.assign(n, std::vector<int>(n));
  out.W.assign(n, std::vector<int>(n));
  out.Y.assign(n, {});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.X[i][j] = static_cast<int>(std::lround(ms.values[static_cast<std::size_t>(L.X[i][j])]));
      out.W[i][j] = static_cast<int>(std::lround(ms.values[static_cast<std::size_t>(L.W[i][j])]));
    }
  for (std::size_t j = 0; j < n; ++j)
    for (int v : L.Y[j]) out.Y[j].push_back(ms.values[static_cast<std::size_t>(v)]);
  for (std::size_t i = 0; i < n; ++i) {
    out.S.push_back(ms.values[static_cast<std::size_t>(L.S[i])]);
    out.D.push_back(ms.values[static_cast<std::size_t>(L.D[i])]);
  }
  out.phi = relocation_objective(in, out);
  return out;
}

namespace detail {

// Same feasible set written with Y[j][m] = sum_{l>=m} Z[j][l], Z >= 0,
// sum_l Z[j][l] <= 1. The ordering rows disappear and every level sum
// becomes sum_l l*Z[j][l]. Self-flows are fixed to zero (they cancel in
// every row) and each flow is bounded by its origin's stock.
inline RelocationSolution solve_lifted(const RelocationInstance& in, bool intensity, const MilpOptions& opt) {
  in.validate();
  const std::size_t n = in.zones();
  const int B = in.total_idle();
  MilpProblem p;
  std::vector<std::vector<int>> X(n, std::vector<int>(n)), W(n, std::vector<int>(n)), Z(n);
  std::vector<int> S(n), D(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      X[i][j] = p.add_variable("", VarKind::binary, 0, 1, in.lambda[i] * in.t[i][j]);
  for (std::size_t j = 0; j < n; ++j)
    for (int l = 1; l <= in.cap[j]; ++l) Z[j].push_back(p.add_variable("", VarKind::continuous, 0, 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      W[i][j] = p.add_variable("", VarKind::integer, 0, i == j ? 0.0 : in.idle[i], in.theta * in.r[i][j]);
  for (std::size_t i = 0; i < n; ++i) S[i] = p.add_variable("", VarKind::continuous, 0, in.idle[i]);
  for (std::size_t j = 0; j < n; ++j) D[j] = p.add_variable("", VarKind::continuous, 0, B);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row;
    std::vector<int> group;
    for (std::size_t j = 0; j < n; ++j) {
      row.emplace_back(X[i][j], 1.0);
      group.push_back(X[i][j]);
    }
    p.add_constraint(row, Sense::eq, 1.0);
    p.choice_groups.push_back(group);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (Z[j].empty()) continue;
    std::vector<std::pair<int, double>> row;
    for (int v : Z[j]) row.emplace_back(v, 1.0);
    p.add_constraint(row, Sense::le, 1.0);
  }
  if (intensity) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<int, double>> row;
      for (std::size_t i = 0; i < n; ++i)
        if (in.lambda[i] != 0.0) row.emplace_back(X[i][j], in.lambda[i]);
      for (std::size_t l = 0; l < Z[j].size(); ++l) row.emplace_back(Z[j][l], -in.mu[j] * in.rho(static_cast<int>(l) + 1));
      if (!row.empty()) p.add_constraint(row, Sense::le, 0.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<int, double>> row{{X[i][j], 1.0}};
      for (int v : Z[j]) row.emplace_back(v, -1.0);
      p.add_constraint(row, Sense::le, 0.0);
    }
  {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < Z[j].size(); ++l) row.emplace_back(Z[j][l], static_cast<double>(l + 1));
    p.add_constraint(row, Sense::eq, B);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> out_row, in_row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      out_row.emplace_back(W[i][j], 1.0);
      in_row.emplace_back(W[j][i], 1.0);
    }
    out_row.emplace_back(S[i], -1.0);
    in_row.emplace_back(D[i], -1.0);
    p.add_constraint(out_row, Sense::eq, 0.0);
    p.add_constraint(in_row, Sense::eq, 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row{{D[j], -1.0}, {S[j], 1.0}};
    for (std::size_t l = 0; l < Z[j].size(); ++l) row.emplace_back(Z[j][l], static_cast<double>(l + 1));
    p.add_constraint(row, Sense::le, in.idle[j]);
  }

  const MilpSolution ms = solve(p, opt);
  RelocationSolution out;
  out.status = ms.status;
  out.myopic = !intensity;
  out.nodes = ms.nodes;
  if (!ms.has_solution()) return out;
  auto val = [&](int v) { return ms.values[static_cast<std::size_t>(v)]; };
  out.X.assign(n, std::vector<int>(n));
  out.W.assign(n, std::vector<int>(n));
  out.Y.assign(n, {});
  out.S.assign(n, 0.0);
  out.D.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.X[i][j] = static_cast<int>(std::lround(val(X[i][j])));
      out.W[i][j] = static_cast<int>(std::lround(val(W[i][j])));
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.S[i] += out.W[i][j];
      out.D[j] += out.W[i][j];
    }
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    out.Y[j].assign(Z[j].size(), 0.0);
    for (std::size_t l = Z[j].size(); l-- > 0;) {
      acc += std::max(0.0, val(Z[j][l]));
      out.Y[j][l] = std::min(1.0, acc);
    }
  }
  out.phi = relocation_objective(in, out);
  return out;
}

}  // namespace detail

/// Relocation with the queue-intensity rows. When those rows admit no
/// assignment (or the node budget runs out before one is found) the myopic
/// program is solved instead and `fell_back` is set.
inline RelocationSolution solve_nonmyopic(const RelocationInstance& in, const MilpOptions& opt = {}) {
  RelocationSolution sol = detail::solve_lifted(in, true, opt);
  if (!sol.solved()) {
    sol = detail::solve_lifted(in, false, opt);
    sol.fell_back = true;
  }
  return sol;
}

inline RelocationSolution solve_myopic(const RelocationInstance& in, const MilpOptions& opt = {}) {
  return detail::solve_lifted(in, false, opt);
}

/// Solve without falling back; status is infeasible when the intensity rows
/// cannot be met.
inline RelocationSolution solve_strict(const RelocationInstance& in, bool intensity, const MilpOptions& opt = {}) {
  return detail::solve_lifted(in, intensity, opt);
}

struct IdleVehicle {
  int id = 0;
  int zone = 0;
  Point position;
};

struct RelocationOrder {
  int vehicle = 0;
  int from_zone = 0;
  int to_zone = 0;
  Point target;
};

/// Turn zone-to-zone flows into vehicle orders. Within a zone the lowest
/// vehicle ids move first, destinations in ascending zone order.
inline std::vector<RelocationOrder> orders_from_flows(const std::vector<std::vector<int>>& W,
                                                     std::vector<IdleVehicle> idle,
                                                     const std::vector<Point>& targets) {
  std::sort(idle.begin(), idle.end(), [](const IdleVehicle& a, const IdleVehicle& b) { return a.id < b.id; });
  std::vector<RelocationOrder> out;
  for (std::size_t i = 0; i < W.size(); ++i) {
    std::vector<int> here;
    for (const auto& v : idle)
      if (v.zone == static_cast<int>(i)) here.push_back(v.id);
    std::size_t next = 0;
    for (std::size_t j = 0; j < W.size(); ++j) {
      if (i == j) continue;
      for (int k = 0; k < W[i][j]; ++k) {
        if (next >= here.size()) throw std::logic_error("relocation flow exceeds idle vehicles in zone " + std::to_string(i));
        out.push_back({here[next++], static_cast<int>(i), static_cast<int>(j), targets.at(j)});
      }
    }
  }
  return out;
}

/// Zone with the largest rate; ties to the lowest id. -1 when all rates are 0.
inline int busiest_zone(const std::vector<double>& lambda) {
  int best = -1;
  double top = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j)
    if (lambda[j] > top) {
      top = lambda[j];
      best = static_cast<int>(j);
    }
  return best;
}

/// Probability of at least one arrival at rate `lambda` within `minutes`.
inline double arrival_probability(double lambda, double minutes) { return 1.0 - std::exp(-lambda * minutes); }

/// Each idle vehicle (ascending id) draws a threshold uniform on (0.5, 1]
/// and heads for the busiest zone's centre when the chance of an arrival
/// there during its trip reaches the threshold.
inline std::vector<RelocationOrder> busiest_zone_orders(std::vector<IdleVehicle> idle, const std::vector<double>& lambda,
                                                        const std::vector<Point>& centers, const TravelTimeModel& tt,
                                                        std::mt19937_64& rng) {
  std::vector<RelocationOrder> out;
  const int b = busiest_zone(lambda);
  if (b < 0) return out;
  std::sort(idle.begin(), idle.end(), [](const IdleVehicle& a, const IdleVehicle& c) { return a.id < c.id; });
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Point target = centers.at(static_cast<std::size_t>(b));
  for (const auto& v : idle) {
    const double threshold = 1.0 - 0.5 * u(rng);
    const double p = arrival_probability(lambda[static_cast<std::size_t>(b)], tt.vehicle(v.position, target));
    if (p >= threshold && !(v.position == target)) out.push_back({v.id, v.zone, b, target});
  }
  return out;
}

}  // namespace rtsim
