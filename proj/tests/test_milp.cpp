#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "rtsim/milp.hpp"

using namespace rtsim;

namespace {

struct Plane {
  std::vector<double> a;
  Sense sense;
  double b;
};

// Solve the square system rows(idx) x = b by Gaussian elimination.
bool solve_square(const std::vector<Plane>& planes, const std::vector<int>& idx, std::size_t n, std::vector<double>& x) {
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) m[r][c] = planes[static_cast<std::size_t>(idx[r])].a[c];
    m[r][n] = planes[static_cast<std::size_t>(idx[r])].b;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-10) return false;
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) x[c] = m[c][n] / m[c][c];
  return true;
}

// Minimum of c'x over a bounded polyhedron by visiting every vertex.
// Returns +inf when no vertex is feasible.
double vertex_oracle(const std::vector<double>& c, const std::vector<Plane>& planes) {
  const std::size_t n = c.size();
  double best = kInf;
  std::vector<int> pick;
  std::vector<double> x;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (pick.size() == n) {
      if (!solve_square(planes, pick, n, x)) return;
      for (const auto& p : planes) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < n; ++k) lhs += p.a[k] * x[k];
        if (p.sense != Sense::ge && lhs > p.b + 1e-7) return;
        if (p.sense != Sense::le && lhs < p.b - 1e-7) return;
      }
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += c[k] * x[k];
      best = std::min(best, v);
      return;
    }
    for (std::size_t i = from; i < planes.size(); ++i) {
      pick.push_back(static_cast<int>(i));
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

std::vector<Plane> planes_of(const MilpProblem& p) {
  const std::size_t n = p.vars.size();
  std::vector<Plane> out;
  for (const auto& r : p.rows) {
    Plane pl{std::vector<double>(n, 0.0), r.sense, r.rhs};
    for (const auto& [j, a] : r.terms) pl.a[static_cast<std::size_t>(j)] += a;
    out.push_back(pl);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(p.vars[j].lower)) {
      Plane pl{std::vector<double>(n, 0.0), Sense::ge, p.vars[j].lower};
      pl.a[j] = 1.0;
      out.push_back(pl);
    }
    if (std::isfinite(p.vars[j].upper)) {
      Plane pl{std::vector<double>(n, 0.0), Sense::le, p.vars[j].upper};
      pl.a[j] = 1.0;
      out.push_back(pl);
    }
  }
  return out;
}

}  // namespace

TEST(Lp, Trivial) {
  MilpProblem p;
  const int x = p.add_variable("x", VarKind::continuous, -kInf, kInf, 1.0);
  p.add_constraint({{x, 1.0}}, Sense::ge, 3.0);
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.values[0], 3.0, 1e-9);
  EXPECT_NEAR(s.objective, 3.0, 1e-9);

  MilpProblem q;
  const int a = q.add_variable("x", VarKind::continuous, 0, 1, -1.0);
  const int b = q.add_variable("y", VarKind::continuous, 0, 1, -1.0);
  q.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::le, 1.0);
  EXPECT_NEAR(solve_lp(q).objective, -1.0, 1e-9);
}

TEST(Lp, InfeasibleAndUnbounded) {
  MilpProblem p;
  const int x = p.add_variable("x", VarKind::continuous, 0, 1, 1.0);
  p.add_constraint({{x, 1.0}}, Sense::ge, 2.0);
  EXPECT_EQ(solve_lp(p).status, SolveStatus::infeasible);
  MilpProblem q;
  const int y = q.add_variable("y", VarKind::continuous, 0, kInf, -1.0);
  q.add_constraint({{y, 1.0}}, Sense::ge, 1.0);
  EXPECT_EQ(solve_lp(q).status, SolveStatus::unbounded);
  EXPECT_EQ(solve(q).status, SolveStatus::unbounded);
}

// max c'x, Ax <= b, x >= 0 with positive data: bounded and feasible.
TEST(Lp, RandomTenByTenAgainstVertexEnumeration) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    MilpProblem p;
    for (int j = 0; j < 10; ++j) p.add_variable("", VarKind::continuous, 0, kInf, -u(rng));
    for (int i = 0; i < 10; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < 10; ++j)
        if (rng() % 4) row.emplace_back(j, u(rng));
      row.emplace_back(i, u(rng));  // keep every variable bounded
      p.add_constraint(row, Sense::le, 5.0 * u(rng));
    }
    const auto s = solve_lp(p);
    ASSERT_EQ(s.status, SolveStatus::optimal);
    EXPECT_NEAR(s.objective, vertex_oracle(p.objective, planes_of(p)), 1e-6) << trial;
    EXPECT_LT(max_violation(p, s.values), 1e-7);
  }
}

TEST(Lp, RandomMixedSensesAgainstVertexEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    MilpProblem p;
    const int n = 2 + static_cast<int>(rng() % 4);
    for (int j = 0; j < n; ++j) {
      const double lo = std::round(u(rng));
      p.add_variable("", VarKind::continuous, rng() % 5 ? lo : -kInf, lo + 1 + std::abs(u(rng)), u(rng));
      if (!std::isfinite(p.vars.back().lower)) p.vars.back().lower = -4.0;  // box kept for the oracle
    }
    const int m = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j)
        if (rng() % 3) row.emplace_back(j, std::round(u(rng) * 2) / 2);
      const int s = static_cast<int>(rng() % 3);
      p.add_constraint(row, s == 0 ? Sense::le : s == 1 ? Sense::ge : Sense::eq, u(rng));
    }
    const double want = vertex_oracle(p.objective, planes_of(p));
    const auto got = solve_lp(p);
    if (!std::isfinite(want)) {
      EXPECT_EQ(got.status, SolveStatus::infeasible) << trial;
      continue;
    }
    ++feasible;
    ASSERT_EQ(got.status, SolveStatus::optimal) << trial;
    EXPECT_NEAR(got.objective, want, 1e-6) << trial;
  }
  EXPECT_GT(feasible, 50);
}

TEST(Milp, IntegralRootNeedsNoBranching) {
  MilpProblem p;
  const int x = p.add_variable("x", VarKind::integer, 0, 10, -1.0);
  p.add_constraint({{x, 1.0}}, Sense::le, 4.0);
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_EQ(s.nodes, 1);
  EXPECT_DOUBLE_EQ(s.values[0], 4.0);
}

TEST(Milp, Knapsack) {
  MilpProblem p;
  const int a = p.add_variable("x1", VarKind::binary, 0, 1, -3.0);
  const int b = p.add_variable("x2", VarKind::binary, 0, 1, -2.0);
  p.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::le, 1.0);
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_DOUBLE_EQ(s.objective, -3.0);
  EXPECT_DOUBLE_EQ(s.values[0], 1.0);
  EXPECT_DOUBLE_EQ(s.values[1], 0.0);
}

// Up to 8 binaries plus two bounded continuous variables; the oracle
// enumerates all binary assignments and solves the residual LP by vertices.
TEST(Milp, RandomAgainstEnumeration) {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(-4, 4);
  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    MilpProblem p;
    const int nb = 2 + static_cast<int>(rng() % 7);
    const int nc = static_cast<int>(rng() % 3);
    for (int j = 0; j < nb; ++j) p.add_variable("b" + std::to_string(j), VarKind::binary, 0, 1, std::round(u(rng)));
    for (int j = 0; j < nc; ++j) p.add_variable("c" + std::to_string(j), VarKind::continuous, 0, 3, u(rng));
    const int m = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < nb + nc; ++j)
        if (rng() % 2) row.emplace_back(j, std::round(u(rng)));
      const int s = static_cast<int>(rng() % 4);
      p.add_constraint(row, s < 2 ? Sense::le : s == 2 ? Sense::ge : Sense::eq, std::round(u(rng)));
    }
    if (trial % 3 == 0 && nb >= 3) {
      p.choice_groups.push_back({0, 1, 2});
      p.add_constraint({{0, 1.0}, {1, 1.0}, {2, 1.0}}, Sense::eq, 1.0);
    }

    double best = kInf;
    for (int mask = 0; mask < (1 << nb); ++mask) {
      // residual problem over the continuous variables
      std::vector<Plane> planes;
      std::vector<double> c(static_cast<std::size_t>(nc));
      double fixed = 0.0;
      for (int j = 0; j < nb; ++j) fixed += p.objective[static_cast<std::size_t>(j)] * ((mask >> j) & 1);
      for (int j = 0; j < nc; ++j) c[static_cast<std::size_t>(j)] = p.objective[static_cast<std::size_t>(nb + j)];
      bool ok = true;
      for (const auto& r : p.rows) {
        Plane pl{std::vector<double>(static_cast<std::size_t>(nc), 0.0), r.sense, r.rhs};
        for (const auto& [j, a] : r.terms) {
          if (j < nb)
            pl.b -= a * ((mask >> j) & 1);
          else
            pl.a[static_cast<std::size_t>(j - nb)] += a;
        }
        const bool constant = std::all_of(pl.a.begin(), pl.a.end(), [](double v) { return v == 0.0; });
        if (constant) {
          ok = ok && (r.sense == Sense::ge || pl.b >= -1e-9) && (r.sense == Sense::le || pl.b <= 1e-9);
        } else {
          planes.push_back(pl);
        }
      }
      if (!ok) continue;
      double rest = 0.0;
      if (nc > 0) {
        for (int j = 0; j < nc; ++j) {
          Plane lo{std::vector<double>(static_cast<std::size_t>(nc), 0.0), Sense::ge, 0.0};
          lo.a[static_cast<std::size_t>(j)] = 1;
          Plane hi{std::vector<double>(static_cast<std::size_t>(nc), 0.0), Sense::le, 3.0};
          hi.a[static_cast<std::size_t>(j)] = 1;
          planes.push_back(lo);
          planes.push_back(hi);
        }
        rest = vertex_oracle(c, planes);
        if (!std::isfinite(rest)) continue;
      }
      best = std::min(best, fixed + rest);
    }
    const auto s = solve(p);
    if (!std::isfinite(best)) {
      EXPECT_EQ(s.status, SolveStatus::infeasible) << trial;
      continue;
    }
    ++checked;
    ASSERT_EQ(s.status, SolveStatus::optimal) << trial;
    EXPECT_NEAR(s.objective, best, 1e-6) << trial;
    EXPECT_LT(max_violation(p, s.values), 1e-6);
    for (int j = 0; j < nb; ++j) EXPECT_TRUE(s.values[static_cast<std::size_t>(j)] == 0.0 || s.values[static_cast<std::size_t>(j)] == 1.0);
  }
  EXPECT_GT(checked, 80);
}

TEST(Milp, DeterministicAndBounded) {
  MilpProblem p;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1, 9);
  std::vector<std::pair<int, double>> cap;
  for (int j = 0; j < 14; ++j) {
    p.add_variable("", VarKind::binary, 0, 1, -u(rng));
    cap.emplace_back(j, u(rng));
  }
  p.add_constraint(cap, Sense::le, 20.0);
  const auto a = solve(p);
  const auto b = solve(p);
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.nodes, b.nodes);
  EXPECT_LE(solve_lp(p).objective, a.objective + 1e-9);

  MilpOptions tight;
  tight.node_limit = 2;
  const auto c = solve(p, tight);
  if (c.status == SolveStatus::node_limit) {
    EXPECT_GE(c.gap, 0.0);
    EXPECT_LE(c.bound, a.objective + 1e-9);
  }
}

TEST(Milp, WriteLp) {
  MilpProblem p;
  const int x = p.add_variable("x", VarKind::binary, 0, 1, 2.0);
  const int w = p.add_variable("w", VarKind::integer, 0, 5, -1.0);
  p.add_constraint({{x, 1.0}, {w, -2.5}}, Sense::ge, -3.0, "mix");
  std::ostringstream os;
  write_lp(os, p);
  const std::string s = os.str();
  EXPECT_NE(s.find("Minimize"), std::string::npos);
  EXPECT_NE(s.find("mix: x - 2.5 w >= -3"), std::string::npos);
  EXPECT_NE(s.find("Binary\n x"), std::string::npos);
  EXPECT_NE(s.find("General\n w"), std::string::npos);
}

TEST(Milp, RejectsBadInput) {
  MilpProblem p;
  p.add_variable("x", VarKind::continuous, 2, 1, 0);
  EXPECT_THROW(solve(p), std::invalid_argument);
}
