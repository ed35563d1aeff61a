#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtsim {

enum class VarKind { continuous, binary, integer };
enum class Sense { le, eq, ge };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Constraint {
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
  std::string name;
};

/// min c'x subject to linear rows and variable bounds. `choice_groups` lists
/// sets of binaries that sum to one; branch-and-bound splits such a set in
/// two instead of branching on a single member.
struct MilpProblem {
  std::vector<Variable> vars;
  std::vector<double> objective;
  std::vector<Constraint> rows;
  std::vector<std::vector<int>> choice_groups;

  int add_variable(std::string name, VarKind kind, double lower, double upper, double cost = 0.0) {
    if (kind == VarKind::binary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    vars.push_back({std::move(name), kind, lower, upper});
    objective.push_back(cost);
    return static_cast<int>(vars.size()) - 1;
  }

  int add_constraint(std::vector<std::pair<int, double>> terms, Sense sense, double rhs, std::string name = {}) {
    rows.push_back({std::move(terms), sense, rhs, std::move(name)});
    return static_cast<int>(rows.size()) - 1;
  }

  std::size_t size() const { return vars.size(); }

  void check() const {
    if (objective.size() != vars.size()) throw std::invalid_argument("objective length does not match variables");
    for (std::size_t j = 0; j < vars.size(); ++j) {
      const auto& v = vars[j];
      if (v.lower > v.upper) throw std::invalid_argument("variable " + v.name + " has lower > upper");
      if (v.kind == VarKind::binary && (v.lower < 0.0 || v.upper > 1.0))
        throw std::invalid_argument("binary variable " + v.name + " has bounds outside [0,1]");
    }
    for (const auto& r : rows)
      for (const auto& [j, a] : r.terms)
        if (j < 0 || j >= static_cast<int>(vars.size()) || !std::isfinite(a))
          throw std::invalid_argument("constraint " + r.name + " has a bad term");
    for (const auto& g : choice_groups)
      for (int j : g)
        if (j < 0 || j >= static_cast<int>(vars.size()) || vars[static_cast<std::size_t>(j)].kind != VarKind::binary)
          throw std::invalid_argument("choice groups may only hold binary variables");
  }
};

enum class SolveStatus { optimal, infeasible, unbounded, node_limit, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

struct MilpSolution {
  SolveStatus status = SolveStatus::infeasible;
  double objective = kInf;
  std::vector<double> values;
  long nodes = 0;
  long pivots = 0;
  double bound = -kInf;  // best proven lower bound
  double gap = 0.0;      // relative, only meaningful on node_limit
  std::string diagnostics;

  bool has_solution() const { return !values.empty(); }
};

struct MilpOptions {
  long node_limit = 100000;
  double integer_tol = 1e-6;
  double relative_gap = 0.0;
};

/// Largest violation of any bound or row by `x`.
inline double max_violation(const MilpProblem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.vars.size(); ++j) {
    worst = std::max(worst, p.vars[j].lower - x[j]);
    worst = std::max(worst, x[j] - p.vars[j].upper);
  }
  for (const auto& r : p.rows) {
    double lhs = 0.0;
    for (const auto& [j, a] : r.terms) lhs += a * x[static_cast<std::size_t>(j)];
    if (r.sense != Sense::ge) worst = std::max(worst, lhs - r.rhs);
    if (r.sense != Sense::le) worst = std::max(worst, r.rhs - lhs);
  }
  return worst;
}

inline double evaluate_objective(const MilpProblem& p, const std::vector<double>& x) {
  double z = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) z += p.objective[j] * x[j];
  return z;
}

namespace detail {

/// Dense bounded-variable primal simplex on
///   min c'x, A x = b, 0 <= x <= u
/// with an identity starting basis supplied by the caller (slacks or
/// artificials). Phase one minimizes the artificial sum.
class BoundedSimplex {
 public:
  enum class Result { optimal, infeasible, unbounded, stalled };

  BoundedSimplex(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_(rows * cols, 0.0), b_(rows, 0.0) {
    upper_.assign(cols, kInf);
    cost_.assign(cols, 0.0);
    artificial_.assign(cols, false);
  }

  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  std::vector<double>& rhs() { return b_; }
  std::vector<double>& upper() { return upper_; }
  std::vector<double>& cost() { return cost_; }
  std::vector<bool>& artificial() { return artificial_; }
  std::vector<std::size_t>& basis() { return basis_; }

  Result run(long& pivots) {
    at_upper_.assign(n_, false);
    value_ = b_;
    // phase one
    std::vector<double> c1(n_, 0.0);
    bool any_art = false;
    for (std::size_t j = 0; j < n_; ++j)
      if (artificial_[j]) {
        c1[j] = 1.0;
        any_art = true;
      }
    if (any_art) {
      price(c1);
      const Result r = iterate(pivots, true);
      if (r == Result::stalled) return r;
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (artificial_[basis_[i]]) infeas += value_[i];
      if (infeas > 1e-7 * (1.0 + max_abs_rhs())) return Result::infeasible;
      for (std::size_t j = 0; j < n_; ++j)
        if (artificial_[j]) upper_[j] = 0.0;
    }
    price(cost_);
    return iterate(pivots, false);
  }

  std::vector<double> solution() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      if (at_upper_[j]) x[j] = upper_[j];
    for (std::size_t i = 0; i < m_; ++i) x[basis_[i]] = value_[i];
    return x;
  }

 private:
  double max_abs_rhs() const {
    double v = 0.0;
    for (double x : b_) v = std::max(v, std::abs(x));
    return v;
  }

  // reduced costs d = c - c_B B^-1 A from the current tableau
  void price(const std::vector<double>& c) {
    d_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &a_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) d_[j] -= cb * row[j];
    }
  }

  Result iterate(long& pivots, bool phase_one) {
    constexpr double dtol = 1e-9;
    constexpr double ptol = 1e-9;
    const long limit = 50L * static_cast<long>(m_ + n_) + 1000;
    std::vector<bool> in_basis(n_, false);
    for (std::size_t i = 0; i < m_; ++i) in_basis[basis_[i]] = true;
    int degenerate_run = 0;
    bool bland = false;
    std::vector<std::size_t> nz;
    for (long iter = 0;; ++iter) {
      if (iter > limit) return Result::stalled;
      // entering column
      std::size_t enter = n_;
      double best = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis[j] || upper_[j] <= 0.0) continue;
        if (!phase_one && artificial_[j]) continue;
        const double dj = d_[j];
        const bool improving = at_upper_[j] ? dj > dtol : dj < -dtol;
        if (!improving) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
        }
      }
      if (enter == n_) return Result::optimal;
      const double dir = at_upper_[enter] ? -1.0 : 1.0;

      // ratio test
      double step = upper_[enter];
      std::size_t leave = m_;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = a_[i * n_ + enter] * dir;
        double lim;
        bool to_upper;
        if (alpha > ptol) {
          lim = value_[i] / alpha;
          to_upper = false;
        } else if (alpha < -ptol && upper_[basis_[i]] < kInf) {
          lim = (upper_[basis_[i]] - value_[i]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        lim = std::max(lim, 0.0);
        bool take = false;
        if (lim < step - 1e-12)
          take = true;
        else if (lim <= step + 1e-12)
          take = leave == m_ || (bland ? basis_[i] < basis_[leave] : std::abs(alpha) > std::abs(leave_pivot));
        if (take) {
          step = lim;
          leave = i;
          leave_to_upper = to_upper;
          leave_pivot = alpha;
        }
      }
      if (step == kInf) return Result::unbounded;
      ++pivots;
      if (step < 1e-12) {
        if (++degenerate_run > 30) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      // move basic values along the edge
      for (std::size_t i = 0; i < m_; ++i) value_[i] -= dir * step * a_[i * n_ + enter];

      if (leave == m_) {  // bound flip, no basis change
        at_upper_[enter] = !at_upper_[enter];
        continue;
      }

      const std::size_t out = basis_[leave];
      const double entering_value = at_upper_[enter] ? upper_[enter] - step : step;
      at_upper_[out] = leave_to_upper;
      in_basis[out] = false;
      in_basis[enter] = true;
      at_upper_[enter] = false;
      basis_[leave] = enter;
      value_[leave] = entering_value;

      double* prow = &a_[leave * n_];
      const double piv = prow[enter];
      nz.clear();
      for (std::size_t j = 0; j < n_; ++j) {
        if (prow[j] != 0.0) {
          prow[j] /= piv;
          nz.push_back(j);
        }
      }
      prow[enter] = 1.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == leave) continue;
        double* row = &a_[i * n_];
        const double f = row[enter];
        if (f == 0.0) continue;
        for (std::size_t j : nz) row[j] -= f * prow[j];
        row[enter] = 0.0;
      }
      const double fd = d_[enter];
      if (fd != 0.0) {
        for (std::size_t j : nz) d_[j] -= fd * prow[j];
        d_[enter] = 0.0;
      }
    }
  }

  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<bool> artificial_;
  std::vector<std::size_t> basis_;
  std::vector<bool> at_upper_;
  std::vector<double> value_;
  std::vector<double> d_;
};

}  // namespace detail

/// LP relaxation of `p` with the given bounds (integrality ignored).
inline MilpSolution solve_lp(const MilpProblem& p, const std::vector<double>& lower, const std::vector<double>& upper) {
  const std::size_t nv = p.vars.size();
  MilpSolution out;
  for (std::size_t j = 0; j < nv; ++j)
    if (lower[j] > upper[j] + 1e-12) {
      out.status = SolveStatus::infeasible;
      out.diagnostics = "empty bound interval on " + p.vars[j].name;
      return out;
    }

  // column mapping: x_j = shift_j + sign_j * x'
  struct Col {
    int var;
    double sign;
  };
  std::vector<Col> cols;
  std::vector<double> col_upper;
  std::vector<double> shift(nv, 0.0);
  std::vector<int> first_col(nv, -1);
  std::vector<int> second_col(nv, -1);
  for (std::size_t j = 0; j < nv; ++j) {
    const double lo = lower[j];
    const double hi = upper[j];
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-12) {
      shift[j] = lo;  // fixed: eliminated
      continue;
    }
    if (std::isfinite(lo)) {
      shift[j] = lo;
      first_col[j] = static_cast<int>(cols.size());
      cols.push_back({static_cast<int>(j), 1.0});
      col_upper.push_back(hi - lo);
    } else if (std::isfinite(hi)) {
      shift[j] = hi;
      first_col[j] = static_cast<int>(cols.size());
      cols.push_back({static_cast<int>(j), -1.0});
      col_upper.push_back(kInf);
    } else {
      first_col[j] = static_cast<int>(cols.size());
      cols.push_back({static_cast<int>(j), 1.0});
      col_upper.push_back(kInf);
      second_col[j] = static_cast<int>(cols.size());
      cols.push_back({static_cast<int>(j), -1.0});
      col_upper.push_back(kInf);
    }
  }

  // rows: drop those left with no free columns after checking them
  struct RowData {
    std::vector<std::pair<std::size_t, double>> coef;
    Sense sense;
    double rhs;
  };
  std::vector<RowData> rows;
  for (const auto& r : p.rows) {
    RowData rd{{}, r.sense, r.rhs};
    for (const auto& [j, a] : r.terms) {
      if (a == 0.0) continue;
      const auto uj = static_cast<std::size_t>(j);
      rd.rhs -= a * shift[uj];
      if (first_col[uj] >= 0) rd.coef.emplace_back(static_cast<std::size_t>(first_col[uj]), a * cols[static_cast<std::size_t>(first_col[uj])].sign);
      if (second_col[uj] >= 0) rd.coef.emplace_back(static_cast<std::size_t>(second_col[uj]), -a);
    }
    if (rd.coef.empty()) {
      const double tol = 1e-9 * (1.0 + std::abs(r.rhs));
      const bool ok = (rd.sense == Sense::le && rd.rhs >= -tol) || (rd.sense == Sense::ge && rd.rhs <= tol) ||
                      (rd.sense == Sense::eq && std::abs(rd.rhs) <= tol);
      if (!ok) {
        out.status = SolveStatus::infeasible;
        out.diagnostics = "row " + r.name + " violated by fixed variables";
        return out;
      }
      continue;
    }
    rows.push_back(std::move(rd));
  }

  const std::size_t m = rows.size();
  const std::size_t ns = cols.size();
  std::size_t nslack = 0;
  for (const auto& r : rows)
    if (r.sense != Sense::eq) ++nslack;
  // decide which rows start on their slack; the rest get an artificial
  std::vector<int> slack_basis(m, 0);
  std::size_t nart = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = rows[i];
    if ((r.sense == Sense::le && r.rhs >= 0.0) || (r.sense == Sense::ge && r.rhs <= 0.0))
      slack_basis[i] = 1;
    else
      ++nart;
  }
  const std::size_t n = ns + nslack + nart;
  detail::BoundedSimplex lp(m, n);
  for (std::size_t c = 0; c < ns; ++c) {
    lp.upper()[c] = col_upper[c];
    lp.cost()[c] = p.objective[static_cast<std::size_t>(cols[c].var)] * cols[c].sign;
  }
  lp.basis().assign(m, 0);
  std::size_t next_slack = ns;
  std::size_t next_art = ns + nslack;
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = rows[i];
    double flip = r.rhs < 0.0 ? -1.0 : 1.0;
    if (slack_basis[i]) flip = r.sense == Sense::le ? 1.0 : -1.0;
    for (const auto& [c, a] : r.coef) lp.at(i, c) += a * flip;
    lp.rhs()[i] = r.rhs * flip;
    if (r.sense != Sense::eq) {
      const double s = (r.sense == Sense::le ? 1.0 : -1.0) * flip;
      lp.at(i, next_slack) = s;
      if (slack_basis[i]) lp.basis()[i] = next_slack;
      ++next_slack;
    }
    if (!slack_basis[i]) {
      lp.at(i, next_art) = 1.0;
      lp.artificial()[next_art] = true;
      lp.basis()[i] = next_art;
      ++next_art;
    }
  }

  long pivots = 0;
  const auto res = lp.run(pivots);
  out.pivots = pivots;
  switch (res) {
    case detail::BoundedSimplex::Result::infeasible: out.status = SolveStatus::infeasible; return out;
    case detail::BoundedSimplex::Result::unbounded: out.status = SolveStatus::unbounded; return out;
    case detail::BoundedSimplex::Result::stalled:
      out.status = SolveStatus::numerical_failure;
      out.diagnostics = "simplex iteration limit reached after " + std::to_string(pivots) + " pivots";
      return out;
    case detail::BoundedSimplex::Result::optimal: break;
  }
  const auto xs = lp.solution();
  out.values.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    double v = shift[j];
    if (first_col[j] >= 0) v += cols[static_cast<std::size_t>(first_col[j])].sign * xs[static_cast<std::size_t>(first_col[j])];
    if (second_col[j] >= 0) v -= xs[static_cast<std::size_t>(second_col[j])];
    out.values[j] = std::clamp(v, lower[j], upper[j]);
  }
  double row_viol = 0.0;
  double scale = 1.0;
  for (const auto& r : p.rows) {
    double lhs = 0.0;
    for (const auto& [j, a] : r.terms) lhs += a * out.values[static_cast<std::size_t>(j)];
    if (r.sense != Sense::ge) row_viol = std::max(row_viol, lhs - r.rhs);
    if (r.sense != Sense::le) row_viol = std::max(row_viol, r.rhs - lhs);
    scale = std::max(scale, std::abs(r.rhs));
  }
  if (row_viol > 1e-6 * scale) {
    out.status = SolveStatus::numerical_failure;
    out.diagnostics = "LP solution violates rows by " + std::to_string(row_viol);
    out.values.clear();
    return out;
  }
  out.status = SolveStatus::optimal;
  out.objective = evaluate_objective(p, out.values);
  out.bound = out.objective;
  return out;
}

inline MilpSolution solve_lp(const MilpProblem& p) {
  p.check();
  std::vector<double> lo(p.vars.size()), hi(p.vars.size());
  for (std::size_t j = 0; j < p.vars.size(); ++j) {
    lo[j] = p.vars[j].lower;
    hi[j] = p.vars[j].upper;
  }
  return solve_lp(p, lo, hi);
}

/// Best-first branch-and-bound. Branches on a choice group when one of its
/// members is fractional, else on the most fractional integer variable
/// (ties to the lowest index). Deterministic for identical input.
inline MilpSolution solve(const MilpProblem& p, const MilpOptions& opt = {}) {
  p.check();
  const std::size_t nv = p.vars.size();
  std::vector<int> group_of(nv, -1);
  for (std::size_t g = 0; g < p.choice_groups.size(); ++g)
    for (int j : p.choice_groups[g]) group_of[static_cast<std::size_t>(j)] = static_cast<int>(g);

  struct Change {
    int var;
    double lower, upper;
  };
  struct Node {
    double bound;
    long id;
    std::vector<Change> changes;
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      return a.id > b.id;
    }
  };
  std::priority_queue<Node, std::vector<Node>, Worse> open;
  open.push({-kInf, 0, {}});
  long next_id = 1;

  MilpSolution best;
  best.status = SolveStatus::infeasible;
  long nodes = 0;
  long pivots = 0;
  std::vector<double> lo(nv), hi(nv);
  const auto is_int = [&](std::size_t j) { return p.vars[j].kind != VarKind::continuous; };

  auto prune_limit = [&]() {
    if (!best.has_solution()) return kInf;
    return best.objective - std::max(1e-9, opt.relative_gap * std::abs(best.objective)) ;
  };

  // Until a first incumbent exists, dive depth-first along the child that
  // keeps the LP point; siblings wait in the best-first queue.
  std::vector<Node> dive;
  while (!open.empty() || !dive.empty()) {
    if (nodes >= opt.node_limit) break;
    Node node;
    if (!dive.empty()) {
      node = std::move(dive.back());
      dive.pop_back();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound >= prune_limit()) continue;
    ++nodes;
    for (std::size_t j = 0; j < nv; ++j) {
      lo[j] = p.vars[j].lower;
      hi[j] = p.vars[j].upper;
      if (is_int(j)) {
        lo[j] = std::ceil(lo[j] - opt.integer_tol);
        hi[j] = std::floor(hi[j] + opt.integer_tol);
      }
    }
    for (const auto& c : node.changes) {
      lo[static_cast<std::size_t>(c.var)] = std::max(lo[static_cast<std::size_t>(c.var)], c.lower);
      hi[static_cast<std::size_t>(c.var)] = std::min(hi[static_cast<std::size_t>(c.var)], c.upper);
    }
    MilpSolution lp = solve_lp(p, lo, hi);
    pivots += lp.pivots;
    if (lp.status == SolveStatus::infeasible) continue;
    if (lp.status == SolveStatus::unbounded) {
      if (node.changes.empty()) {
        best.status = SolveStatus::unbounded;
        best.nodes = nodes;
        best.pivots = pivots;
        return best;
      }
      continue;
    }
    if (lp.status == SolveStatus::numerical_failure) {
      best.diagnostics = lp.diagnostics;
      if (node.changes.empty()) {
        best.status = SolveStatus::numerical_failure;
        best.nodes = nodes;
        best.pivots = pivots;
        return best;
      }
      continue;
    }
    if (lp.objective >= prune_limit()) continue;

    // choose a branching object
    int pick = -1;
    double pick_score = -1.0;
    for (std::size_t j = 0; j < nv; ++j) {
      if (!is_int(j)) continue;
      const double v = lp.values[j];
      const double f = v - std::floor(v);
      if (f <= opt.integer_tol || f >= 1.0 - opt.integer_tol) continue;
      const double score = 0.5 - std::abs(f - 0.5);
      if (score > pick_score + 1e-12) {
        pick_score = score;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) {
      for (std::size_t j = 0; j < nv; ++j)
        if (is_int(j)) lp.values[j] = std::round(lp.values[j]);
      const double obj = evaluate_objective(p, lp.values);
      if (!best.has_solution() || obj < best.objective - 1e-9) {
        best.values = lp.values;
        best.objective = obj;
      }
      for (auto& d : dive) open.push(std::move(d));
      dive.clear();
      continue;
    }

    const int g = group_of[static_cast<std::size_t>(pick)];
    std::vector<Node> kids;
    if (g >= 0) {
      const auto& members = p.choice_groups[static_cast<std::size_t>(g)];
      std::vector<std::size_t> positive;
      for (std::size_t k = 0; k < members.size(); ++k)
        if (lp.values[static_cast<std::size_t>(members[k])] > opt.integer_tol) positive.push_back(k);
      if (positive.size() >= 2) {
        double acc = 0.0;
        std::size_t cut = positive[positive.size() - 2];
        for (std::size_t q = 0; q + 1 < positive.size(); ++q) {
          acc += lp.values[static_cast<std::size_t>(members[positive[q]])];
          if (acc >= 0.5) {
            cut = positive[q];
            break;
          }
        }
        Node left{lp.objective, next_id++, node.changes};
        Node right{lp.objective, next_id++, node.changes};
        for (std::size_t k = 0; k < members.size(); ++k)
          (k <= cut ? right : left).changes.push_back({members[k], 0.0, 0.0});
        kids.push_back(std::move(left));
        kids.push_back(std::move(right));
      }
    }
    if (kids.empty()) {
      const double v = lp.values[static_cast<std::size_t>(pick)];
      Node down{lp.objective, next_id++, node.changes};
      down.changes.push_back({pick, -kInf, std::floor(v)});
      Node up{lp.objective, next_id++, node.changes};
      up.changes.push_back({pick, std::ceil(v), kInf});
      const bool up_first = v - std::floor(v) > 0.5;
      kids.push_back(std::move(up_first ? up : down));
      kids.push_back(std::move(up_first ? down : up));
    }
    // kids[0] is the preferred side
    if (!best.has_solution()) {
      for (std::size_t k = 1; k < kids.size(); ++k) open.push(std::move(kids[k]));
      dive.push_back(std::move(kids[0]));
    } else {
      for (auto& k : kids) open.push(std::move(k));
    }
  }

  best.nodes = nodes;
  best.pivots = pivots;
  for (auto& d : dive) open.push(std::move(d));
  double open_bound = kInf;
  if (!open.empty()) open_bound = open.top().bound;
  if (!open.empty() && nodes >= opt.node_limit) {
    best.status = SolveStatus::node_limit;
    best.bound = std::min(open_bound, best.objective);
    if (best.has_solution())
      best.gap = (best.objective - best.bound) / std::max(1.0, std::abs(best.objective));
    else
      best.gap = kInf;
    best.diagnostics = "node budget of " + std::to_string(opt.node_limit) + " exhausted";
    return best;
  }
  if (best.has_solution()) {
    best.status = SolveStatus::optimal;
    best.bound = best.objective;
  } else {
    best.status = SolveStatus::infeasible;
  }
  return best;
}

/// CPLEX LP text form, for cross-checking with external solvers.
inline void write_lp(std::ostream& os, const MilpProblem& p) {
  auto name = [&](int j) {
    const auto& n = p.vars[static_cast<std::size_t>(j)].name;
    return n.empty() ? "x" + std::to_string(j) : n;
  };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  auto terms = [&](const std::vector<std::pair<int, double>>& t) {
    std::string s;
    for (const auto& [j, a] : t) {
      if (a == 0.0) continue;
      s += a < 0 ? " - " : (s.empty() ? " " : " + ");
      if (std::abs(a) != 1.0) s += num(std::abs(a)) + " ";
      s += name(j);
    }
    return s.empty() ? std::string(" 0 ") + name(0) : s;
  };
  os << "\\ generated by rtsim\nMinimize\n obj:";
  std::vector<std::pair<int, double>> obj;
  for (std::size_t j = 0; j < p.objective.size(); ++j)
    if (p.objective[j] != 0.0) obj.emplace_back(static_cast<int>(j), p.objective[j]);
  os << terms(obj) << "\nSubject To\n";
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& r = p.rows[i];
    const std::string rn = r.name.empty() ? "c" + std::to_string(i) : r.name;
    os << ' ' << rn << ':' << terms(r.terms) << (r.sense == Sense::le ? " <= " : r.sense == Sense::ge ? " >= " : " = ")
       << num(r.rhs) << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < p.vars.size(); ++j) {
    const auto& v = p.vars[j];
    if (v.kind == VarKind::binary) continue;
    const std::string lo = std::isfinite(v.lower) ? num(v.lower) : "-inf";
    const std::string hi = std::isfinite(v.upper) ? num(v.upper) : "+inf";
    os << ' ' << lo << " <= " << name(static_cast<int>(j)) << " <= " << hi << '\n';
  }
  std::vector<int> bins, ints;
  for (std::size_t j = 0; j < p.vars.size(); ++j) {
    if (p.vars[j].kind == VarKind::binary) bins.push_back(static_cast<int>(j));
    if (p.vars[j].kind == VarKind::integer) ints.push_back(static_cast<int>(j));
  }
  if (!ints.empty()) {
    os << "General\n";
    for (int j : ints) os << ' ' << name(j) << '\n';
  }
  if (!bins.empty()) {
    os << "Binary\n";
    for (int j : bins) os << ' ' << name(j) << '\n';
  }
  os << "End\n";
}

}  // namespace rtsim
