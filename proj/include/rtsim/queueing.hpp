#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtsim {

/// Left-hand side of the M/M/m reliability condition for `m` servers and at
/// most `b` waiting customers:
///   sum_{k=0}^{m-1} (m-k) m! m^b / k! * rho^-(m+b+1-k)
/// evaluated in log space so large m does not overflow.
inline double reliability_lhs_log(double rho, int m, int b) {
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(m));
  const double lm = std::log(static_cast<double>(m));
  const double lfact = std::lgamma(m + 1.0);
  for (int k = 0; k < m; ++k) {
    const double t = std::log(static_cast<double>(m - k)) + lfact + b * lm - std::lgamma(k + 1.0) -
                     (m + b + 1 - k) * std::log(rho);
    terms.push_back(t);
    hi = std::max(hi, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

inline double reliability_lhs(double rho, int m, int b) { return std::exp(reliability_lhs_log(rho, m, b)); }

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Largest intensity rho for which m servers keep at most b customers
/// queued with probability eta: the root of lhs(rho) = 1/(1-eta), found by
/// bisection on (1e-9, m).
inline double solve_rho(double eta, int m, int b) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (b < 0) throw std::invalid_argument("b must be >= 0");
  const double target = -std::log1p(-eta);
  double lo = 1e-9;
  double hi = static_cast<double>(m);
  auto f = [&](double r) { return reliability_lhs_log(r, m, b) - target; };
  if (!(f(lo) > 0.0) || !(f(hi) < 0.0))
    throw NumericalFailure("solve_rho: interval does not bracket the root (eta=" + std::to_string(eta) +
                           ", m=" + std::to_string(m) + ", b=" + std::to_string(b) + ")");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// rho values for m = 1..m_max at fixed (eta, b).
class RhoTable {
 public:
  RhoTable() = default;
  RhoTable(double eta, int b, int m_max) : eta_(eta), b_(b) {
    if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
    rho_.reserve(static_cast<std::size_t>(m_max));
    for (int m = 1; m <= m_max; ++m) rho_.push_back(solve_rho(eta, m, b));
  }

  double eta() const { return eta_; }
  int b() const { return b_; }
  int max_servers() const { return static_cast<int>(rho_.size()); }
  /// rho for m servers, m >= 1.
  double operator()(int m) const { return rho_.at(static_cast<std::size_t>(m - 1)); }

 private:
  double eta_ = 0.95;
  int b_ = 0;
  std::vector<double> rho_;
};

/// beta * T^2, the look-ahead delay term of the dispatch cost.
inline double lookahead_term(double tour_minutes, double beta) {
  if (tour_minutes < 0.0 || beta < 0.0) throw std::invalid_argument("lookahead_term needs T >= 0 and beta >= 0");
  return beta * tour_minutes * tour_minutes;
}

/// Exact M/M/1 coefficient mu*lambda / (2(mu - lambda)); requires mu > lambda.
inline double mm1_lookahead_coefficient(double mu, double lambda) {
  if (!(mu > lambda) || lambda < 0.0) throw std::invalid_argument("M/M/1 coefficient needs mu > lambda >= 0");
  return mu * lambda / (2.0 * (mu - lambda));
}

}  // namespace rtsim
