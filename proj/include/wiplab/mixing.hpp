#pragma once

// Joint characteristic functions of block sums of a finite chain, written as
// products of perturbed operators, and the factorization defect across a gap.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wiplab/chains.hpp"
#include "wiplab/error.hpp"
#include "wiplab/spectral.hpp"
#include "wiplab/stats.hpp"

namespace wiplab {

/// Intervals J_m = [j_{m-1}, j_m), m = 1..M1+M2. The last M2 intervals are
/// shifted right by k_gap.
struct IntervalPattern {
  std::vector<long> j_bounds;
  int M1 = 1;
  int M2 = 1;
  long k_gap = 0;

  void validate() const {
    require(M1 >= 1 && M2 >= 1, "IntervalPattern: M1 and M2 must be positive");
    require(j_bounds.size() == static_cast<std::size_t>(M1 + M2 + 1),
            "IntervalPattern: need M1 + M2 + 1 bounds");
    require(j_bounds.front() >= 0, "IntervalPattern: j_0 must be >= 0");
    for (std::size_t i = 1; i < j_bounds.size(); ++i) {
      require(j_bounds[i] > j_bounds[i - 1], "IntervalPattern: bounds must be strictly increasing");
    }
    require(k_gap >= 0, "IntervalPattern: k_gap must be >= 0");
  }
  long card(int m) const { return j_bounds[static_cast<std::size_t>(m)] - j_bounds[static_cast<std::size_t>(m - 1)]; }
  long max_card() const {
    long c = 0;
    for (int m = 1; m <= M1 + M2; ++m) c = std::max(c, card(m));
    return c;
  }
};

/// Builds a pattern from j_0 and the interval cardinalities.
inline IntervalPattern make_pattern(long j0, const std::vector<long>& cards, int M1, long k_gap) {
  IntervalPattern p;
  p.M1 = M1;
  p.M2 = static_cast<int>(cards.size()) - M1;
  p.k_gap = k_gap;
  p.j_bounds.push_back(j0);
  for (long c : cards) p.j_bounds.push_back(p.j_bounds.back() + c);
  p.validate();
  return p;
}

/// All patterns with M1, M2 >= 1, M1 + M2 <= max_intervals and interval
/// cardinalities in [1, max_card], starting at j0, with k_gap = 0.
inline std::vector<IntervalPattern> enumerate_patterns(int max_intervals, int max_card, long j0 = 0) {
  std::vector<IntervalPattern> out;
  for (int total = 2; total <= max_intervals; ++total) {
    std::vector<long> cards(static_cast<std::size_t>(total), 1);
    while (true) {
      for (int M1 = 1; M1 < total; ++M1) out.push_back(make_pattern(j0, cards, M1, 0));
      std::size_t pos = 0;
      while (pos < cards.size() && cards[pos] == max_card) cards[pos++] = 1;
      if (pos == cards.size()) break;
      ++cards[pos];
    }
  }
  return out;
}

namespace detail {

inline Eigen::MatrixXcd matrix_power(Eigen::MatrixXcd base, long e) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(base.rows(), base.cols());
  for (; e > 0; e >>= 1) {
    if (e & 1) out = out * base;
    if (e > 1) base = base * base;
  }
  return out;
}

inline Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, long e) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(base.rows(), base.cols());
  for (; e > 0; e >>= 1) {
    if (e & 1) out = out * base;
    if (e > 1) base = base * base;
  }
  return out;
}

// delta_x P^{j0} P_{t_1}^{|J_1|} ... P_{t_M1}^{|J_M1|}
inline Eigen::RowVectorXcd past_row(const FiniteChain& chain, int x0, const IntervalPattern& p,
                                    const std::vector<double>& t1) {
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(chain.n_states());
  row[x0] = 1.0;
  row = row * matrix_power(Eigen::MatrixXd(chain.P()), p.j_bounds[0]).cast<std::complex<double>>();
  for (int m = 1; m <= p.M1; ++m) row = row * matrix_power(perturbed(chain, t1[static_cast<std::size_t>(m - 1)]), p.card(m));
  return row;
}

// P_{t_{M1+1}}^{|J_{M1+1}|} ... P_{t_{M1+M2}}^{|J_{M1+M2}|} e
inline Eigen::VectorXcd future_column(const FiniteChain& chain, const IntervalPattern& p,
                                      const std::vector<double>& t2) {
  Eigen::VectorXcd col = Eigen::VectorXcd::Ones(chain.n_states());
  for (int m = p.M1 + p.M2; m > p.M1; --m) {
    col = matrix_power(perturbed(chain, t2[static_cast<std::size_t>(m - p.M1 - 1)]), p.card(m)) * col;
  }
  return col;
}

// Cartesian product grid^dim, last coordinate fastest.
inline std::vector<std::vector<double>> product_grid(const std::vector<double>& grid, int dim) {
  std::vector<std::vector<double>> out{{}};
  for (int d = 0; d < dim; ++d) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double t : grid) {
        auto v = prefix;
        v.push_back(t);
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// E_{x0} exp(i sum_m t_m Y_{J_m}) with Y_{J_m} = sum_{l in J_m} f(X_{l+1}),
/// the last M2 intervals shifted by k_gap.
inline std::complex<double> cf_joint(const FiniteChain& chain, int x0, const IntervalPattern& pattern,
                                     const std::vector<double>& t1, const std::vector<double>& t2) {
  pattern.validate();
  require(t1.size() == static_cast<std::size_t>(pattern.M1) && t2.size() == static_cast<std::size_t>(pattern.M2),
          "cf_joint: t-vector sizes must match M1 and M2");
  require(x0 >= 0 && x0 < chain.n_states(), "cf_joint: x0 out of range");
  const Eigen::RowVectorXcd row = detail::past_row(chain, x0, pattern, t1);
  const Eigen::VectorXcd col = detail::future_column(chain, pattern, t2);
  const Eigen::MatrixXcd gap = detail::matrix_power(Eigen::MatrixXd(chain.P()), pattern.k_gap).cast<std::complex<double>>();
  return (row * gap * col)(0, 0);
}

struct DefectResult {
  double defect = 0.0;
  double bound = 0.0;
  bool holds = true;
};

/// C1 bound lambda0 exp(-lambda1 k_gap) (1 + max card)^{lambda2 (M1 + M2)}.
inline double c1_bound(const MixingConstants& mc, const IntervalPattern& p) {
  const double decay = mc.lambda1_infinite ? (p.k_gap == 0 ? 1.0 : 0.0) : std::exp(-mc.lambda1 * static_cast<double>(p.k_gap));
  return mc.lambda0_x * decay * std::pow(1.0 + static_cast<double>(p.max_card()), mc.lambda2 * (p.M1 + p.M2));
}

/// Defects for every k_gap in `gaps`, sharing the past rows and future
/// columns across gaps. Each entry is the grid max of |phi - phi_1 phi_2|.
inline std::vector<double> c1_defects(const FiniteChain& chain, int x0, IntervalPattern pattern,
                                      const std::vector<long>& gaps, const std::vector<double>& t_grid) {
  pattern.validate();
  require(!t_grid.empty(), "c1_defect: empty t grid");
  const auto n = chain.n_states();
  const auto past = detail::product_grid(t_grid, pattern.M1);
  const auto future = detail::product_grid(t_grid, pattern.M2);

  Eigen::MatrixXcd R(static_cast<Eigen::Index>(past.size()), n);
  for (std::size_t a = 0; a < past.size(); ++a) R.row(static_cast<Eigen::Index>(a)) = detail::past_row(chain, x0, pattern, past[a]);
  Eigen::MatrixXcd C(n, static_cast<Eigen::Index>(future.size()));
  for (std::size_t b = 0; b < future.size(); ++b) C.col(static_cast<Eigen::Index>(b)) = detail::future_column(chain, pattern, future[b]);
  const Eigen::VectorXcd phi1 = R * Eigen::VectorXcd::Ones(n);

  std::vector<double> out;
  out.reserve(gaps.size());
  for (long g : gaps) {
    require(g >= 0, "c1_defect: k_gap must be >= 0");
    const Eigen::MatrixXcd Pg = detail::matrix_power(Eigen::MatrixXd(chain.P()), g).cast<std::complex<double>>();
    // phi_2(s) = (P^{k_gap + j_M1} C)(x0): the future block at its own position
    Eigen::RowVectorXcd start = Eigen::RowVectorXcd::Zero(n);
    start[x0] = 1.0;
    const Eigen::MatrixXcd lead =
        detail::matrix_power(Eigen::MatrixXd(chain.P()), g + pattern.j_bounds[static_cast<std::size_t>(pattern.M1)])
            .cast<std::complex<double>>();
    const Eigen::RowVectorXcd phi2 = start * lead * C;
    const Eigen::MatrixXcd joint = R * Pg * C;
    const Eigen::MatrixXcd product = phi1 * phi2;
    out.push_back((joint - product).cwiseAbs().maxCoeff());
  }
  return out;
}

inline DefectResult c1_defect(const FiniteChain& chain, int x0, const IntervalPattern& pattern,
                              const std::vector<double>& t_grid, const MixingConstants& mc) {
  DefectResult r;
  r.defect = c1_defects(chain, x0, pattern, {pattern.k_gap}, t_grid).front();
  r.bound = c1_bound(mc, pattern);
  r.holds = r.defect <= r.bound;
  return r;
}

/// Overload computing the constants from the chain with default settings.
inline DefectResult c1_defect(const FiniteChain& chain, int x0, const IntervalPattern& pattern,
                              const std::vector<double>& t_grid) {
  return c1_defect(chain, x0, pattern, t_grid, mixing_constants(spectral_decompose(chain)));
}

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<long> gaps;       // gaps used in the fit
  std::vector<double> defects;  // matching defects
};

inline constexpr double kDefectFloor = 1e-14;

/// Least-squares fit of ln(defect) against k_gap over the gaps whose defect is
/// above the numerical floor.
inline DecayFit decay_fit(const FiniteChain& chain, int x0, const IntervalPattern& base, const std::vector<long>& gaps,
                          const std::vector<double>& t_grid) {
  const auto defects = c1_defects(chain, x0, base, gaps, t_grid);
  DecayFit fit;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (defects[i] > kDefectFloor) {
      fit.gaps.push_back(gaps[i]);
      fit.defects.push_back(defects[i]);
      x.push_back(static_cast<double>(gaps[i]));
      y.push_back(std::log(defects[i]));
    }
  }
  if (x.size() < 5) {
    throw NumericalError("decay_fit: defect below measurable range (fewer than 5 gaps above 1e-14)");
  }
  const auto lf = stats::least_squares(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r2 = lf.r2;
  return fit;
}

}  // namespace wiplab
