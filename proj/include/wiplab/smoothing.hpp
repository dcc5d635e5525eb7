#pragma once

// Smoothing variable with compactly supported characteristic function,
// generalized inverses of tabulated CDFs, and the smoothing-lemma right-hand
// side for Gaussian mixtures.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "wiplab/error.hpp"
#include "wiplab/rng.hpp"
#include "wiplab/stats.hpp"

namespace wiplab {

/// inf{x : F(x) > y} over a table of (x, F(x)) pairs sorted by x.
inline double generalized_inverse(std::span<const std::pair<double, double>> table, double y) {
  require(!table.empty(), "generalized_inverse: empty table");
  require(y >= 0.0 && y < 1.0, "generalized_inverse: y must lie in [0, 1)");
  for (std::size_t i = 1; i < table.size(); ++i) {
    require(table[i].first >= table[i - 1].first && table[i].second >= table[i - 1].second,
            "generalized_inverse: table must be nondecreasing");
  }
  require(std::abs(table.back().second - 1.0) <= 1e-12, "generalized_inverse: table must end at 1");
  const auto it = std::upper_bound(table.begin(), table.end(), y,
                                   [](double v, const std::pair<double, double>& e) { return v < e.second; });
  if (it == table.end()) throw PreconditionError("generalized_inverse: y is not below the largest CDF value");
  return it->first;
}

/// Symmetric law whose characteristic function is the normalized
/// autocorrelation of the bump b(s) = exp(-1 / (1 - (2s/eps0)^2)) on
/// |s| < eps0/2, hence C-infinity with support [-eps0, eps0]. Its density is
/// |b^(x)|^2 / (2 pi int b^2), nonnegative by construction, and is tabulated
/// on [0, x_max] for inverse-CDF sampling of |V|.
class SmoothingSampler {
 public:
  static constexpr int kMinGrid = 1 << 10;

  explicit SmoothingSampler(double epsilon0 = 1.0, int grid_size = 1 << 12, double x_max_scale = 800.0,
                            double tolerance = 1e-6)
      : eps0_(epsilon0), x_max_(x_max_scale / epsilon0) {
    require(epsilon0 > 0.0 && epsilon0 <= 1.0, "SmoothingSampler: epsilon0 must lie in (0, 1]");
    require(grid_size >= kMinGrid, "SmoothingSampler: grid_size must be >= 2^10");
    const double half = eps0_ / 2.0;
    const auto& nodes = boost::math::quadrature::gauss<double, 60>::abscissa();
    const auto& wts = boost::math::quadrature::gauss<double, 60>::weights();
    // composite Gauss-Legendre on [0, half]; the bump is flat near the ends
    const int panels = 64;
    for (int p = 0; p < panels; ++p) {
      const double a = half * p / panels;
      const double b = half * (p + 1) / panels;
      const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (int sgn : {-1, 1}) {
          if (nodes[i] == 0.0 && sgn < 0) continue;
          const double s = mid + sgn * rad * nodes[i];
          s_.push_back(s);
          w_.push_back(rad * wts[i] * bump(s));
        }
      }
    }
    double int_b2 = 0.0;  // int_{-half}^{half} b^2
    for (std::size_t i = 0; i < s_.size(); ++i) int_b2 += 2.0 * w_[i] * bump(s_[i]);
    norm_ = 1.0 / (2.0 * std::numbers::pi * int_b2);

    x_.resize(static_cast<std::size_t>(grid_size));
    density_.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
      x_[i] = x_max_ * static_cast<double>(i) / static_cast<double>(grid_size - 1);
      density_[i] = density(x_[i]);
      if (density_[i] < -1e-9) throw NumericalError("SmoothingSampler: grid too coarse (negative density)");
    }
    // |V| has density 2 p(x) on [0, x_max]
    cdf_.assign(x_.size(), 0.0);
    for (std::size_t i = 1; i < x_.size(); ++i) {
      cdf_[i] = cdf_[i - 1] + (x_[i] - x_[i - 1]) * (density_[i] + density_[i - 1]);
    }
    mass_defect_ = std::abs(cdf_.back() - 1.0);
    if (mass_defect_ > tolerance) {
      throw NumericalError("SmoothingSampler: grid too coarse (tabulated mass deviates from 1 by " +
                           std::to_string(mass_defect_) + ")");
    }
    for (double& c : cdf_) c /= cdf_.back();
  }

  double epsilon0() const { return eps0_; }
  double x_max() const { return x_max_; }
  double mass_defect() const { return mass_defect_; }
  std::size_t grid_size() const { return x_.size(); }

  /// Density of V at x.
  double density(double x) const {
    const double bh = bump_transform(x);
    return norm_ * bh * bh;
  }

  /// Exact characteristic function (b * b)(t) / (b * b)(0).
  double cf(double t) const {
    t = std::abs(t);
    if (t >= eps0_) return 0.0;
    const double half = eps0_ / 2.0;
    auto overlap = [&](double shift) {
      // int b(s) b(s - shift) ds over s in [shift - half, half]
      const double lo = shift - half, hi = half;
      const auto& nodes = boost::math::quadrature::gauss<double, 60>::abscissa();
      const auto& wts = boost::math::quadrature::gauss<double, 60>::weights();
      const int panels = 64;
      double acc = 0.0;
      for (int p = 0; p < panels; ++p) {
        const double a = lo + (hi - lo) * p / panels, b = lo + (hi - lo) * (p + 1) / panels;
        const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          for (int sgn : {-1, 1}) {
            if (nodes[i] == 0.0 && sgn < 0) continue;
            const double s = mid + sgn * rad * nodes[i];
            acc += rad * wts[i] * bump(s) * bump(s - shift);
          }
        }
      }
      return acc;
    };
    return overlap(t) / overlap(0.0);
  }

  /// E|V|^r of the tabulated law.
  double tabulated_moment(double r) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < x_.size(); ++i) {
      const double a = std::pow(x_[i - 1], r) * density_[i - 1];
      const double b = std::pow(x_[i], r) * density_[i];
      acc += (x_[i] - x_[i - 1]) * (a + b);
    }
    return acc;
  }

  template <class Engine>
  double operator()(Engine& eng) const {
    const std::uint64_t bits = eng();
    const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin(), 1,
                                                                        static_cast<std::ptrdiff_t>(cdf_.size() - 1)));
    const double c0 = cdf_[i - 1], c1 = cdf_[i];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    const double mag = x_[i - 1] + frac * (x_[i] - x_[i - 1]);
    return (eng() & 1u) ? mag : -mag;
  }

  std::vector<double> sample(std::size_t count, std::uint64_t seed, std::uint64_t stream = 0) const {
    Philox4x32 eng(seed, stream);
    std::vector<double> out(count);
    for (auto& v : out) v = (*this)(eng);
    return out;
  }

 private:
  double bump(double s) const {
    const double r = 2.0 * s / eps0_;
    const double q = 1.0 - r * r;
    return q <= 0.0 ? 0.0 : std::exp(-1.0 / q);
  }
  double bump_transform(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i) acc += w_[i] * std::cos(s_[i] * x);
    return 2.0 * acc;
  }

  double eps0_;
  double x_max_;
  double norm_ = 0.0;
  double mass_defect_ = 0.0;
  std::vector<double> s_, w_;  // quadrature nodes on [0, eps0/2], weights times b
  std::vector<double> x_, density_, cdf_;
};

/// Empirical characteristic function modulus |mean exp(i t v)|.
inline double empirical_cf_modulus(std::span<const double> sample, double t) {
  double re = 0.0, im = 0.0;
  for (double v : sample) {
    re += std::cos(t * v);
    im += std::sin(t * v);
  }
  return std::hypot(re, im) / static_cast<double>(sample.size());
}

/// Mixture of Gaussians with diagonal covariances on R^d.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> sds;

  std::size_t dim() const { return means.front().size(); }
  void validate() const {
    require(!weights.empty() && weights.size() == means.size() && weights.size() == sds.size(),
            "GaussianMixture: inconsistent component counts");
    double total = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
      require(weights[c] >= 0.0, "GaussianMixture: negative weight");
      require(means[c].size() == dim() && sds[c].size() == dim(), "GaussianMixture: mixed dimensions");
      for (double s : sds[c]) require(s > 0.0, "GaussianMixture: standard deviations must be > 0");
      total += weights[c];
    }
    require(std::abs(total - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");
  }

  std::complex<double> cf(std::span<const double> t) const {
    std::complex<double> acc = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
      double phase = 0.0, quad = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        phase += t[k] * means[c][k];
        quad += sds[c][k] * sds[c][k] * t[k] * t[k];
      }
      acc += weights[c] * std::polar(std::exp(-0.5 * quad), phase);
    }
    return acc;
  }

  double density(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
      double logp = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - means[c][k]) / sds[c][k];
        logp += -0.5 * z * z - std::log(sds[c][k] * std::sqrt(2.0 * std::numbers::pi));
      }
      acc += weights[c] * std::exp(logp);
    }
    return acc;
  }

  /// P(||X||_inf > T).
  double tail_sup(double T) const {
    double inside = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
      double p = 1.0;
      for (std::size_t k = 0; k < dim(); ++k) {
        p *= stats::normal_cdf((T - means[c][k]) / sds[c][k]) - stats::normal_cdf((-T - means[c][k]) / sds[c][k]);
      }
      inside += weights[c] * p;
    }
    return std::max(0.0, 1.0 - inside);
  }
};

struct SmoothingRhs {
  double value = 0.0;
  double cf_l2 = 0.0;            // (int |p^ - q^|^2)^{1/2}
  double tail = 0.0;             // P(||x|| > T)
  double truncation_error = 0.0; // bound on the effect of the finite t-box on value
};

/// (T/pi)^{d/2} ||p^ - q^||_2 + P(||x||_inf > T) by tensor trapezoid quadrature
/// on a t-box, with an analytic bound for the mass outside the box.
inline SmoothingRhs smoothing_lemma_rhs(const GaussianMixture& P, const GaussianMixture& Q, double T) {
  P.validate();
  Q.validate();
  require(P.dim() == Q.dim(), "smoothing_lemma_rhs: dimension mismatch");
  require(T > 0.0, "smoothing_lemma_rhs: T must be > 0");
  const auto d = static_cast<int>(P.dim());
  require(d >= 1 && d <= 3, "smoothing_lemma_rhs: dimension must be 1, 2 or 3");

  double s_min = std::numeric_limits<double>::infinity(), m_max = 0.0;
  for (const auto* g : {&P, &Q}) {
    for (std::size_t c = 0; c < g->weights.size(); ++c) {
      for (int k = 0; k < d; ++k) {
        s_min = std::min(s_min, g->sds[c][static_cast<std::size_t>(k)]);
        m_max = std::max(m_max, std::abs(g->means[c][static_cast<std::size_t>(k)]));
      }
    }
  }
  // |p^ - q^|^2 <= 4 exp(-s_min^2 |t|^2); outside the box this integrates to
  // 4 (sqrt(pi)/s_min)^d (1 - erf(s_min L)^d).
  const double L = 9.0 / s_min;
  const double outside = 4.0 * std::pow(std::sqrt(std::numbers::pi) / s_min, d) * (1.0 - std::pow(std::erf(s_min * L), d));
  const double h = std::min(0.25 * s_min, std::numbers::pi / (8.0 * (m_max + 1.0)));
  const int per_dim_cap = d == 1 ? 1 << 16 : (d == 2 ? 600 : 120);
  const int per_dim = std::min(per_dim_cap, static_cast<int>(std::ceil(2.0 * L / h)) + 1);
  const double step = 2.0 * L / (per_dim - 1);

  double integral = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> t(static_cast<std::size_t>(d));
  const long total = static_cast<long>(std::pow(per_dim, d));
  for (long flat = 0; flat < total; ++flat) {
    long r = flat;
    double weight = 1.0;
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(r % per_dim);
      r /= per_dim;
      t[static_cast<std::size_t>(k)] = -L + step * i;
      weight *= (i == 0 || i == per_dim - 1) ? 0.5 * step : step;
    }
    integral += weight * std::norm(P.cf(t) - Q.cf(t));
  }

  SmoothingRhs out;
  const double scale = std::pow(T / std::numbers::pi, 0.5 * d);
  out.cf_l2 = std::sqrt(integral);
  out.tail = P.tail_sup(T);
  out.value = scale * out.cf_l2 + out.tail;
  out.truncation_error = scale * (std::sqrt(integral + outside) - out.cf_l2);
  if (out.truncation_error > 0.01 * out.value) {
    throw NumericalError("smoothing_lemma_rhs: quadrature truncation error exceeds 1% of the value");
  }
  return out;
}

}  // namespace wiplab
