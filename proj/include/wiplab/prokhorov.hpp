#pragma once

// Exact Prokhorov and total-variation distances between small finitely
// supported laws on R^d (d <= 3) under the sup metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "wiplab/error.hpp"

namespace wiplab {

using Point = std::vector<double>;

inline double sup_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

class FiniteDist {
 public:
  FiniteDist(std::vector<Point> support, std::vector<double> probs)
      : support_(std::move(support)), probs_(std::move(probs)) {
    require(!support_.empty(), "FiniteDist: empty support");
    require(support_.size() == probs_.size(), "FiniteDist: support and probs differ in length");
    const auto d = support_.front().size();
    require(d >= 1 && d <= 3, "FiniteDist: dimension must be 1, 2 or 3");
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      require(support_[i].size() == d, "FiniteDist: points of mixed dimension");
      require(probs_[i] >= 0.0, "FiniteDist: negative weight");
      total += probs_[i];
      for (std::size_t j = 0; j < i; ++j) {
        require(support_[i] != support_[j], "FiniteDist: support points must be distinct");
      }
    }
    require(std::abs(total - 1.0) <= 1e-12, "FiniteDist: weights must sum to 1");
  }

  static FiniteDist point_mass(Point x) { return FiniteDist({std::move(x)}, {1.0}); }

  std::size_t size() const { return support_.size(); }
  std::size_t dim() const { return support_.front().size(); }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<Point> support_;
  std::vector<double> probs_;
};

/// sup_B |P(B) - Q(B)|.
inline double total_variation(const FiniteDist& P, const FiniteDist& Q) {
  require(P.dim() == Q.dim(), "total_variation: dimension mismatch");
  double sum = 0.0;
  std::vector<bool> matched(Q.size(), false);
  for (std::size_t i = 0; i < P.size(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < Q.size(); ++j) {
      if (P.support()[i] == Q.support()[j]) {
        q = Q.probs()[j];
        matched[j] = true;
      }
    }
    sum += std::abs(P.probs()[i] - q);
  }
  for (std::size_t j = 0; j < Q.size(); ++j) {
    if (!matched[j]) sum += Q.probs()[j];
  }
  return 0.5 * sum;
}

inline constexpr std::size_t kProkhorovMaxSupport = 12;

/// inf{eps : P(B) <= Q(B^eps) + eps for all B}, B^eps the closed sup-metric
/// eps-neighbourhood.
///
/// B^eps restricted to supp Q only changes at the distances d between the two
/// supports, so on each interval [d_i, d_{i+1}) the condition reads
/// eps >= g_i = max_B (P(B) - Q(B^{d_i})), maximized over subsets of supp P.
inline double prokhorov_finite(const FiniteDist& P, const FiniteDist& Q) {
  require(P.dim() == Q.dim(), "prokhorov_finite: dimension mismatch");
  if (P.size() + Q.size() > kProkhorovMaxSupport) {
    throw PreconditionError("prokhorov_finite: combined support exceeds 12 points; use a sampling-based estimate");
  }
  const auto np = P.size();
  const auto nq = Q.size();
  std::vector<std::vector<double>> dist(np, std::vector<double>(nq));
  std::vector<double> levels{0.0};
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < nq; ++j) {
      dist[i][j] = sup_distance(P.support()[i], Q.support()[j]);
      levels.push_back(dist[i][j]);
    }
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  const std::uint32_t subsets = 1u << np;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double d = levels[li];
    const double next = li + 1 < levels.size() ? levels[li + 1] : std::numeric_limits<double>::infinity();
    // reach[i]: bitmask of Q atoms within d of P atom i
    std::vector<std::uint32_t> reach(np, 0);
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t j = 0; j < nq; ++j) {
        if (dist[i][j] <= d) reach[i] |= 1u << j;
      }
    }
    double g = 0.0;
    for (std::uint32_t B = 1; B < subsets; ++B) {
      double pb = 0.0;
      std::uint32_t nb = 0;
      for (std::size_t i = 0; i < np; ++i) {
        if (B & (1u << i)) {
          pb += P.probs()[i];
          nb |= reach[i];
        }
      }
      double qb = 0.0;
      for (std::size_t j = 0; j < nq; ++j) {
        if (nb & (1u << j)) qb += Q.probs()[j];
      }
      g = std::max(g, pb - qb);
    }
    const double candidate = std::max(d, g);
    if (candidate < next) return candidate;
  }
  return levels.back();
}

}  // namespace wiplab
