#pragma once

// Spectral-gap decomposition P = Pi + Q of a finite transition operator and
// the mixing constants derived from it.
//
// The function space is C^n with the sup norm, its dual carries the l1 norm,
// so ||e|| = ||delta_x|| = ||nu|| = 1 and operator norms are max row sums.

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wiplab/chains.hpp"
#include "wiplab/error.hpp"
#include "wiplab/rng.hpp"

namespace wiplab {

struct SpectralData {
  Eigen::RowVectorXd nu;
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Q;
  double kappa = 0.0;  // 0 is the sentinel for Q == 0 (one-step mixing)
  double C_Q = 1.0;
  double C_P = 1.0;
  double norm_e = 1.0;
  double norm_nu = 1.0;
  double norm_delta_x = 1.0;
  double epsilon0 = 1.0;
  int m_max = 0;                // range over which C_Q and C_P are certified
  std::vector<double> t_grid;   // t values used for C_P
  bool kappa_from_fallback = false;
};

struct MixingConstants {
  double lambda0_x = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 1.0;
  double epsilon0 = 1.0;
  bool lambda1_infinite = false;  // set when kappa is the 0 sentinel
};

template <class Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Evenly spaced grid of `points` values on [-epsilon0, epsilon0].
inline std::vector<double> symmetric_grid(double epsilon0, int points) {
  require(points >= 1, "symmetric_grid: need at least one point");
  std::vector<double> grid;
  if (points == 1) return {0.0};
  for (int i = 0; i < points; ++i) {
    grid.push_back(-epsilon0 + 2.0 * epsilon0 * i / (points - 1));
  }
  return grid;
}

/// Throws unless some power P^m, m <= n^2, is strictly positive. The message
/// names which check failed.
inline void check_primitive(const Eigen::MatrixXd& P) {
  const auto n = P.rows();
  using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMat adj = (P.array() > 0.0).matrix();

  BoolMat reach = adj;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!reach(i, k)) continue;
      for (Eigen::Index j = 0; j < n; ++j) reach(i, j) = reach(i, j) || reach(k, j);
    }
  }
  if (!reach.all()) {
    throw PreconditionError("spectral_decompose: chain is reducible (irreducibility check failed)");
  }

  BoolMat power = adj;
  for (Eigen::Index m = 1; m <= n * n; ++m) {
    if (power.all()) return;
    BoolMat next = BoolMat::Constant(n, n, false);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (!power(i, k)) continue;
        for (Eigen::Index j = 0; j < n; ++j) next(i, j) = next(i, j) || adj(k, j);
      }
    }
    power = next;
  }
  throw PreconditionError("spectral_decompose: chain is periodic (aperiodicity check failed: no strictly positive power)");
}

inline Eigen::RowVectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const auto n = P.rows();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd nu = A.fullPivLu().solve(rhs);
  return nu.transpose();
}

namespace detail {

struct RadiusEstimate {
  double value = 0.0;
  bool converged = false;
};

// Power iteration on Q. Two-step norm ratios are used so a dominant pair
// {lambda, -lambda} still converges.
inline RadiusEstimate power_radius(const Eigen::MatrixXd& Q, int max_iter = 5000) {
  const auto n = Q.rows();
  Eigen::VectorXd v(n);
  std::uint64_t h = 0x1234ABCDull;
  for (Eigen::Index i = 0; i < n; ++i) {
    h = splitmix64(h);
    v[i] = 1.0 + static_cast<double>(h >> 11) * 0x1.0p-53;
  }
  v /= v.norm();
  double previous = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w1 = Q * v;
    Eigen::VectorXd w2 = Q * w1;
    const double n2 = w2.norm();
    if (n2 < 1e-300 || w1.norm() < 1e-300) return {0.0, true};
    const double estimate = std::sqrt(n2);
    if (previous >= 0.0 && std::abs(estimate - previous) <= 1e-14 * std::max(estimate, 1e-300)) {
      return {estimate, true};
    }
    previous = estimate;
    v = w2 / n2;
  }
  return {previous, false};
}

}  // namespace detail

/// Perturbed operator P_t: entry (x, y) = P(x, y) exp(i t f(y)).
inline Eigen::MatrixXcd perturbed(const FiniteChain& chain, double t) {
  const auto n = chain.n_states();
  Eigen::MatrixXcd out(n, n);
  for (int y = 0; y < n; ++y) {
    const std::complex<double> phase = t == 0.0 ? std::complex<double>(1.0, 0.0) : std::polar(1.0, t * chain.f()[y]);
    for (int x = 0; x < n; ++x) out(x, y) = chain.P()(x, y) * phase;
  }
  return out;
}

inline SpectralData spectral_decompose(const FiniteChain& chain, int m_max = 64,
                                       std::vector<double> t_grid = symmetric_grid(1.0, 9),
                                       double epsilon0 = 1.0) {
  require(m_max >= 1, "spectral_decompose: m_max must be positive");
  require(epsilon0 > 0.0 && epsilon0 <= 1.0, "spectral_decompose: epsilon0 must lie in (0, 1]");
  for (double t : t_grid) {
    require(std::abs(t) <= epsilon0 + 1e-15, "spectral_decompose: t grid must lie within [-epsilon0, epsilon0]");
  }
  const auto& P = chain.P();
  const auto n = P.rows();
  check_primitive(P);

  SpectralData sd;
  sd.nu = stationary_distribution(P);
  sd.Pi = Eigen::VectorXd::Ones(n) * sd.nu;
  sd.Q = P - sd.Pi;
  sd.m_max = m_max;
  sd.t_grid = std::move(t_grid);
  sd.epsilon0 = epsilon0;
  sd.norm_nu = sd.nu.cwiseAbs().sum();

  if (sd.Q.cwiseAbs().maxCoeff() < 1e-15) {
    sd.kappa = 0.0;
  } else {
    auto est = detail::power_radius(sd.Q);
    if (!est.converged) {
      Eigen::EigenSolver<Eigen::MatrixXd> solver(sd.Q, false);
      est.value = solver.eigenvalues().cwiseAbs().maxCoeff();
      sd.kappa_from_fallback = true;
    }
    sd.kappa = est.value;
  }
  if (!(sd.kappa < 1.0)) {
    throw NumericalError("spectral_decompose: spectral radius of Q is not below 1");
  }

  sd.C_Q = 1.0;
  if (sd.kappa > 0.0) {
    Eigen::MatrixXd Qm = Eigen::MatrixXd::Identity(n, n);
    for (int m = 1; m <= m_max; ++m) {
      Qm = Qm * sd.Q;
      const double scale = std::pow(sd.kappa, m);
      if (scale < 1e-280) break;
      sd.C_Q = std::max(sd.C_Q, inf_norm(Qm) / scale);
    }
  }

  sd.C_P = 1.0;
  for (double t : sd.t_grid) {
    const Eigen::MatrixXcd Pt = perturbed(chain, t);
    Eigen::MatrixXcd Pm = Eigen::MatrixXcd::Identity(n, n);
    for (int m = 1; m <= m_max; ++m) {
      Pm = Pm * Pt;
      sd.C_P = std::max(sd.C_P, inf_norm(Pm));
    }
  }
  return sd;
}

/// Constants of the characteristic-function mixing bound, instantiated with
/// sup/l1 norms. In this setting lambda0 does not depend on the start state.
inline MixingConstants mixing_constants(const SpectralData& sd) {
  MixingConstants mc;
  mc.epsilon0 = sd.epsilon0;
  mc.lambda0_x = 2.0 * sd.C_Q * (sd.norm_nu + sd.norm_delta_x) * sd.norm_e;
  if (sd.kappa == 0.0) {
    mc.lambda1 = std::numeric_limits<double>::infinity();
    mc.lambda1_infinite = true;
  } else {
    require(sd.kappa > 0.0 && sd.kappa < 1.0, "mixing_constants: kappa must lie in (0, 1)");
    mc.lambda1 = std::abs(std::log(sd.kappa));
  }
  mc.lambda2 = std::max(1.0, std::log2(sd.C_P));
  return mc;
}

}  // namespace wiplab
