#pragma once

// Example processes and their observable sequences f(X_1), ..., f(X_N).
//
// Three model families are supported: finite-state Markov chains with an
// arbitrary observable, the autoregressive walk with symmetric Bernoulli noise
// (observable f(x) = x), and the affine stochastic recursion with finitely many
// coefficient atoms (observable f(x) = x). All models are immutable once built.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "wiplab/error.hpp"
#include "wiplab/rng.hpp"

namespace wiplab {

class FiniteChain {
 public:
  FiniteChain(Eigen::MatrixXd transition, Eigen::VectorXd observable, int x0)
      : P_(std::move(transition)), f_(std::move(observable)), x0_(x0) {
    const auto n = P_.rows();
    require(n >= 1 && P_.cols() == n, "FiniteChain: transition matrix must be square and non-empty");
    require(f_.size() == n, "FiniteChain: observable length must equal the number of states");
    require(x0_ >= 0 && x0_ < n, "FiniteChain: x0 out of range");
    cumulative_.resize(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p = P_(i, j);
        require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
                "FiniteChain: transition probabilities must lie in [0, 1]");
        acc += p;
        cumulative_[static_cast<std::size_t>(i * n + j)] = acc;
      }
      require(std::abs(acc - 1.0) <= 1e-12, "FiniteChain: row " + std::to_string(i) + " does not sum to 1");
      cumulative_[static_cast<std::size_t>(i * n + n - 1)] = 1.0;
    }
  }

  int n_states() const { return static_cast<int>(P_.rows()); }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::VectorXd& f() const { return f_; }
  int x0() const { return x0_; }

  FiniteChain with_start(int x0) const { return FiniteChain(P_, f_, x0); }

  /// Next state drawn from row `from` using a uniform u in (0, 1).
  int step(int from, double u) const {
    const auto n = static_cast<std::size_t>(P_.rows());
    const double* row = cumulative_.data() + static_cast<std::size_t>(from) * n;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (u < row[j]) return static_cast<int>(j);
    }
    return static_cast<int>(n - 1);
  }

 private:
  Eigen::MatrixXd P_;
  Eigen::VectorXd f_;
  int x0_;
  std::vector<double> cumulative_;
};

/// x_{n+1} = alpha x_n + b_n with b_n = +1 or -1 with probability 1/2 each.
class ArBernoulli {
 public:
  ArBernoulli(double alpha, double x0) : alpha_(alpha), x0_(x0) {
    require(std::isfinite(alpha) && std::abs(alpha) < 1.0, "ArBernoulli: |alpha| must be < 1");
    require(std::isfinite(x0), "ArBernoulli: x0 must be finite");
  }
  double alpha() const { return alpha_; }
  double x0() const { return x0_; }

 private:
  double alpha_;
  double x0_;
};

struct RecursionAtom {
  double a = 0.0;
  double b = 0.0;
  double weight = 0.0;
};

/// Flags for the contraction, non-degeneracy and non-lattice hypotheses of the
/// recursion, decided by enumeration over the atom list.
struct RecursionHypotheses {
  bool h1 = false;  // some p > 2 with E a^p < 1
  double h1_p = 0.0;
  bool h2 = false;  // no point is fixed by every atom
  bool h3 = false;  // {ln a} generates a dense subgroup of R
};

/// x_{n+1} = a_{n+1} x_n + b_{n+1}, (a, b) drawn iid from a finite atom list.
class StochasticRecursion {
 public:
  StochasticRecursion(std::vector<RecursionAtom> atoms, double x0) : atoms_(std::move(atoms)), x0_(x0) {
    require(!atoms_.empty(), "StochasticRecursion: atom list is empty");
    double total = 0.0;
    for (const auto& atom : atoms_) {
      require(std::isfinite(atom.a) && atom.a > 0.0, "StochasticRecursion: coefficient a must be > 0");
      require(std::isfinite(atom.b), "StochasticRecursion: coefficient b must be finite");
      require(atom.weight >= 0.0, "StochasticRecursion: weights must be nonnegative");
      total += atom.weight;
      cumulative_.push_back(total);
    }
    require(std::abs(total - 1.0) <= 1e-12, "StochasticRecursion: weights must sum to 1");
    cumulative_.back() = 1.0;
    hyp_ = check_hypotheses(atoms_);
  }

  const std::vector<RecursionAtom>& atoms() const { return atoms_; }
  double x0() const { return x0_; }
  const RecursionHypotheses& hypotheses() const { return hyp_; }

  /// E[a^p] and E[|b|^p] over the atom list.
  double moment_a(double p) const {
    double s = 0.0;
    for (const auto& atom : atoms_) s += atom.weight * std::pow(atom.a, p);
    return s;
  }
  double moment_b(double p) const {
    double s = 0.0;
    for (const auto& atom : atoms_) s += atom.weight * std::pow(std::abs(atom.b), p);
    return s;
  }
  double mean_b() const {
    double s = 0.0;
    for (const auto& atom : atoms_) s += atom.weight * atom.b;
    return s;
  }
  double mean_a() const { return moment_a(1.0); }

  const RecursionAtom& pick(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
    return atoms_[idx];
  }

  static RecursionHypotheses check_hypotheses(const std::vector<RecursionAtom>& atoms) {
    RecursionHypotheses h;
    for (int step = 1; step <= 3000; ++step) {
      const double p = 2.0 + 0.01 * step;
      double s = 0.0;
      for (const auto& atom : atoms) s += atom.weight * std::pow(atom.a, p);
      if (s < 1.0) {
        h.h1 = true;
        h.h1_p = p;
        break;
      }
    }

    // H2 fails iff a common fixed point carries all the mass.
    std::vector<double> candidates;
    bool all_identity = true;
    for (const auto& atom : atoms) {
      if (atom.weight == 0.0) continue;
      const bool identity = std::abs(atom.a - 1.0) < 1e-15 && std::abs(atom.b) < 1e-15;
      all_identity = all_identity && identity;
      if (std::abs(atom.a - 1.0) >= 1e-15) candidates.push_back(atom.b / (1.0 - atom.a));
    }
    h.h2 = !all_identity;
    for (double x : candidates) {
      double mass = 0.0;
      for (const auto& atom : atoms) {
        if (std::abs(atom.a * x + atom.b - x) <= 1e-12 * (1.0 + std::abs(x))) mass += atom.weight;
      }
      if (mass >= 1.0 - 1e-12) h.h2 = false;
    }

    // H3: the logs are not all commensurable with a common step. Rational
    // ratios are detected with denominators up to 1000.
    std::vector<double> logs;
    for (const auto& atom : atoms) {
      if (atom.weight > 0.0 && std::abs(std::log(atom.a)) > 1e-14) logs.push_back(std::log(atom.a));
    }
    h.h3 = false;
    for (std::size_t i = 0; i < logs.size() && !h.h3; ++i) {
      for (std::size_t j = i + 1; j < logs.size(); ++j) {
        const double ratio = logs[i] / logs[j];
        bool rational = false;
        for (int q = 1; q <= 1000; ++q) {
          const double num = ratio * q;
          if (std::abs(num - std::round(num)) < 1e-9 * q) {
            rational = true;
            break;
          }
        }
        if (!rational) {
          h.h3 = true;
          break;
        }
      }
    }
    return h;
  }

 private:
  std::vector<RecursionAtom> atoms_;
  double x0_;
  std::vector<double> cumulative_;
  RecursionHypotheses hyp_;
};

using ChainModel = std::variant<FiniteChain, ArBernoulli, StochasticRecursion>;

inline std::string model_kind(const ChainModel& model) {
  switch (model.index()) {
    case 0: return "finite";
    case 1: return "ar";
    default: return "recursion";
  }
}

struct Trajectory {
  std::vector<double> values;  // f(X_1), ..., f(X_N)
  std::string model;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t size() const { return values.size(); }
};

/// Fills `out` with f(X_1..X_N) drawn from `eng`.
template <class Engine>
void sample_values(const ChainModel& model, std::span<double> out, Engine& eng) {
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FiniteChain>) {
          const auto& f = m.f();
          int state = m.x0();
          for (double& v : out) {
            state = m.step(state, uniform_open(eng));
            v = f[state];
          }
        } else if constexpr (std::is_same_v<M, ArBernoulli>) {
          double x = m.x0();
          const double a = m.alpha();
          std::uint64_t bits = 0;
          int left = 0;
          for (double& v : out) {
            if (left == 0) {
              bits = eng();
              left = 64;
            }
            x = a * x + ((bits & 1u) ? 1.0 : -1.0);
            bits >>= 1;
            --left;
            v = x;
          }
        } else {
          double x = m.x0();
          for (double& v : out) {
            const auto& atom = m.pick(uniform_open(eng));
            x = atom.a * x + atom.b;
            v = x;
          }
        }
      },
      model);
}

/// One trajectory of length N; a pure function of (model, N, seed, stream).
inline Trajectory sample_path(const ChainModel& model, std::size_t N, std::uint64_t seed, std::uint64_t stream = 0) {
  require(N >= 1, "sample_path: N must be >= 1");
  Trajectory traj;
  traj.values.resize(N);
  traj.model = model_kind(model);
  traj.seed = seed;
  traj.stream = stream;
  Philox4x32 eng(seed, stream);
  sample_values(model, std::span<double>(traj.values), eng);
  return traj;
}

/// Law of X_k started from x0, i.e. the row vector delta_{x0} P^k.
inline Eigen::RowVectorXd exact_marginal(const FiniteChain& chain, int k) {
  require(k >= 0, "exact_marginal: k must be >= 0");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(chain.n_states());
  row[chain.x0()] = 1.0;
  Eigen::MatrixXd base = chain.P();
  for (unsigned e = static_cast<unsigned>(k); e > 0; e >>= 1) {
    if (e & 1u) row = row * base;
    if (e > 1) base = base * base;
  }
  return row;
}

/// Sum of values over the 1-based inclusive index range [start, end].
inline double block_sum(const Trajectory& traj, std::size_t start, std::size_t end) {
  require(start >= 1 && start <= end && end <= traj.size(), "block_sum: indices out of range");
  return std::accumulate(traj.values.begin() + static_cast<std::ptrdiff_t>(start - 1),
                         traj.values.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
}

}  // namespace wiplab
