#pragma once

// Path coupling between a sampled trajectory and a sequence of standard
// normals, island by island.
//
// The observed path is kept as sampled. For each island the realized sum S is
// mapped through a randomized probability integral transform of its estimated
// law, then through sigma_{k,j} Phi^{-1}, giving a normal W'' of variance
// sigma^2_{k,j} comonotone with S. In standardized units (divided by sigma)
// W'' is split as W_1 + ... + W_{i*} + f xi with i* = min(|I|, [s^2]),
// s^2 = sigma^2_{k,j} / sigma^2, f^2 = s^2 - i*, by conditioning iid normals on
// that linear constraint. All other W_i are free iid normals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wiplab/chains.hpp"
#include "wiplab/error.hpp"
#include "wiplab/moments.hpp"
#include "wiplab/partition.hpp"
#include "wiplab/rng.hpp"
#include "wiplab/smoothing.hpp"
#include "wiplab/stats.hpp"

namespace wiplab {

struct IslandRecord {
  int k = 0;
  long long j = 0;
  std::int64_t start = 0;  // first index, 1-based
  std::int64_t length = 0;
  double S = 0.0;          // realized island sum (plus V when smoothing)
  double u = 0.0;          // randomized PIT value
  double w2 = 0.0;         // coupled normal, observable units, variance sigma^2_{k,j}
  double var = 0.0;        // sigma^2_{k,j}
  std::int64_t i_star = 0;
  double f = 0.0;
  double xi = 0.0;
  double residual = 0.0;   // |sum_{i<=i*} W_i + f xi - w2 / sigma|
  bool degenerate = false;
};

struct CouplingTrace {
  std::vector<double> x_path;
  std::vector<double> w_path;
  std::vector<IslandRecord> islands;
  double mu = 0.0;
  double sigma = 1.0;
  std::int64_t N = 0;
  double epsilon = 0.0;
  double beta = 0.0;
  int k0 = 0;
  std::uint64_t seed = 0;
  std::uint64_t rep = 0;
  int reps_for_cdf = 0;
};

struct CouplingOptions {
  int reps_for_cdf = 100;
  bool smoothing = false;  // add an independent smoothing variable to each island sum
  double epsilon0 = 1.0;
};

namespace detail {
inline constexpr std::uint64_t kNormalStream = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kXiStream = kNormalStream + 1;
inline constexpr std::uint64_t kPitStream = kNormalStream + 2;
inline constexpr std::uint64_t kSmoothStream = kNormalStream + 3;
}  // namespace detail

/// Island layout and island-sum variances shared by all replications of one
/// experiment. Variances are exact for finite chains and estimated from the
/// auxiliary trajectories otherwise.
class CouplingPlan {
 public:
  CouplingPlan(ChainModel model, double mu, double sigma, const BlockPartition& partition, CouplingOptions opts = {})
      : model_(std::move(model)), mu_(mu), sigma_(sigma), opts_(opts), N_(partition.N()),
        epsilon_(partition.epsilon()), beta_(partition.beta()), k0_(partition.k0()), islands_(partition.islands()) {
    require(std::isfinite(sigma) && sigma > 0.0, "build_path_coupling: sigma must be > 0");
    require(opts_.reps_for_cdf >= 2, "build_path_coupling: reps_for_cdf must be >= 2");
    if (opts_.smoothing) {
      smoother_ = std::make_shared<const SmoothingSampler>(opts_.epsilon0);
      smoother_var_ = smoother_->tabulated_moment(2.0);
    }
    if (const auto* chain = std::get_if<FiniteChain>(&model_)) {
      exact_var_.emplace();
      Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(chain->n_states());
      law[chain->x0()] = 1.0;
      std::int64_t t = 0;
      for (const auto& isl : islands_) {
        for (; t < isl.start - 1; ++t) law = law * chain->P();
        exact_var_->push_back(window_moments(*chain, law, isl.length()).variance + smoother_var_);
      }
    }
  }

  const std::vector<Segment>& islands() const { return islands_; }
  const std::optional<std::vector<double>>& exact_variances() const { return exact_var_; }
  std::int64_t N() const { return N_; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  const CouplingOptions& options() const { return opts_; }
  const ChainModel& model() const { return model_; }

  /// One coupled pair of paths; a pure function of (plan, seed, rep).
  CouplingTrace build(std::uint64_t seed, std::uint64_t rep = 0) const {
    const auto N = static_cast<std::size_t>(N_);
    CouplingTrace tr;
    tr.mu = mu_;
    tr.sigma = sigma_;
    tr.N = N_;
    tr.epsilon = epsilon_;
    tr.beta = beta_;
    tr.k0 = k0_;
    tr.seed = seed;
    tr.rep = rep;
    tr.reps_for_cdf = opts_.reps_for_cdf;
    tr.x_path = sample_path(model_, N, seed, stream_id(rep, 0)).values;

    const std::size_t R = static_cast<std::size_t>(opts_.reps_for_cdf);
    const std::size_t M = islands_.size();
    std::vector<double> observed(M);
    std::vector<double> aux(M * R);  // aux[i * R + r]
    std::vector<double> prefix(N + 1, 0.0);
    auto island_sums = [&](const std::vector<double>& path, auto&& sink) {
      for (std::size_t i = 0; i < N; ++i) prefix[i + 1] = prefix[i] + path[i];
      for (std::size_t i = 0; i < M; ++i) {
        const auto& s = islands_[i];
        sink(i, prefix[static_cast<std::size_t>(s.end - 1)] - prefix[static_cast<std::size_t>(s.start - 1)]);
      }
    };
    island_sums(tr.x_path, [&](std::size_t i, double v) { observed[i] = v; });
    std::vector<double> buffer(N);
    for (std::size_t r = 0; r < R; ++r) {
      Philox4x32 eng(seed, stream_id(rep, 1 + r));
      sample_values(model_, std::span<double>(buffer), eng);
      island_sums(buffer, [&](std::size_t i, double v) { aux[i * R + r] = v; });
    }
    if (smoother_) {
      Philox4x32 eng(seed, stream_id(rep, detail::kSmoothStream));
      for (auto& v : observed) v += (*smoother_)(eng);
      for (auto& v : aux) v += (*smoother_)(eng);
    }

    Philox4x32 normals(seed, stream_id(rep, detail::kNormalStream));
    tr.w_path.resize(N);
    for (auto& w : tr.w_path) w = standard_normal(normals);
    Philox4x32 xis(seed, stream_id(rep, detail::kXiStream));
    Philox4x32 pit(seed, stream_id(rep, detail::kPitStream));

    tr.islands.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
      const auto& seg = islands_[i];
      IslandRecord rec;
      rec.k = seg.k;
      rec.j = seg.j;
      rec.start = seg.start;
      rec.length = seg.length();
      rec.S = observed[i];
      const double* a = aux.data() + i * R;
      std::size_t less = 0, equal = 0;
      for (std::size_t r = 0; r < R; ++r) {
        less += a[r] < rec.S;
        equal += a[r] == rec.S;
      }
      // uniform rank of S among the R + 1 values, ties broken at random
      const double v = uniform_open(pit);
      rec.u = (static_cast<double>(less) + v * static_cast<double>(equal + 1)) / static_cast<double>(R + 1);
      const double xi_draw = standard_normal(xis);
      if (exact_var_) {
        rec.var = (*exact_var_)[i];
      } else {
        rec.var = stats::variance(std::span<const double>(a, R));
      }
      const double s2 = rec.var / (sigma_ * sigma_);
      if (!(s2 > 1e-12)) {
        rec.degenerate = true;
        rec.w2 = 0.0;
        rec.xi = xi_draw;
        tr.islands.push_back(rec);
        continue;
      }
      rec.w2 = std::sqrt(rec.var) * stats::normal_quantile(rec.u);
      rec.i_star = std::min<std::int64_t>(rec.length, static_cast<std::int64_t>(std::floor(s2)));
      rec.f = std::sqrt(std::abs(s2 - static_cast<double>(rec.i_star)));
      const double target = rec.w2 / sigma_;
      double* w = tr.w_path.data() + (seg.start - 1);
      double total = rec.f * xi_draw;
      for (std::int64_t q = 0; q < rec.i_star; ++q) total += w[q];
      const double delta = (target - total) / s2;
      for (std::int64_t q = 0; q < rec.i_star; ++q) w[q] += delta;
      rec.xi = xi_draw + rec.f * delta;
      double check = rec.f * rec.xi;
      for (std::int64_t q = 0; q < rec.i_star; ++q) check += w[q];
      rec.residual = std::abs(check - target);
      tr.islands.push_back(rec);
    }
    return tr;
  }

 private:
  ChainModel model_;
  double mu_;
  double sigma_;
  CouplingOptions opts_;
  std::int64_t N_;
  double epsilon_;
  double beta_;
  int k0_;
  std::vector<Segment> islands_;
  std::optional<std::vector<double>> exact_var_;
  std::shared_ptr<const SmoothingSampler> smoother_;
  double smoother_var_ = 0.0;
};

inline CouplingTrace build_path_coupling(const ChainModel& model, double mu, double sigma,
                                         const BlockPartition& partition, std::int64_t N, int reps_for_cdf,
                                         std::uint64_t seed, std::uint64_t rep = 0) {
  require(partition.N() == N, "build_path_coupling: partition was built for a different N");
  CouplingOptions opts;
  opts.reps_for_cdf = reps_for_cdf;
  return CouplingPlan(model, mu, sigma, partition, opts).build(seed, rep);
}

/// N^{-1/2} max_k |sum_{i<=k} (x_i - mu) - sigma sum_{i<=k} W_i|.
inline double coupling_error(const CouplingTrace& tr) {
  require(tr.x_path.size() == tr.w_path.size() && !tr.x_path.empty(), "coupling_error: incomplete trace");
  double sx = 0.0, sw = 0.0, best = 0.0;
  for (std::size_t i = 0; i < tr.x_path.size(); ++i) {
    sx += tr.x_path[i] - tr.mu;
    sw += tr.w_path[i];
    best = std::max(best, std::abs(sx - tr.sigma * sw));
  }
  return best / std::sqrt(static_cast<double>(tr.x_path.size()));
}

}  // namespace wiplab
