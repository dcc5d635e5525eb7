#pragma once

// Mean and asymptotic variance of the observable, plus empirical checks of the
// variance-linearity, covariance-decay and maximal-moment conditions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wiplab/chains.hpp"
#include "wiplab/error.hpp"
#include "wiplab/parallel.hpp"
#include "wiplab/rng.hpp"
#include "wiplab/spectral.hpp"
#include "wiplab/stats.hpp"

namespace wiplab {

struct MeanVariance {
  double mu = 0.0;
  double sigma2 = 0.0;
};

enum class MomentMethod { resolvent, series, closed_form, monte_carlo };

inline const char* to_string(MomentMethod m) {
  switch (m) {
    case MomentMethod::resolvent: return "resolvent";
    case MomentMethod::series: return "series";
    case MomentMethod::closed_form: return "closed_form";
    default: return "monte_carlo";
  }
}

struct C3Point {
  long n = 0;
  double deviation = 0.0;  // max over k of |Var(S_{k+1..k+n})/n - sigma2|
  double stderr_ = 0.0;    // bootstrap standard error (0 for exact profiles)
  long worst_k = 0;
};

struct MomentReport {
  double mu = 0.0;
  double sigma2 = 0.0;
  MomentMethod method = MomentMethod::resolvent;
  std::optional<int> series_truncation;
  std::vector<C3Point> c3_profile;
  double c2_value = 0.0;  // sup_i ||X_i||_{2+2 delta}
  double delta = 0.5;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Bootstrap streams live in a replication range no experiment uses.
inline constexpr std::uint64_t kBootstrapRep = 0xB007'0000'0000'0000ull;

/// Resolvent route: sigma^2 = nu(g^2) + 2 nu(g * (I - Q)^{-1} Q g) with g = f - nu(f).
inline MeanVariance exact_mean_variance(const FiniteChain& chain) {
  check_primitive(chain.P());
  const auto n = chain.n_states();
  const Eigen::RowVectorXd nu = stationary_distribution(chain.P());
  const double mu = nu.dot(chain.f());
  const Eigen::VectorXd g = chain.f().array() - mu;
  const Eigen::MatrixXd Q = chain.P() - Eigen::VectorXd::Ones(n) * nu;
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Q;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw NumericalError("exact_mean_variance: I - Q is singular");
  const Eigen::VectorXd h = lu.solve(Q * g);
  const double sigma2 = nu.dot(g.cwiseProduct(g)) + 2.0 * nu.dot(g.cwiseProduct(h));
  return {mu, std::max(0.0, sigma2)};
}

/// Truncation K with C_Q kappa^K < 1e-12.
inline int series_truncation(const SpectralData& sd) {
  if (sd.kappa == 0.0) return 1;
  const double K = std::log(1e-12 / sd.C_Q) / std::log(sd.kappa);
  return std::max(1, static_cast<int>(std::ceil(K)));
}

/// Series route: Var_nu f + 2 sum_{k=1}^{K} Cov_nu(f(X_0), f(X_k)).
inline double series_variance(const FiniteChain& chain, int K) {
  require(K >= 0, "series_variance: K must be >= 0");
  const Eigen::RowVectorXd nu = stationary_distribution(chain.P());
  const double mu = nu.dot(chain.f());
  const Eigen::VectorXd g = chain.f().array() - mu;
  double total = nu.dot(g.cwiseProduct(g));
  Eigen::VectorXd Pkg = g;
  for (int k = 1; k <= K; ++k) {
    Pkg = chain.P() * Pkg;
    total += 2.0 * nu.dot(g.cwiseProduct(Pkg));
  }
  return total;
}

/// Stationary-variance formula 1/(1 - alpha^2) with mean 0.
inline MeanVariance closed_form_variance(const ArBernoulli& model) {
  return {0.0, 1.0 / (1.0 - model.alpha() * model.alpha())};
}

/// Stationary-variance formula E b^2 / (1 - E a^2); requires E b = 0.
inline MeanVariance closed_form_variance(const StochasticRecursion& model) {
  if (std::abs(model.mean_b()) > 1e-12) {
    throw PreconditionError("closed_form_variance: E b must be 0; center the b coefficients first");
  }
  const double ea2 = model.moment_a(2.0);
  if (!(ea2 < 1.0)) throw PreconditionError("closed_form_variance: E a^2 must be < 1");
  return {0.0, model.moment_b(2.0) / (1.0 - ea2)};
}

/// Long-run variance lim Var(S_n)/n, i.e. the stationary variance inflated by
/// the lag covariances: Var * (1 + rho) / (1 - rho) with rho = alpha or E a.
inline MeanVariance long_run_variance(const ArBernoulli& model) {
  const double a = model.alpha();
  return {0.0, 1.0 / ((1.0 - a) * (1.0 - a))};
}

inline MeanVariance long_run_variance(const StochasticRecursion& model) {
  const auto stat = closed_form_variance(model);
  const double rho = model.mean_a();
  return {0.0, stat.sigma2 * (1.0 + rho) / (1.0 - rho)};
}

inline MeanVariance long_run_variance(const ChainModel& model) {
  return std::visit(
      [](const auto& m) -> MeanVariance {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FiniteChain>) {
          return exact_mean_variance(m);
        } else {
          return long_run_variance(m);
        }
      },
      model);
}

struct WindowMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of sum_{i=1}^{len} f(Y_i) for a chain Y whose time-0 law
/// is `law`. Exact; O(len n^2).
inline WindowMoments window_moments(const FiniteChain& chain, const Eigen::RowVectorXd& law, long len) {
  require(len >= 1, "window_moments: len must be >= 1");
  const auto& P = chain.P();
  const Eigen::RowVectorXd f = chain.f().transpose();
  const Eigen::RowVectorXd f2 = f.cwiseProduct(f);
  Eigen::RowVectorXd p = law;
  Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(law.size());  // E[S; state]
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(law.size());  // E[S^2; state]
  for (long i = 0; i < len; ++i) {
    const Eigen::RowVectorXd pn = p * P;
    const Eigen::RowVectorXd gP = g * P;
    h = h * P + 2.0 * gP.cwiseProduct(f) + pn.cwiseProduct(f2);
    g = gP + pn.cwiseProduct(f);
    p = pn;
  }
  const double m = g.sum();
  return {m, std::max(0.0, h.sum() - m * m)};
}

/// Moments of sum_{i=start}^{start+len-1} f(X_i) under P_{x0}.
inline WindowMoments exact_window_moments(const FiniteChain& chain, long start, long len) {
  require(start >= 1, "exact_window_moments: start must be >= 1");
  return window_moments(chain, exact_marginal(chain, static_cast<int>(start - 1)), len);
}

/// mu_delta(x) = sup_{1<=k<=k_max} (P^k |f|^{2+2 delta})(x)^{1/(2+2 delta)}.
inline double mu_delta(const FiniteChain& chain, double delta, int k_max = 256) {
  const double p = 2.0 + 2.0 * delta;
  const Eigen::VectorXd g = chain.f().cwiseAbs().array().pow(p);
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(chain.n_states());
  law[chain.x0()] = 1.0;
  double best = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    law = law * chain.P();
    best = std::max(best, std::pow(law.dot(g), 1.0 / p));
  }
  return best;
}

/// Monte-Carlo estimate of Var(S_n)/n over `reps` replications with a
/// bootstrap standard error.
inline Estimate mc_variance_rate(const ChainModel& model, long n, int reps, std::uint64_t seed, int threads = 1,
                                 int boot = 200) {
  require(n >= 1 && reps >= 2, "mc_variance_rate: need n >= 1 and reps >= 2");
  std::vector<double> sums(static_cast<std::size_t>(reps));
  parallel_for(sums.size(), threads, [&](std::size_t r) {
    const auto traj = sample_path(model, static_cast<std::size_t>(n), seed, stream_id(r, 0));
    double s = 0.0;
    for (double v : traj.values) s += v;
    sums[r] = s;
  });
  const double scale = 1.0 / static_cast<double>(n);
  Estimate est;
  est.value = stats::variance(sums) * scale;
  auto eng = make_engine(seed, kBootstrapRep, 1);
  std::vector<double> resample(sums.size());
  std::vector<double> boots;
  for (int b = 0; b < boot; ++b) {
    for (auto& x : resample) x = sums[static_cast<std::size_t>(eng() % sums.size())];
    boots.push_back(stats::variance(resample) * scale);
  }
  est.stderr_ = std::sqrt(stats::variance(boots));
  return est;
}

/// Empirical variance-linearity profile: for each n the worst k of
/// |Var(S_{k+1..k+n})/n - sigma2|, with a bootstrap standard error of that max.
inline std::vector<C3Point> c3_profile(const ChainModel& model, double sigma2, const std::vector<long>& n_list,
                                       const std::vector<long>& k_list, int reps, std::uint64_t seed,
                                       int threads = 1, int boot = 200) {
  require(!n_list.empty() && !k_list.empty(), "c3_profile: n_list and k_list must be non-empty");
  require(reps >= 2, "c3_profile: reps must be >= 2");
  const long n_max = *std::max_element(n_list.begin(), n_list.end());
  const long k_max = *std::max_element(k_list.begin(), k_list.end());
  const auto windows = n_list.size() * k_list.size();
  // sums[r][w] for window w = (n index, k index)
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(reps), std::vector<double>(windows));
  parallel_for(sums.size(), threads, [&](std::size_t r) {
    const auto traj = sample_path(model, static_cast<std::size_t>(n_max + k_max), seed, stream_id(r, 0));
    std::vector<double> prefix(traj.size() + 1, 0.0);
    for (std::size_t i = 0; i < traj.size(); ++i) prefix[i + 1] = prefix[i] + traj.values[i];
    for (std::size_t a = 0; a < n_list.size(); ++a) {
      for (std::size_t b = 0; b < k_list.size(); ++b) {
        const auto k = static_cast<std::size_t>(k_list[b]);
        const auto n = static_cast<std::size_t>(n_list[a]);
        sums[r][a * k_list.size() + b] = prefix[k + n] - prefix[k];
      }
    }
  });

  auto profile_from = [&](const std::vector<std::size_t>& rows) {
    std::vector<std::pair<double, long>> out(n_list.size(), {0.0, 0});
    std::vector<double> column(rows.size());
    for (std::size_t a = 0; a < n_list.size(); ++a) {
      for (std::size_t b = 0; b < k_list.size(); ++b) {
        for (std::size_t r = 0; r < rows.size(); ++r) column[r] = sums[rows[r]][a * k_list.size() + b];
        const double dev = std::abs(stats::variance(column) / static_cast<double>(n_list[a]) - sigma2);
        if (dev >= out[a].first) out[a] = {dev, k_list[b]};
      }
    }
    return out;
  };

  std::vector<std::size_t> identity(sums.size());
  for (std::size_t r = 0; r < identity.size(); ++r) identity[r] = r;
  const auto point = profile_from(identity);

  std::vector<std::vector<double>> boot_dev(n_list.size());
  auto eng = make_engine(seed, kBootstrapRep, 2);
  std::vector<std::size_t> rows(sums.size());
  for (int b = 0; b < boot; ++b) {
    for (auto& r : rows) r = static_cast<std::size_t>(eng() % sums.size());
    const auto bp = profile_from(rows);
    for (std::size_t a = 0; a < n_list.size(); ++a) boot_dev[a].push_back(bp[a].first);
  }

  std::vector<C3Point> result;
  for (std::size_t a = 0; a < n_list.size(); ++a) {
    result.push_back({n_list[a], point[a].first, std::sqrt(stats::variance(boot_dev[a])), point[a].second});
  }
  return result;
}

/// Exact counterpart of c3_profile for finite chains started at x0.
inline std::vector<C3Point> exact_c3_profile(const FiniteChain& chain, double sigma2, const std::vector<long>& n_list,
                                             const std::vector<long>& k_list) {
  std::vector<C3Point> result;
  for (long n : n_list) {
    C3Point pt{n, 0.0, 0.0, 0};
    for (long k : k_list) {
      const auto wm = exact_window_moments(chain, k + 1, n);
      const double dev = std::abs(wm.variance / static_cast<double>(n) - sigma2);
      if (dev >= pt.deviation) {
        pt.deviation = dev;
        pt.worst_k = k;
      }
    }
    result.push_back(pt);
  }
  return result;
}

struct CovariancePoint {
  long l = 0;
  long k = 0;
  double abs_cov = 0.0;
  double bound = 0.0;
};

/// Exact |Cov_x(f(X_l), f(X_{l+k}))| next to the bound A(x) kappa^{k gamma/4},
/// gamma = min(1, 2 delta). A(x) is instantiated with its unspecified
/// absolute constant set to 1 and all norms equal to 1.
inline std::vector<CovariancePoint> covariance_decay(const FiniteChain& chain, const std::vector<long>& l_list,
                                                     const std::vector<long>& k_list, double delta = 0.5) {
  const auto sd = spectral_decompose(chain);
  const double gamma = std::min(1.0, 2.0 * delta);
  const double A = 1.0 + sd.C_Q * sd.C_P * sd.C_P * (sd.norm_nu + sd.norm_delta_x) * sd.norm_e +
                   std::pow(mu_delta(chain, delta), 2.0 + gamma);
  const auto& P = chain.P();
  const Eigen::VectorXd& f = chain.f();
  std::vector<CovariancePoint> out;
  for (long l : l_list) {
    const Eigen::RowVectorXd law = exact_marginal(chain, static_cast<int>(l));
    const double mean_l = law.dot(f);
    for (long k : k_list) {
      Eigen::VectorXd Pkf = f;
      for (long s = 0; s < k; ++s) Pkf = P * Pkf;
      const double joint = law.dot(f.cwiseProduct(Pkf));
      const double mean_lk = law.dot(Pkf);
      const double cov = joint - mean_l * mean_lk;
      out.push_back({l, k, std::abs(cov), A * std::pow(sd.kappa, static_cast<double>(k) * gamma / 4.0)});
    }
  }
  return out;
}

struct LpPoint {
  long n = 0;
  double ratio = 0.0;  // ||max_{k<=n} |S_k|||_p / sqrt(n)
  double stderr_ = 0.0;
};

/// Empirical L^p norm of the running maximum of |S_k| scaled by sqrt(n).
/// Partial sums use the raw values, so non-centered input shows up as growth.
inline std::vector<LpPoint> lp_maximal_check(const ChainModel& model, double p, const std::vector<long>& n_list,
                                             int reps, std::uint64_t seed, int threads = 1, int boot = 200) {
  require(p >= 1.0, "lp_maximal_check: p must be >= 1");
  require(reps >= 2, "lp_maximal_check: reps must be >= 2");
  std::vector<LpPoint> out;
  for (std::size_t a = 0; a < n_list.size(); ++a) {
    const long n = n_list[a];
    std::vector<double> powered(static_cast<std::size_t>(reps));
    parallel_for(powered.size(), threads, [&](std::size_t r) {
      const auto traj = sample_path(model, static_cast<std::size_t>(n), seed, stream_id(r, 100 + a));
      double s = 0.0, best = 0.0;
      for (double v : traj.values) {
        s += v;
        best = std::max(best, std::abs(s));
      }
      powered[r] = std::pow(best, p);
    });
    const double sn = std::sqrt(static_cast<double>(n));
    LpPoint pt;
    pt.n = n;
    pt.ratio = std::pow(stats::mean(powered), 1.0 / p) / sn;
    auto eng = make_engine(seed, kBootstrapRep, 3 + a);
    std::vector<double> resample(powered.size()), boots;
    for (int b = 0; b < boot; ++b) {
      for (auto& x : resample) x = powered[static_cast<std::size_t>(eng() % powered.size())];
      boots.push_back(std::pow(stats::mean(resample), 1.0 / p) / sn);
    }
    pt.stderr_ = std::sqrt(stats::variance(boots));
    out.push_back(pt);
  }
  return out;
}

/// Moment report for any supported model. Finite chains use the resolvent;
/// the AR and recursion models report the stationary-variance closed form.
inline MomentReport moment_report(const ChainModel& model, double delta = 0.5) {
  MomentReport rep;
  rep.delta = delta;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FiniteChain>) {
          const auto mv = exact_mean_variance(m);
          rep.mu = mv.mu;
          rep.sigma2 = mv.sigma2;
          rep.method = MomentMethod::resolvent;
          rep.series_truncation = series_truncation(spectral_decompose(m));
          rep.c2_value = mu_delta(m, delta);
        } else {
          const auto mv = closed_form_variance(m);
          rep.mu = mv.mu;
          rep.sigma2 = mv.sigma2;
          rep.method = MomentMethod::closed_form;
        }
      },
      model);
  return rep;
}

/// Monte-Carlo estimate of sup_{i<=n} ||f(X_i)||_{2+2 delta}.
inline double mc_c2_value(const ChainModel& model, double delta, long n, int reps, std::uint64_t seed) {
  const double p = 2.0 + 2.0 * delta;
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto traj = sample_path(model, static_cast<std::size_t>(n), seed, stream_id(static_cast<std::uint64_t>(r), 7));
    for (long i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += std::pow(std::abs(traj.values[static_cast<std::size_t>(i)]), p);
  }
  double best = 0.0;
  for (double a : acc) best = std::max(best, std::pow(a / reps, 1.0 / p));
  return best;
}

}  // namespace wiplab
