#pragma once

// Monte-Carlo rate experiments: distributional distance of the running
// maximum, coupling-error curves across N and their log-log fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wiplab/chains.hpp"
#include "wiplab/coupling.hpp"
#include "wiplab/error.hpp"
#include "wiplab/parallel.hpp"
#include "wiplab/partition.hpp"
#include "wiplab/rng.hpp"
#include "wiplab/stats.hpp"

namespace wiplab {

struct KsResult {
  double distance = 0.0;
  bool degenerate = false;  // all replications gave the same maximum
};

/// Kolmogorov distance between the law of N^{-1/2} max_{1<=k<=N} sum_{i<=k}
/// (f(X_i) - mu) over `reps` replications and x -> max(0, 2 Phi(x/sigma) - 1).
inline KsResult max_stat_ks(const ChainModel& model, double mu, double sigma, std::int64_t N, int reps,
                            std::uint64_t seed, int threads = 1) {
  require(sigma > 0.0, "max_stat_ks: sigma must be > 0");
  require(reps >= 100, "max_stat_ks: reps must be >= 100");
  require(N >= 1, "max_stat_ks: N must be >= 1");
  std::vector<double> maxima(static_cast<std::size_t>(reps));
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  parallel_for(maxima.size(), threads, [&](std::size_t r) {
    const auto traj = sample_path(model, static_cast<std::size_t>(N), seed, stream_id(r, 0));
    double s = 0.0, best = -std::numeric_limits<double>::infinity();
    for (double v : traj.values) {
      s += v - mu;
      best = std::max(best, s);
    }
    maxima[r] = best * scale;
  });
  KsResult res;
  res.degenerate = std::all_of(maxima.begin(), maxima.end(), [&](double v) { return v == maxima.front(); });
  res.distance = stats::ks_distance(maxima, [sigma](double x) {
    return x <= 0.0 ? 0.0 : 2.0 * stats::normal_cdf(x / sigma) - 1.0;
  });
  return res;
}

struct RatePoint {
  std::int64_t N = 0;
  double statistic = 0.0;  // median coupling error
  double stderr_ = 0.0;    // bootstrap standard error of the median
  std::vector<double> errors;  // per-replication coupling errors, by replication index
};

struct RateFit {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double target = 0.0;  // -theoretical_rate(alpha)
  double alpha = 0.0;
  double beta = 0.0;
  int bootstrap = 0;
};

struct CurveSettings {
  double epsilon = 0.05;
  int k0 = 9;
  std::optional<double> beta;  // defaults to optimal_beta(alpha)
  int bootstrap = 1000;
  double ci_level = 0.95;
  int threads = 1;
  bool smoothing = false;
  double epsilon0 = 1.0;
};

/// Median coupling error for each N, a least-squares fit of log(median) on
/// log N, and a percentile bootstrap CI for the slope obtained by resampling
/// replications independently at every N.
inline RateFit error_curve(const ChainModel& model, double mu, double sigma, double alpha,
                           const std::vector<std::int64_t>& N_list, int reps, int reps_for_cdf, std::uint64_t seed,
                           const CurveSettings& cs = {}) {
  if (N_list.size() < 4) throw PreconditionError("error_curve: need at least 4 usable N values");
  require(std::is_sorted(N_list.begin(), N_list.end()), "error_curve: N_list must be increasing");
  require(reps >= 2, "error_curve: reps must be >= 2");
  require(cs.bootstrap >= 500, "error_curve: at least 500 bootstrap resamples are required");
  RateFit fit;
  fit.alpha = alpha;
  fit.beta = cs.beta.value_or(optimal_beta(alpha));
  fit.target = -theoretical_rate(alpha);
  fit.bootstrap = cs.bootstrap;

  CouplingOptions opts;
  opts.reps_for_cdf = reps_for_cdf;
  opts.smoothing = cs.smoothing;
  opts.epsilon0 = cs.epsilon0;
  for (std::size_t a = 0; a < N_list.size(); ++a) {
    const BlockPartition part(N_list[a], cs.epsilon, fit.beta, cs.k0);
    const CouplingPlan plan(model, mu, sigma, part, opts);
    RatePoint pt;
    pt.N = N_list[a];
    pt.errors.resize(static_cast<std::size_t>(reps));
    const std::uint64_t point_seed = splitmix64(seed ^ static_cast<std::uint64_t>(N_list[a]));
    parallel_for(pt.errors.size(), cs.threads, [&](std::size_t r) {
      pt.errors[r] = coupling_error(plan.build(point_seed, r));
    });
    pt.statistic = stats::median(pt.errors);
    fit.points.push_back(std::move(pt));
  }

  auto fit_line = [&](const std::vector<double>& medians) {
    std::vector<double> x, y;
    for (std::size_t a = 0; a < medians.size(); ++a) {
      x.push_back(std::log(static_cast<double>(fit.points[a].N)));
      y.push_back(std::log(medians[a]));
    }
    return stats::least_squares(x, y);
  };
  std::vector<double> medians;
  for (const auto& p : fit.points) medians.push_back(p.statistic);
  for (double m : medians) {
    if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("error_curve: non-positive or non-finite median");
  }
  const auto lf = fit_line(medians);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;

  auto eng = make_engine(seed, kBootstrapRep, 10);
  std::vector<double> slopes;
  std::vector<std::vector<double>> boot_medians(fit.points.size());
  std::vector<double> resample(static_cast<std::size_t>(reps));
  for (int b = 0; b < cs.bootstrap; ++b) {
    std::vector<double> meds;
    for (std::size_t a = 0; a < fit.points.size(); ++a) {
      const auto& errs = fit.points[a].errors;
      for (auto& v : resample) v = errs[static_cast<std::size_t>(eng() % errs.size())];
      meds.push_back(stats::median(resample));
      boot_medians[a].push_back(meds.back());
    }
    slopes.push_back(fit_line(meds).slope);
  }
  for (std::size_t a = 0; a < fit.points.size(); ++a) fit.points[a].stderr_ = std::sqrt(stats::variance(boot_medians[a]));
  const double tail = 0.5 * (1.0 - cs.ci_level);
  fit.slope_lo = std::min(fit.slope, stats::quantile(slopes, tail));
  fit.slope_hi = std::max(fit.slope, stats::quantile(slopes, 1.0 - tail));
  return fit;
}

/// True when every median is below the previous one plus twice the larger of
/// the two bootstrap standard errors.
inline bool medians_decreasing(const RateFit& fit) {
  for (std::size_t a = 1; a < fit.points.size(); ++a) {
    const double se = std::max(fit.points[a].stderr_, fit.points[a - 1].stderr_);
    if (!(fit.points[a].statistic < fit.points[a - 1].statistic + 2.0 * se)) return false;
  }
  return true;
}

inline constexpr const char* kConstantStatement =
    "The constant C0 of the rate bound is not validated; slopes are compared with the exponent only.";
inline constexpr const char* kSurrogateStatement =
    "Gaussian side coupled to the sampled path through per-island quantile coupling; medians of the coupling "
    "error are fitted.";

struct RateReport {
  nlohmann::json json;
  std::string csv;
};

/// Comparison table of empirical slopes against rho*(alpha), beta*(alpha) and
/// the independent-case rate alpha / (3 + 2 alpha).
inline RateReport report(const std::vector<RateFit>& fits) {
  RateReport out;
  std::ostringstream csv;
  csv.precision(17);
  csv << "alpha,rho_star,beta_star,independent_rate,loss,beta,slope,slope_lo,slope_hi,target\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& f : fits) {
    const double rho = theoretical_rate(f.alpha);
    const double ind = independent_rate(f.alpha);
    const double bstar = optimal_beta(f.alpha);
    csv << f.alpha << ',' << rho << ',' << bstar << ',' << ind << ',' << ind - rho << ',' << f.beta << ','
        << f.slope << ',' << f.slope_lo << ',' << f.slope_hi << ',' << f.target << '\n';
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : f.points) pts.push_back({{"N", p.N}, {"median_error", p.statistic}, {"stderr", p.stderr_}});
    rows.push_back({{"alpha", f.alpha},
                    {"rho_star", rho},
                    {"beta_star", bstar},
                    {"independent_rate", ind},
                    {"loss", ind - rho},
                    {"beta", f.beta},
                    {"slope", f.slope},
                    {"intercept", f.intercept},
                    {"slope_ci", {f.slope_lo, f.slope_hi}},
                    {"bootstrap_resamples", f.bootstrap},
                    {"target", f.target},
                    {"points", pts}});
  }
  out.csv = csv.str();
  out.json = {{"rows", rows}, {"constant_statement", kConstantStatement}, {"method", kSurrogateStatement}};
  return out;
}

}  // namespace wiplab
