#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "wiplab/chains.hpp"
#include "wiplab/model_io.hpp"
#include "wiplab/stats.hpp"

using namespace wiplab;

namespace {

FiniteChain two_state(int x0 = 0) {
  Eigen::MatrixXd P(2, 2);
  P << 0.75, 0.25, 0.25, 0.75;
  Eigen::VectorXd f(2);
  f << -0.5, 0.5;
  return FiniteChain(P, f, x0);
}

}  // namespace

TEST(FiniteChain, RejectsBadRows) {
  Eigen::MatrixXd P(2, 2);
  P << 0.7, 0.2, 0.5, 0.5;
  EXPECT_THROW(FiniteChain(P, Eigen::VectorXd::Zero(2), 0), PreconditionError);
  P << 1.2, -0.2, 0.5, 0.5;
  EXPECT_THROW(FiniteChain(P, Eigen::VectorXd::Zero(2), 0), PreconditionError);
}

TEST(FiniteChain, RejectsStartOutOfRange) {
  EXPECT_THROW(FiniteChain(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 2), PreconditionError);
  EXPECT_THROW(FiniteChain(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), -1), PreconditionError);
}

TEST(SamplePath, AbsorbingIdentity) {
  Eigen::VectorXd f(2);
  f << 0.0, 1.0;
  const FiniteChain chain(Eigen::MatrixXd::Identity(2, 2), f, 1);
  const auto traj = sample_path(chain, 3, 11);
  EXPECT_EQ(traj.values, (std::vector<double>{1, 1, 1}));
}

TEST(SamplePath, IidNoiseHasMeanZero) {
  const auto traj = sample_path(ArBernoulli(0.0, 0.0), 200000, 3);
  const double se = 1.0 / std::sqrt(200000.0);
  EXPECT_NEAR(stats::mean(traj.values), 0.0, 3.0 * se);
  for (double v : traj.values) ASSERT_TRUE(v == 1.0 || v == -1.0);
}

TEST(SamplePath, TwoStateLagOneAutocorrelation) {
  const auto traj = sample_path(two_state(), 400000, 9);
  const auto& v = traj.values;
  const double m = stats::mean(v);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    c0 += (v[i] - m) * (v[i] - m);
    c1 += (v[i] - m) * (v[i + 1] - m);
  }
  // the lag-one correlation estimator has asymptotic sd about sqrt((1 + 3 rho^2)/n)
  EXPECT_NEAR(c1 / c0, 0.5, 4.0 * std::sqrt(1.75 / 400000.0));
}

TEST(SamplePath, DeterministicAndLengthExact) {
  const auto a = sample_path(two_state(), 1000, 77, 3);
  const auto b = sample_path(two_state(), 1000, 77, 3);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.size(), 1000u);
  const auto c = sample_path(two_state(), 1000, 78, 3);
  EXPECT_NE(a.values, c.values);
  EXPECT_THROW(sample_path(two_state(), 0, 1), PreconditionError);
}

TEST(SamplePath, ArValuesStayInEnvelope) {
  for (double alpha : {-0.9, -0.3, 0.5, 0.95}) {
    const double x0 = 2.5;
    const auto traj = sample_path(ArBernoulli(alpha, x0), 20000, 4);
    const double bound = std::abs(x0) + 1.0 / (1.0 - std::abs(alpha));
    for (double v : traj.values) ASSERT_LE(std::abs(v), bound + 1e-12);
  }
}

TEST(ExactMarginal, Examples) {
  const auto chain = two_state();
  const auto m0 = exact_marginal(chain, 0);
  EXPECT_EQ(m0[0], 1.0);
  EXPECT_EQ(m0[1], 0.0);
  const auto m1 = exact_marginal(chain, 1);
  EXPECT_DOUBLE_EQ(m1[0], 0.75);
  EXPECT_DOUBLE_EQ(m1[1], 0.25);
  const auto m30 = exact_marginal(chain, 30);
  EXPECT_NEAR(m30[0], 0.5, 1e-8);
  EXPECT_NEAR(m30[1], 0.5, 1e-8);
  for (int k : {0, 1, 7, 64, 1000}) EXPECT_NEAR(exact_marginal(chain, k).sum(), 1.0, 1e-12);
}

TEST(ExactMarginal, MatchesMonteCarloFrequencies) {
  Eigen::MatrixXd P(3, 3);
  P << 0.1, 0.6, 0.3, 0.5, 0.25, 0.25, 0.2, 0.2, 0.6;
  const FiniteChain chain(P, Eigen::Vector3d(0, 1, 2), 0);
  const int R = 20000;
  for (int k : {1, 2, 5}) {
    std::vector<double> counts(3, 0.0);
    for (int r = 0; r < R; ++r) {
      const auto traj = sample_path(chain, static_cast<std::size_t>(k), 5, stream_id(r, 0));
      counts[static_cast<std::size_t>(traj.values.back())] += 1.0;
    }
    const auto exact = exact_marginal(chain, k);
    for (int s = 0; s < 3; ++s) {
      const double p = exact[s];
      EXPECT_NEAR(counts[static_cast<std::size_t>(s)] / R, p, 4.0 * std::sqrt(p * (1 - p) / R)) << "k=" << k;
    }
  }
}

TEST(BlockSum, Examples) {
  Trajectory ones{std::vector<double>(8, 1.0), "finite", 0, 0};
  EXPECT_EQ(block_sum(ones, 2, 5), 4.0);
  Trajectory alt{{1, -1, 1, -1, 1, -1}, "finite", 0, 0};
  EXPECT_EQ(block_sum(alt, 1, 6), 0.0);
  for (std::size_t k = 1; k <= 6; ++k) EXPECT_EQ(block_sum(alt, k, k), alt.values[k - 1]);
  EXPECT_THROW(block_sum(alt, 0, 2), PreconditionError);
  EXPECT_THROW(block_sum(alt, 3, 2), PreconditionError);
  EXPECT_THROW(block_sum(alt, 1, 7), PreconditionError);
}

TEST(StochasticRecursion, HypothesesOfExampleAtoms) {
  const StochasticRecursion rec({{0.3, -1, 0.25}, {0.3, 1, 0.25}, {0.5, -1, 0.25}, {0.5, 1, 0.25}}, 0.0);
  const auto& h = rec.hypotheses();
  EXPECT_TRUE(h.h1);
  EXPECT_GT(h.h1_p, 2.0);
  EXPECT_TRUE(h.h2);
  EXPECT_TRUE(h.h3);  // ln 0.3 / ln 0.5 is irrational
  EXPECT_NEAR(rec.moment_a(2.0), 0.17, 1e-15);
}

TEST(StochasticRecursion, HypothesisFailures) {
  // a common fixed point x = 0 for every atom
  const StochasticRecursion fixed({{0.5, 0.0, 0.5}, {0.25, 0.0, 0.5}}, 1.0);
  EXPECT_FALSE(fixed.hypotheses().h2);
  // ln 0.25 / ln 0.5 = 2: lattice case
  EXPECT_FALSE(fixed.hypotheses().h3);
  // E a^p >= 1 for every p > 2
  const StochasticRecursion expanding({{1.5, 1.0, 0.5}, {0.9, -1.0, 0.5}}, 0.0);
  EXPECT_FALSE(expanding.hypotheses().h1);
  EXPECT_THROW(StochasticRecursion({{0.5, 1.0, 0.6}}, 0.0), PreconditionError);
  EXPECT_THROW(StochasticRecursion({{-0.5, 1.0, 1.0}}, 0.0), PreconditionError);
}

TEST(ModelIo, RoundTripsAllKinds) {
  const std::vector<ChainModel> models{two_state(1), ArBernoulli(0.5, 0.25),
                                       StochasticRecursion({{0.3, -1, 0.5}, {0.5, 1, 0.5}}, 0.0)};
  for (const auto& m : models) {
    const auto j = model_to_json(m);
    const auto back = model_from_json(j);
    EXPECT_EQ(model_to_json(back), j);
    EXPECT_EQ(sample_path(back, 50, 3).values, sample_path(m, 50, 3).values);
  }
}

TEST(ModelIo, ErrorsNameTheProblem) {
  EXPECT_THROW(model_from_json(json{{"kind", "banana"}}), PreconditionError);
  EXPECT_THROW(model_from_json(json{{"kind", "ar"}}), PreconditionError);
  try {
    load_model("/nonexistent/model.json");
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/model.json"), std::string::npos);
  }
}
