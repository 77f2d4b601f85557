#include <gtest/gtest.h>

#include <cmath>

#include "citepref/fit/laplace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace citepref;
using namespace citepref::fit;

namespace {

double trial_loglik(const std::vector<FitTrial>& data, double b0, double b1) {
  double ll = 0.0;
  for (const auto& t : data) {
    const double eta = b0 + b1 * t.x.value_or(0.0);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    ll += t.y ? std::log(p) : std::log(1.0 - p);
  }
  return ll;
}

}  // namespace

TEST(Laplace, ZeroVarianceIsLogisticLikelihood) {
  const auto data = gen::glmm_data(1, 30, 6, {0.8, 0.4, 0.6, 0.3});
  const FitData fd = FitData::build(data, true);
  for (auto [b0, b1] : {std::pair{0.0, 0.0}, {0.8, 0.4}, {-1.5, 2.0}}) {
    const ObjectiveValue v = laplace_objective({b0, b1, 0.0, 0.0}, fd);
    EXPECT_TRUE(v.ok());
    EXPECT_NEAR(v.value, -trial_loglik(data, b0, b1), 1e-9);
    EXPECT_NEAR(logistic_log_likelihood(fd, b0, b1), trial_loglik(data, b0, b1), 1e-9);
  }
}

TEST(Laplace, BalancedNullIsNLn2) {
  std::vector<FitTrial> data;
  for (int s = 0; s < 10; ++s) {
    for (int r = 0; r < 4; ++r) {
      data.push_back({r % 2, 0.5, "s" + std::to_string(s), "s" + std::to_string(s) + "|AB"});
      data.push_back({r % 2, -0.5, "s" + std::to_string(s), "s" + std::to_string(s) + "|BA"});
    }
  }
  const FitData fd = FitData::build(data, true);
  EXPECT_NEAR(laplace_objective({}, fd).value, 80.0 * std::log(2.0), 1e-12);
}

TEST(Laplace, MatchesDenseOracle) {
  const gen::GlmmTruth truths[] = {{1.0, 0.5, 0.5, 0.3}, {-0.4, 1.2, 1.1, 0.7}, {2.0, 0.0, 0.2, 1.5}};
  unsigned long seed = 10;
  for (const auto& truth : truths) {
    const auto data = gen::glmm_data(seed++, 25, 7, truth);
    const FitData fd = FitData::build(data, true);
    for (const ModelParams& p : {ModelParams{truth.beta0, truth.beta1, truth.sigma_s, truth.sigma_so},
                                 ModelParams{0.1, -0.2, 2.0, 0.05}, ModelParams{3.0, 1.0, 0.01, 3.0}}) {
      const double mine = laplace_objective(p, fd, Execution::Serial).value;
      const double ref = -oracle::laplace_loglik(data, p.beta0, p.beta1, p.sigma_s, p.sigma_so);
      EXPECT_NEAR(mine, ref, 1e-7 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(Laplace, OneSigmaZeroReducesToSingleFamily) {
  // sigma_so -> 0 should approach the sigma_so = 0 value continuously.
  const auto data = gen::glmm_data(3, 20, 5, {0.5, 0.5, 0.8, 0.0});
  const FitData fd = FitData::build(data, true);
  const double at_zero = laplace_objective({0.5, 0.5, 0.8, 0.0}, fd).value;
  const double near_zero = laplace_objective({0.5, 0.5, 0.8, 1e-6}, fd).value;
  EXPECT_NEAR(at_zero, near_zero, 1e-8);
  const double oracle_near = -oracle::laplace_loglik(data, 0.5, 0.5, 0.8, 1e-4);
  EXPECT_NEAR(laplace_objective({0.5, 0.5, 0.8, 1e-4}, fd).value, oracle_near, 1e-7);
}

TEST(Laplace, SerialAndOpenMpBitIdentical) {
  const auto data = gen::glmm_data(5, 120, 6, {0.3, 0.9, 0.7, 0.4});
  const FitData fd = FitData::build(data, true);
  const ModelParams p{0.2, 0.7, 0.9, 0.5};
  const auto a = scenario_contributions_serial(fd, p);
  const auto b = scenario_contributions_openmp(fd, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].log_likelihood, b[i].log_likelihood);
    EXPECT_EQ(a[i].iterations, b[i].iterations);
  }
  EXPECT_EQ(laplace_objective(p, fd, Execution::Serial).value, laplace_objective(p, fd, Execution::Parallel).value);
  EXPECT_EQ(laplace_objective(p, fd).value, laplace_objective(p, fd).value);
}

TEST(Laplace, InnerCapIsFlagged) {
  const auto data = gen::glmm_data(6, 10, 8, {4.0, 0.0, 2.0, 2.0});
  const FitData fd = FitData::build(data, true);
  const ObjectiveValue v = laplace_objective({4.0, 0.0, 5.0, 5.0}, fd, Execution::Serial, InnerOptions{1, 1e-30});
  EXPECT_FALSE(v.ok());
  EXPECT_EQ(v.value, kInnerFailurePenalty);
}

TEST(FitDataBuild, CellsAndValidation) {
  std::vector<FitTrial> data{{1, 0.5, "s1", "s1|AB"}, {0, 0.5, "s1", "s1|AB"}, {1, -0.5, "s1", "s1|BA"},
                             {1, 0.5, "s2", "s2|AB"}};
  const FitData fd = FitData::build(data, true);
  EXPECT_EQ(fd.trial_count(), 4u);
  EXPECT_EQ(fd.positive_count(), 3u);
  EXPECT_EQ(fd.scenarios().size(), 2u);
  EXPECT_EQ(fd.cells().size(), 3u);
  EXPECT_TRUE(fd.has_both_positions());

  auto bad = data;
  bad.push_back({1, 0.5, "s2", "s1|AB"});
  EXPECT_THROW(FitData::build(bad, true), std::invalid_argument);
  bad = data;
  bad[0].y = 2;
  EXPECT_THROW(FitData::build(bad, true), std::invalid_argument);
  bad = data;
  bad[0].scenario_key.clear();
  EXPECT_THROW(FitData::build(bad, true), std::invalid_argument);
  EXPECT_THROW(FitData::build(data, false), std::invalid_argument);
}

TEST(Irls, MatchesTrialLevelOracle) {
  for (unsigned long seed = 1; seed <= 5; ++seed) {
    const auto data = gen::glmm_data(seed, 40, 5, {0.3 * static_cast<double>(seed), -0.5, 0.0, 0.0});
    const GlmFit fit = fit_logistic_irls(FitData::build(data, true));
    const oracle::Logit ref = oracle::irls(data, true);
    ASSERT_TRUE(fit.converged && ref.converged);
    EXPECT_NEAR(fit.beta0, ref.b0, 1e-9);
    EXPECT_NEAR(fit.beta1, ref.b1, 1e-9);
  }
}

TEST(Irls, SeparatedDataIsClamped) {
  std::vector<FitTrial> data;
  for (int s = 0; s < 5; ++s) data.push_back({1, std::nullopt, "s" + std::to_string(s), "s" + std::to_string(s) + "|AB"});
  const GlmFit fit = fit_logistic_irls(FitData::build(data, false), 30.0);
  EXPECT_LE(fit.beta0, 30.0);
  EXPECT_GT(fit.beta0, 5.0);
}
