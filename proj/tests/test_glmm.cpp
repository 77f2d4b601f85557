#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "citepref/fit/glmm.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/sim_outcomes.hpp"
#include "support/temp_dir.hpp"

using namespace citepref;
using namespace citepref::fit;

namespace {

// Independent Bernoulli(p) outcomes, no random effects.
std::vector<FitTrial> bernoulli_data(unsigned long seed, int scenarios, int reps, double p) {
  return gen::glmm_data(seed, scenarios, reps, {std::log(p / (1 - p)), 0.0, 0.0, 0.0});
}

// Flip the outcome only; order coding stays put.
std::vector<FitTrial> flip_outcomes(std::vector<FitTrial> data) {
  for (auto& t : data) t.y = 1 - t.y;
  return data;
}

// Rename A <-> B everywhere: the outcome flips and AB becomes BA.
std::vector<FitTrial> swap_labels(std::vector<FitTrial> data) {
  for (auto& t : data) {
    t.y = 1 - t.y;
    if (t.x) t.x = -*t.x;
  }
  return data;
}

}  // namespace

TEST(WaldP, ZeroEstimate) { EXPECT_EQ(wald_p_value(0.0, 1.0), 1.0); }

TEST(WaldP, MatchesIntegrationOracle) {
  EXPECT_NEAR(wald_p_value(1.386, 0.3), oracle::normal_two_sided(1.386 / 0.3), 1e-9);
  EXPECT_NEAR(wald_p_value(1.386, 0.3), 3.8e-6, 0.05e-6);
  EXPECT_NEAR(wald_p_value(0.5, 0.5), oracle::normal_two_sided(1.0), 1e-10);
  EXPECT_NEAR(wald_p_value(-0.5, 0.5), 0.317, 5e-4);
  EXPECT_NEAR(wald_p_value(1.959964, 1.0), 0.05, 1e-6);
}

TEST(WaldP, DegenerateInputs) {
  EXPECT_EQ(wald_p_value(2.0, 0.0), 0.0);
  EXPECT_THROW(wald_p_value(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(wald_p_value(1.0, std::nan("")), std::invalid_argument);
}

TEST(FitFactor, BernoulliPointEight) {
  const auto data = bernoulli_data(2026, 100, 5, 0.8);
  const FitResult r = fit_factor_model(data, true, AnalysisConfig{});
  const oracle::Logit ref = oracle::irls(data, true);
  EXPECT_NEAR(r.beta0, ref.b0, 0.05);
  EXPECT_NEAR(r.beta0, std::log(4.0), 3.0 * r.se0);
  EXPECT_NEAR(r.odds_ratio, 4.0, 1.0);
  ASSERT_TRUE(r.beta1 && r.se1);
  EXPECT_NEAR(*r.beta1, 0.0, 3.0 * *r.se1);
  EXPECT_TRUE(r.significant(0.05));
  EXPECT_EQ(r.odds_ratio, std::exp(r.beta0));
  EXPECT_EQ(r.n_trials, 1000u);
  EXPECT_EQ(r.n_scenarios, 100u);
  EXPECT_FALSE(r.flags.separation);
}

TEST(FitFactor, SymmetricDataGivesZero) {
  std::vector<FitTrial> data;
  for (int s = 0; s < 12; ++s) {
    const std::string k = "s" + std::to_string(s);
    for (int r = 0; r < 6; ++r) {
      data.push_back({r % 2, 0.5, k, k + "|AB"});
      data.push_back({r % 2, -0.5, k, k + "|BA"});
    }
  }
  const FitResult r = fit_factor_model(data, true, AnalysisConfig{});
  EXPECT_NEAR(r.beta0, 0.0, 1e-6);
  EXPECT_NEAR(r.odds_ratio, 1.0, 1e-6);
  EXPECT_GT(r.p_value, 0.05);
}

TEST(FitFactor, AllOnesIsSeparated) {
  auto data = bernoulli_data(1, 20, 5, 0.5);
  for (auto& t : data) t.y = 1;
  const FitResult r = fit_factor_model(data, true, AnalysisConfig{});
  EXPECT_TRUE(r.flags.separation);
  EXPECT_GT(r.odds_ratio, 1e4);
  EXPECT_EQ(r.p_value_method, "lrt");
  EXPECT_LT(r.p_value, 0.05);
  EXPECT_FALSE(r.flags.degenerate_hessian);
}

TEST(FitFactor, GlmReductionMatchesOracle) {
  AnalysisConfig cfg;
  cfg.fix_variance_zero = true;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> b0(-2.0, 2.0), b1(-1.5, 1.5);
  for (int i = 0; i < 10; ++i) {
    const gen::GlmmTruth truth{b0(rng), b1(rng), 0.6, 0.3};
    const auto data = gen::glmm_data(1000 + i, 40 + 5 * i, 4, truth, i % 3 != 0);
    const bool with_x = i % 3 != 0;
    const FitResult r = fit_factor_model(data, with_x, cfg);
    const oracle::Logit ref = oracle::irls(data, with_x);
    EXPECT_NEAR(r.beta0, ref.b0, 1e-4) << i;
    if (with_x) EXPECT_NEAR(*r.beta1, ref.b1, 1e-4) << i;
    EXPECT_EQ(r.sigma_s, 0.0);
    EXPECT_EQ(r.sigma_so, 0.0);
  }
}

TEST(FitFactor, LabelSwapAntisymmetry) {
  for (unsigned long seed : {4ul, 5ul, 6ul}) {
    const auto data = gen::glmm_data(seed, 40, 5, {0.7, 0.6, 0.6, 0.4});
    const FitResult a = fit_factor_model(data, true, AnalysisConfig{});
    const FitResult b = fit_factor_model(flip_outcomes(data), true, AnalysisConfig{});
    EXPECT_NEAR(a.beta0, -b.beta0, 1e-6) << seed;
    EXPECT_NEAR(*a.beta1, -*b.beta1, 1e-6) << seed;
    EXPECT_NEAR(a.loglik, b.loglik, 1e-8) << seed;
  }
}

TEST(FitFactor, FullRelabelKeepsPositionEffect) {
  // Renaming the sources turns an A preference into a B preference, but the
  // first listed source is still first, so the order coefficient is unchanged.
  for (unsigned long seed : {4ul, 5ul, 6ul}) {
    const auto data = gen::glmm_data(seed, 40, 5, {0.7, 0.6, 0.6, 0.4});
    const FitResult a = fit_factor_model(data, true, AnalysisConfig{});
    const FitResult b = fit_factor_model(swap_labels(data), true, AnalysisConfig{});
    EXPECT_NEAR(a.beta0, -b.beta0, 1e-6) << seed;
    EXPECT_NEAR(*a.beta1, *b.beta1, 1e-6) << seed;
  }
}

TEST(FitFactor, OptimumBeatsZeroPoint) {
  for (unsigned long seed = 20; seed < 25; ++seed) {
    const auto data = gen::glmm_data(seed, 30, 5, {0.2, -0.3, 1.0, 0.5});
    const FitResult r = fit_factor_model(data, true, AnalysisConfig{});
    const double zero = -laplace_objective({}, FitData::build(data, true)).value;
    EXPECT_GE(r.loglik, zero) << seed;
    EXPECT_GE(r.sigma_s, 0.0);
    EXPECT_GE(r.sigma_so, 0.0);
  }
}

TEST(FitFactor, PreconditionsThrow) {
  auto data = bernoulli_data(3, 1, 5, 0.6);
  EXPECT_THROW(fit_factor_model(data, true, AnalysisConfig{}), std::invalid_argument);
  data = bernoulli_data(3, 5, 5, 0.6);
  std::erase_if(data, [](const FitTrial& t) { return *t.x < 0; });
  EXPECT_THROW(fit_factor_model(data, true, AnalysisConfig{}), std::invalid_argument);
  AnalysisConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(FitFactor, DeterministicAcrossExecution) {
  const auto data = gen::glmm_data(8, 60, 5, {0.4, 0.8, 0.5, 0.3});
  const FitResult a = fit_factor_model(data, true, AnalysisConfig{}, Execution::Serial);
  const FitResult b = fit_factor_model(data, true, AnalysisConfig{}, Execution::Parallel);
  EXPECT_EQ(a.beta0, b.beta0);
  EXPECT_EQ(a.se0, b.se0);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

namespace {

std::vector<Outcome> all_factor_outcomes(const std::vector<std::string>& models) {
  SimConfig sim;
  sim.seed = 12;
  sim.gamma1 = 0.5;
  sim.factor_gamma0 = {{3, 1.5}, {4, 2.0}};
  return gen::simulated_outcomes(synth_corpus(SynthConfig{all_factor_ids(), 4}, 2), models, 2, sim, 3);
}

void expect_same(const std::vector<GroupFit>& a, const std::vector<GroupFit>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump()) << i;
}

}  // namespace

TEST(FitAll, EighteenFactorsOnePositionFree) {
  const auto outcomes = all_factor_outcomes({"m"});
  const auto fits = fit_all(outcomes, AnalysisConfig{});
  ASSERT_EQ(fits.size(), 18u);
  int without_position = 0;
  for (const auto& g : fits) {
    EXPECT_EQ(g.status, GroupStatus::Fitted) << g.key.factor_id << " " << g.message;
    if (!g.include_position) {
      ++without_position;
      EXPECT_EQ(g.key.factor_id, 15);
      EXPECT_FALSE(g.fit->beta1);
    }
    EXPECT_EQ(g.retained + g.excluded, g.key.factor_id == 15 ? 12u * 2u : 24u * 2u);
  }
  EXPECT_EQ(without_position, 1);
  EXPECT_TRUE(std::is_sorted(fits.begin(), fits.end(), [](auto& x, auto& y) { return x.key < y.key; }));
}

TEST(FitAll, MissingAndFailedGroups) {
  auto outcomes = all_factor_outcomes({"m"});
  std::erase_if(outcomes, [](const Outcome& o) { return o.factor_id == 2; });
  // Factor 5 with a single scenario cannot be fitted.
  std::erase_if(outcomes, [](const Outcome& o) { return o.factor_id == 5 && o.scenario_id != "f05-s000"; });
  const std::vector<GroupKey> expected{{2, "m"}, {7, "other"}};
  const auto fits = fit_all(outcomes, AnalysisConfig{}, Execution::Parallel, expected);
  ASSERT_EQ(fits.size(), 19u);
  auto find = [&](int f, const std::string& m) {
    return *std::find_if(fits.begin(), fits.end(), [&](auto& g) { return g.key == GroupKey{f, m}; });
  };
  EXPECT_EQ(find(2, "m").status, GroupStatus::Missing);
  EXPECT_EQ(find(7, "other").status, GroupStatus::Missing);
  EXPECT_EQ(find(5, "m").status, GroupStatus::Failed);
  EXPECT_FALSE(find(5, "m").message.empty());
  EXPECT_EQ(find(4, "m").status, GroupStatus::Fitted);
}

TEST(FitAll, ShuffledInputAndExecutionModeAgree) {
  const auto outcomes = all_factor_outcomes({"m1", "m2"});
  auto shuffled = outcomes;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(9));
  const auto serial = fit_all_serial(outcomes, AnalysisConfig{});
  expect_same(serial, fit_all_openmp(outcomes, AnalysisConfig{}));
  expect_same(serial, fit_all_serial(shuffled, AnalysisConfig{}));
  EXPECT_EQ(serial.size(), 36u);
}

TEST(FitAll, JsonRoundTrip) {
  testing_support::TempDir dir("fits");
  auto outcomes = all_factor_outcomes({"m"});
  std::erase_if(outcomes, [](const Outcome& o) { return o.factor_id == 9; });
  const std::vector<GroupKey> expected{{9, "m"}};
  const auto fits = fit_all(outcomes, AnalysisConfig{}, Execution::Parallel, expected);
  save_fits(fits, dir / "fits.jsonl");
  const auto back = load_fits(dir / "fits.jsonl");
  expect_same(fits, back);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (!fits[i].fit) continue;
    EXPECT_EQ(back[i].fit->beta0, fits[i].fit->beta0);
    EXPECT_EQ(back[i].fit->odds_ratio, std::exp(back[i].fit->beta0));
    EXPECT_EQ(back[i].fit->flags, fits[i].fit->flags);
  }
}

TEST(FitInputs, CodingRules) {
  std::vector<Outcome> v(4);
  v[0] = {"t1", CitationResult::AFirst, {}, 1, "s1", 3, "m", Order::AB, 0, 1};
  v[1] = {"t2", CitationResult::BFirst, {}, 1, "s1", 3, "m", Order::BA, 0, 1};
  v[2] = {"t3", CitationResult::Excluded, ExclusionReason::NoUrl, 0, "s1", 3, "m", Order::BA, 0, 1};
  v[3] = {"t4", CitationResult::AFirst, {}, 1, "s2", 15, "m", Order::AB, 0, 1};
  const auto f3 = fit_inputs(v, {3, "m"});
  ASSERT_EQ(f3.size(), 2u);
  EXPECT_EQ(f3[0].y, 1);
  EXPECT_EQ(f3[0].x, 0.5);
  EXPECT_EQ(f3[1].y, 0);
  EXPECT_EQ(f3[1].x, -0.5);
  EXPECT_NE(f3[0].scenario_order_key, f3[1].scenario_order_key);
  EXPECT_EQ(f3[0].scenario_key, f3[1].scenario_key);
  const auto f15 = fit_inputs(v, {15, "m"});
  ASSERT_EQ(f15.size(), 1u);
  EXPECT_FALSE(f15[0].x);
}
