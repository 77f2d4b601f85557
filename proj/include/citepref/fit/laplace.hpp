#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citepref/util.hpp"

namespace citepref::fit {

/// One retained trial. `x` is the centered position indicator (+-0.5), absent for
/// fits without the position covariate.
struct FitTrial {
  int y = 0;
  std::optional<double> x;
  std::string scenario_key;
  std::string scenario_order_key;
};

/// Trials sharing (scenario_order_key, x) have identical linear predictors, so the
/// likelihood only needs per-cell counts. Layout is sorted by key, which makes every
/// downstream result independent of input order.
struct Cell {
  double x = 0.0;
  double n = 0.0;  // trials
  double k = 0.0;  // trials with y = 1
  int group = 0;   // scenario-order group, local to its scenario
};

struct ScenarioBlock {
  std::size_t cell_begin = 0;
  std::size_t cell_end = 0;
  int groups = 0;
};

class FitData {
 public:
  /// Throws std::invalid_argument when a scenario_order_key spans two scenarios, a key
  /// is empty, y is not 0/1, or x presence disagrees with `include_position`.
  static FitData build(std::span<const FitTrial> trials, bool include_position);

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<ScenarioBlock>& scenarios() const { return scenarios_; }
  std::size_t trial_count() const { return trials_; }
  std::size_t positive_count() const { return positives_; }
  bool include_position() const { return include_position_; }
  /// True when both x = +0.5 and x = -0.5 occur.
  bool has_both_positions() const;

 private:
  std::vector<Cell> cells_;
  std::vector<ScenarioBlock> scenarios_;
  std::size_t trials_ = 0;
  std::size_t positives_ = 0;
  bool include_position_ = false;
};

/// Natural-scale parameters. sigma_s / sigma_so are the standard deviations of the
/// scenario and scenario-order random intercepts; 0 removes the term exactly.
struct ModelParams {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double sigma_s = 0.0;
  double sigma_so = 0.0;
};

struct InnerOptions {
  int max_iterations = 60;
  /// Newton decrement threshold (half the squared decrement).
  double tolerance = 1e-13;
};

struct ScenarioContribution {
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Laplace-approximated log marginal likelihood of one scenario: the random intercepts
/// are integrated out around their conditional modes, found by penalized IRLS.
ScenarioContribution scenario_laplace(const FitData& data, std::size_t scenario, const ModelParams& params,
                                      const InnerOptions& options = {});

/// Per-scenario contributions. The OpenMP path fills the same slots as the serial one.
std::vector<ScenarioContribution> scenario_contributions_serial(const FitData& data, const ModelParams& params,
                                                                const InnerOptions& options = {});
std::vector<ScenarioContribution> scenario_contributions_openmp(const FitData& data, const ModelParams& params,
                                                                const InnerOptions& options = {});

struct ObjectiveValue {
  /// Negative approximate marginal log-likelihood, or kInnerFailurePenalty.
  double value = 0.0;
  int failed_scenarios = 0;
  int max_inner_iterations = 0;
  bool ok() const { return failed_scenarios == 0; }
};

inline constexpr double kInnerFailurePenalty = 1e30;

/// Contributions are always reduced serially in scenario order, so both execution
/// modes return bit-identical values.
ObjectiveValue laplace_objective(const ModelParams& params, const FitData& data,
                                 Execution exec = Execution::Parallel, const InnerOptions& options = {});

/// sum k*eta - n*log(1 + e^eta) with no random effects.
double logistic_log_likelihood(const FitData& data, double beta0, double beta1);

struct GlmFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Plain logistic regression by IRLS on the aggregated cells; used for starting values.
/// Estimates are clamped to +-`bound` so separated data still yields finite output.
GlmFit fit_logistic_irls(const FitData& data, double bound = 30.0, int max_iterations = 100);

}  // namespace citepref::fit
