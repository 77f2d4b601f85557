#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citepref/extract.hpp"
#include "citepref/fit/laplace.hpp"
#include "citepref/fit/trust_region.hpp"
#include "citepref/util.hpp"

namespace citepref::fit {

struct AnalysisConfig {
  double alpha = 0.05;
  double reporting_cap = 10000.0;
  TrustRegionOptions optimizer;
  InnerOptions inner;
  /// Constrain both random-intercept SDs to 0 (plain logistic regression).
  bool fix_variance_zero = false;
  /// Start beta from a plain logistic fit; otherwise from 0.
  bool glm_start = true;
  double sigma_start = 0.5;
  double beta_bound = 30.0;
  double sigma_upper = 20.0;
  double singular_threshold = 1e-6;
  /// Central-difference step for the Hessian.
  double hessian_step = 1e-3;

  /// Throws std::invalid_argument unless 0 < alpha < 1, cap > 1 and the bounds are sane.
  void validate() const;
};

struct FitFlags {
  bool separation = false;
  bool degenerate_hessian = false;
  bool singular_fit = false;
  bool no_convergence = false;

  bool any() const { return separation || degenerate_hessian || singular_fit || no_convergence; }
  std::vector<std::string> names() const;
  bool operator==(const FitFlags&) const = default;
};

struct FitResult {
  double beta0 = 0.0;
  std::optional<double> beta1;
  double se0 = 0.0;
  std::optional<double> se1;
  double sigma_s = 0.0;
  double sigma_so = 0.0;
  double loglik = 0.0;
  /// Test of beta0 = 0. Wald, or a likelihood-ratio test when separation is flagged.
  double p_value = 1.0;
  std::string p_value_method = "wald";
  std::optional<double> p_value_position;
  double odds_ratio = 1.0;
  FitFlags flags;
  int evaluations = 0;
  std::size_t n_trials = 0;
  std::size_t n_scenarios = 0;

  bool significant(double alpha) const { return p_value < alpha; }
};

/// Two-sided normal tail probability of |estimate / se|. se = 0 returns 0 (the caller
/// flags the Hessian); se < 0 or non-finite input throws std::invalid_argument.
double wald_p_value(double estimate, double se);

/// Fits logit P(y=1) = b0 [+ b1 x] + u_s + v_so by Laplace maximum likelihood.
/// Throws std::invalid_argument when the data has fewer than 2 scenarios, or when
/// include_position is set and only one x value occurs.
FitResult fit_factor_model(std::span<const FitTrial> data, bool include_position, const AnalysisConfig& cfg,
                           Execution exec = Execution::Parallel);

enum class GroupStatus { Fitted, Missing, Failed };
std::string_view to_string(GroupStatus s);

struct GroupKey {
  int factor_id = 0;
  std::string model_id;
  auto operator<=>(const GroupKey&) const = default;
};

struct GroupFit {
  GroupKey key;
  GroupStatus status = GroupStatus::Missing;
  bool include_position = true;
  std::size_t retained = 0;
  std::size_t excluded = 0;
  std::optional<FitResult> fit;
  std::string message;
};

/// Retained trials of one (factor, model) group: y = 1 when A is cited first, x = +0.5
/// for AB order (absent for the position factor), grouping keys scenario and
/// scenario|order.
std::vector<FitTrial> fit_inputs(std::span<const Outcome> outcomes, const GroupKey& key);

/// One fit per (factor, model) present in `outcomes`, plus any `expected` group that has
/// no outcomes (reported Missing). Output is sorted by key. A group that cannot be fitted
/// is reported Failed without affecting the others.
std::vector<GroupFit> fit_all_serial(std::span<const Outcome> outcomes, const AnalysisConfig& cfg,
                                     std::span<const GroupKey> expected = {});
std::vector<GroupFit> fit_all_openmp(std::span<const Outcome> outcomes, const AnalysisConfig& cfg,
                                     std::span<const GroupKey> expected = {});
std::vector<GroupFit> fit_all(std::span<const Outcome> outcomes, const AnalysisConfig& cfg,
                              Execution exec = Execution::Parallel, std::span<const GroupKey> expected = {});

Json to_json(const GroupFit& g);
GroupFit group_fit_from_json(const Json& j);
void save_fits(const std::vector<GroupFit>& fits, const std::filesystem::path& path);
std::vector<GroupFit> load_fits(const std::filesystem::path& path);

}  // namespace citepref::fit
