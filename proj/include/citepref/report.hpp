#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citepref/fit/glmm.hpp"
#include "citepref/util.hpp"

namespace citepref {

enum class EffectCategory { Negligible, Weak, Moderate, Strong, VeryStrong };
std::string_view to_string(EffectCategory c);

/// Category of m = max(OR, 1/OR). Boundary values fall to the lower category.
/// Throws std::invalid_argument for OR <= 0 or NaN.
EffectCategory classify_effect(double odds_ratio);

struct ReportConfig {
  double alpha = 0.05;
  double cap = 10000.0;
};

/// ">10k" style cap text for `cap`.
std::string cap_label(double cap);

/// Three significant digits below 1000 ("17.0", "0.790"), grouped integers above ("1,480").
std::string format_odds_ratio(double odds_ratio);

enum class ConsensusTier { Gatekeeper, Differentiator, NoConsensus };
std::string_view to_string(ConsensusTier t);

struct EffectCell {
  int factor_id = 0;
  std::string model_id;
  fit::GroupStatus status = fit::GroupStatus::Missing;
  std::string display;
  bool significant = false;
  bool capped = false;
  std::optional<EffectCategory> category;
  fit::FitFlags flags;
  double odds_ratio = 0.0;
  double p_value = 1.0;
};

struct FactorConsensus {
  int factor_id = 0;
  int significant_models = 0;
  int models = 0;
  ConsensusTier tier = ConsensusTier::NoConsensus;
};

struct ConsensusSummary {
  int models = 0;
  /// Significant-model count needed for a differentiator: ceil(2n/3), i.e. 4 of 6.
  int threshold = 0;
  int total_factors = 0;
  /// Factors significant in at least `threshold` models (gatekeepers included).
  int consensus_factors = 0;
  std::vector<FactorConsensus> factors;
};

/// Needs at least 2 models; otherwise tiers are meaningless and nothing is produced.
std::optional<ConsensusSummary> summarize_consensus(const std::vector<EffectCell>& cells,
                                                    const std::vector<std::string>& models,
                                                    const std::vector<int>& factors);

struct ReportDocument {
  std::vector<std::string> models;
  std::vector<int> factors;
  /// Row-major: cells[row * models.size() + column].
  std::vector<EffectCell> cells;
  std::optional<ConsensusSummary> consensus;
  std::string text;
  Json summary;

  const EffectCell& cell(std::size_t row, std::size_t column) const { return cells[row * models.size() + column]; }
};

/// One row per factor (registry order), one column per model (sorted). Pure: identical
/// inputs give byte-identical text and JSON. Throws std::invalid_argument on an empty
/// input or duplicate (factor, model) fits.
ReportDocument render_report(const std::vector<fit::GroupFit>& fits, const ReportConfig& cfg = {});

}  // namespace citepref
