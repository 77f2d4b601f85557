#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citepref/corpus.hpp"
#include "citepref/plan.hpp"
#include "citepref/trial_log.hpp"

namespace citepref {

enum class CitationResult { AFirst, BFirst, Excluded };
enum class ExclusionReason { NoUrl, ForeignFirstUrl };

std::string_view to_string(CitationResult r);
std::string_view to_string(ExclusionReason r);

struct Outcome {
  std::string trial_id;
  CitationResult result = CitationResult::Excluded;
  std::optional<ExclusionReason> exclusion_reason;
  /// Distinct canonical URLs in the answer.
  int url_count = 0;

  // Grouping context carried into the outcomes file for the fit stage.
  std::string scenario_id;
  int factor_id = 0;
  std::string model_id;
  Order order = Order::AB;
  int paraphrase_index = 0;
  int replicate = 1;

  bool operator==(const Outcome&) const = default;
};

/// Absolute http(s) URLs in reading order, trailing punctuation and unbalanced closers removed.
std::vector<std::string> find_urls(std::string_view text);

/// Scheme dropped, host lower-cased, trailing slash stripped. Path, query and fragment are significant.
/// Idempotent; accepts scheme-less input.
std::string canonicalize_url(std::string_view url);

/// First URL decides; no URL -> excluded(no_url); first URL matching neither variant -> excluded(foreign_first_url).
Outcome extract_outcome(const RawTrialResult& raw, const TrialSpec& spec, const Corpus& corpus);

/// Batch kernels over (raw, spec) pairs in the given order; OpenMP path is bit-identical.
std::vector<Outcome> extract_outcomes_serial(const std::vector<RawTrialResult>& raws,
                                             const std::vector<TrialSpec>& specs, const Corpus& corpus);
std::vector<Outcome> extract_outcomes_openmp(const std::vector<RawTrialResult>& raws,
                                             const std::vector<TrialSpec>& specs, const Corpus& corpus);

/// Outcomes for every planned trial with a logged result, in plan order. Trials missing from
/// the log are reported through `missing` (if given) rather than silently dropped.
std::vector<Outcome> extract_plan(const std::vector<TrialSpec>& plan, const std::vector<RawTrialResult>& log,
                                  const Corpus& corpus, std::vector<std::string>* missing = nullptr,
                                  Execution exec = Execution::Parallel);

struct UrlCountStats {
  bool empty = true;
  std::size_t total = 0;
  double one_url_share = 0.0;
  double multi_url_share = 0.0;
  double no_url_share = 0.0;
  double exclusion_share = 0.0;
};

UrlCountStats url_stats(const std::vector<Outcome>& outcomes);

Json to_json(const Outcome& o);
Outcome outcome_from_json(const Json& j);
void save_outcomes(const std::vector<Outcome>& outcomes, const std::filesystem::path& path);
std::vector<Outcome> load_outcomes(const std::filesystem::path& path);

}  // namespace citepref
