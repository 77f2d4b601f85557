#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citepref/factors.hpp"
#include "citepref/fit/glmm.hpp"
#include "citepref/util.hpp"

namespace citepref {

enum class Route { BrandIsTop, FixContent, ImproveSeo };
std::string_view to_string(Route r);

enum class AuditCategory { Trust, Completeness, Relevance, Context };
std::string_view to_string(AuditCategory c);

struct BrandProfile {
  std::vector<std::string> names;
  /// Bare domains ("zephyr.example"); subdomains match.
  std::vector<std::string> domains;

  /// Throws std::invalid_argument when both lists are empty.
  void validate() const;
};

struct CalendarDate {
  int year = 0;
  int month = 1;
  int day = 1;
  auto operator<=>(const CalendarDate&) const = default;
};

/// "YYYY-MM-DD"; nullopt when malformed.
std::optional<CalendarDate> parse_iso_date(std::string_view s);

/// Dates written in the text: ISO, "March 12, 2026", "12 March 2026", "March 2026".
std::vector<CalendarDate> find_dates(std::string_view text);

/// Whole months from `from` to `to` (negative when `from` is later).
int months_between(const CalendarDate& from, const CalendarDate& to);

struct PageContent {
  std::string text;
  std::string url;
  std::optional<CalendarDate> published;
  /// 1-based rank of the page among the answer's cited URLs, when known.
  std::optional<int> citation_rank;
};

struct AuditSettings {
  CalendarDate reference_date{2026, 1, 1};
  int freshness_months = 18;
  double topic_mismatch_coverage = 0.2;
  double keyword_gap_coverage = 0.75;
  double hedge_density = 0.02;
  std::vector<std::string> hedge_lexicon = {"might",     "possibly", "could",      "may",     "perhaps",
                                            "probably",  "likely",   "seems",      "appears", "somewhat",
                                            "arguably",  "potentially", "maybe",   "not sure", "we think",
                                            "it is possible"};
  int min_spec_pairs = 3;
  int min_words = 250;
  int min_sections = 3;
  double low_confidence = 0.7;
  /// Priority weight per factor id; higher is fixed first.
  std::map<int, double> weights;
};

/// The 11 factors significant in at least four of six models, in detector order.
const std::vector<int>& consensus_factor_ids();
AuditCategory audit_category(int factor_id);

/// ln of the cross-model median odds ratio per consensus factor, capped cells counted as
/// the cap.
std::map<int, double> default_priority_weights();

/// Same rule over fitted results (median over fitted models, capped at `cap`); factors
/// without a fit keep their default weight.
std::map<int, double> priority_weights_from_fits(const std::vector<fit::GroupFit>& fits, double cap = 10000.0);

struct Finding {
  int factor_id = 0;
  std::string factor;
  AuditCategory category = AuditCategory::Trust;
  std::string evidence;
  /// Detector-specific severity in [0, 1].
  double score = 0.0;
  double weight = 0.0;
};

/// Runs one detector. Throws std::invalid_argument for a factor outside the consensus set.
std::optional<Finding> detect_factor(int factor_id, const PageContent& page, std::string_view query,
                                     const AuditSettings& settings = {});

struct TopPick {
  bool brand_is_top = false;
  std::string sentence;
  double confidence = 0.0;
};

/// The first ranked list item or, failing that, the first sentence with a recommendation
/// cue decides; answers without either fall back to the opening sentence at low confidence.
TopPick detect_top_pick(std::string_view answer, const BrandProfile& brand);

struct AuditReport {
  Route route = Route::ImproveSeo;
  bool cited = false;
  std::optional<int> citation_rank;
  std::vector<std::string> cited_urls;
  TopPick top_pick;
  bool low_confidence = false;
  std::vector<Finding> weak_factors;
  std::vector<std::string> recommendations;
};

/// Throws std::invalid_argument on an empty answer or page, or an empty brand profile.
AuditReport audit(std::string_view answer, const BrandProfile& brand, const PageContent& page, std::string_view query,
                  const AuditSettings& settings = {});

Json to_json(const AuditReport& r);
std::string format_audit(const AuditReport& r);

}  // namespace citepref
