#include "citepref/factors.hpp"

namespace citepref {

std::string_view to_string(FactorCategory c) {
  switch (c) {
    case FactorCategory::ContentMatch: return "ContentMatch";
    case FactorCategory::Completeness: return "Completeness";
    case FactorCategory::Trustworthiness: return "Trustworthiness";
    case FactorCategory::Readability: return "Readability";
    case FactorCategory::CompetitiveStanding: return "CompetitiveStanding";
    case FactorCategory::Freshness: return "Freshness";
  }
  return "unknown";
}

const std::array<FactorTest, kFactorCount>& factor_registry() {
  using C = FactorCategory;
  static const std::array<FactorTest, kFactorCount> registry{{
      {1, "Topic Mismatch", C::ContentMatch, true, "On-Topic vs Off-Topic"},
      {2, "Keyword Gap", C::ContentMatch, true, "Query Terms vs Missing"},
      {3, "Price Not Mentioned", C::Completeness, true, "Price vs No Price"},
      {4, "Missing Specifications", C::Completeness, true, "Specs vs No Specs"},
      {5, "No Comparisons", C::Completeness, true, "With vs No Comparisons"},
      {6, "Hedged Language", C::Trustworthiness, true, "Confident vs Hedged"},
      {7, "Claims With Evidence", C::Trustworthiness, true, "Evidence vs No Evidence"},
      {8, "Internal Contradictions", C::Trustworthiness, true, "Consistent vs Contradictory"},
      {9, "Overly Promotional", C::Trustworthiness, true, "Neutral vs Promotional"},
      {10, "Content Structure", C::Readability, true, "Structured vs Dense"},
      {11, "Scattered Information", C::Readability, true, "Organized vs Scattered"},
      {12, "Weaker Value Proposition", C::CompetitiveStanding, true, "Strong vs Weak Value Prop"},
      {13, "Less Comprehensive", C::CompetitiveStanding, true, "Deep vs Shallow Coverage"},
      {14, "Weaker Social Proof", C::CompetitiveStanding, true, "Strong vs Weak Social Proof"},
      {15, "Lower List Position", C::CompetitiveStanding, false, "Position 1 vs 2"},
      {16, "Recent vs Old Timestamp", C::Freshness, true, "Recent vs Old Timestamp"},
      {17, "No vs Old Timestamp", C::Freshness, true, "No vs Old Timestamp"},
      {18, "Recent vs No Timestamp", C::Freshness, true, "Recent vs No Timestamp"},
  }};
  return registry;
}

std::vector<int> all_factor_ids() {
  std::vector<int> ids;
  for (const auto& f : factor_registry()) ids.push_back(f.id);
  return ids;
}

std::optional<FactorTest> find_factor(int id) {
  if (id < 1 || id > kFactorCount) return std::nullopt;
  return factor_registry()[static_cast<std::size_t>(id - 1)];
}

}  // namespace citepref
