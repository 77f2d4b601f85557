#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace citepref {

enum class FactorCategory {
  ContentMatch,
  Completeness,
  Trustworthiness,
  Readability,
  CompetitiveStanding,
  Freshness,
};

std::string_view to_string(FactorCategory c);

/// One paired hypothesis. Variant A is always the expected winner.
struct FactorTest {
  int id;
  std::string_view name;
  FactorCategory category;
  bool counterbalanced;
  /// "A vs B" label used in effect-size tables.
  std::string_view contrast;
};

inline constexpr int kFactorCount = 18;
inline constexpr int kPositionFactorId = 15;

const std::array<FactorTest, kFactorCount>& factor_registry();

/// 1..18 in registry order.
std::vector<int> all_factor_ids();

/// Registry lookup; nullopt for ids outside 1..18.
std::optional<FactorTest> find_factor(int id);

}  // namespace citepref
