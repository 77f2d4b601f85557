#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "citepref/corpus.hpp"

namespace citepref {

enum class Order { AB, BA };

std::string_view to_string(Order o);
Order parse_order(std::string_view s);

/// Centered position indicator: +0.5 when variant A is listed first.
inline double position_indicator(Order o) { return o == Order::AB ? 0.5 : -0.5; }

struct TrialSpec {
  std::string trial_id;
  std::string scenario_id;
  int paraphrase_index = 0;
  Order order = Order::AB;
  int replicate = 1;
  std::string model_id;

  bool operator==(const TrialSpec&) const = default;
};

/// Content hash of the remaining TrialSpec fields (idempotency key).
std::string make_trial_id(const std::string& scenario_id, int paraphrase_index, Order order, int replicate,
                          const std::string& model_id);

struct PlanSummary {
  std::map<int, std::map<std::string, std::size_t>> per_factor_model;
  std::map<int, std::size_t> per_factor;
  std::map<std::string, std::size_t> per_model;
  std::size_t total = 0;

  bool operator==(const PlanSummary&) const = default;
};

struct TrialPlan {
  std::vector<TrialSpec> trials;
  std::uint64_t seed = 0;
  PlanSummary summary;
};

/// Throws std::invalid_argument for an empty corpus, empty model list or reps < 1.
TrialPlan build_plan(const Corpus& corpus, const std::vector<std::string>& models, int reps, std::uint64_t seed);

PlanSummary summarize_plan(const std::vector<TrialSpec>& trials, const Corpus& corpus);

/// Fixed-width table: one row per factor, one column per model, plus totals.
std::string format_plan_summary(const PlanSummary& summary);

Json to_json(const TrialSpec& t);
TrialSpec trial_spec_from_json(const Json& j);

void save_plan(const std::vector<TrialSpec>& trials, const std::filesystem::path& path);
std::vector<TrialSpec> load_plan(const std::filesystem::path& path);

}  // namespace citepref
