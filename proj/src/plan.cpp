#include "citepref/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace citepref {

std::string_view to_string(Order o) { return o == Order::AB ? "AB" : "BA"; }

Order parse_order(std::string_view s) {
  if (s == "AB") return Order::AB;
  if (s == "BA") return Order::BA;
  throw std::invalid_argument("order must be AB or BA, got \"" + std::string(s) + "\"");
}

std::string make_trial_id(const std::string& scenario_id, int paraphrase_index, Order order, int replicate,
                          const std::string& model_id) {
  std::string key = scenario_id;
  key += '\x1f';
  key += std::to_string(paraphrase_index);
  key += '\x1f';
  key += to_string(order);
  key += '\x1f';
  key += std::to_string(replicate);
  key += '\x1f';
  key += model_id;
  return sha256_hex(key).substr(0, 24);
}

TrialPlan build_plan(const Corpus& corpus, const std::vector<std::string>& models, int reps, std::uint64_t seed) {
  if (corpus.empty()) throw std::invalid_argument("cannot plan an empty corpus");
  if (models.empty()) throw std::invalid_argument("at least one model is required");
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (std::set<std::string>(models.begin(), models.end()).size() != models.size()) {
    throw std::invalid_argument("model ids must be unique");
  }

  TrialPlan plan;
  plan.seed = seed;
  std::size_t expected = 0;
  for (const auto& s : corpus.scenarios()) {
    const bool counterbalanced = find_factor(s.factor_id)->counterbalanced;
    expected += s.queries.size() * (counterbalanced ? 2u : 1u);
  }
  plan.trials.reserve(expected * models.size() * static_cast<std::size_t>(reps));

  for (const auto& model : models) {
    for (const auto& s : corpus.scenarios()) {
      const bool counterbalanced = find_factor(s.factor_id)->counterbalanced;
      for (int q = 0; q < static_cast<int>(s.queries.size()); ++q) {
        for (Order order : {Order::AB, Order::BA}) {
          if (order == Order::BA && !counterbalanced) continue;
          for (int r = 1; r <= reps; ++r) {
            plan.trials.push_back({make_trial_id(s.scenario_id, q, order, r, model), s.scenario_id, q, order, r, model});
          }
        }
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::shuffle(plan.trials.begin(), plan.trials.end(), rng);

  std::set<std::string_view> ids;
  for (const auto& t : plan.trials) {
    if (!ids.insert(t.trial_id).second) throw std::logic_error("trial_id collision: " + t.trial_id);
  }
  plan.summary = summarize_plan(plan.trials, corpus);
  return plan;
}

PlanSummary summarize_plan(const std::vector<TrialSpec>& trials, const Corpus& corpus) {
  PlanSummary s;
  for (const auto& t : trials) {
    const int factor = corpus.at(t.scenario_id).factor_id;
    ++s.per_factor_model[factor][t.model_id];
    ++s.per_factor[factor];
    ++s.per_model[t.model_id];
    ++s.total;
  }
  return s;
}

std::string format_plan_summary(const PlanSummary& summary) {
  std::ostringstream out;
  char buf[160];
  out << "Factor                          ";
  for (const auto& [model, n] : summary.per_model) {
    std::snprintf(buf, sizeof buf, " %12.12s", model.c_str());
    out << buf;
  }
  out << "        Total\n";
  for (const auto& [factor, by_model] : summary.per_factor_model) {
    std::snprintf(buf, sizeof buf, "%2d %-29.29s", factor, std::string(find_factor(factor)->name).c_str());
    out << buf;
    for (const auto& [model, n] : summary.per_model) {
      auto it = by_model.find(model);
      std::snprintf(buf, sizeof buf, " %12s", group_thousands(it == by_model.end() ? 0 : it->second).c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof buf, " %12s\n", group_thousands(summary.per_factor.at(factor)).c_str());
    out << buf;
  }
  out << "Total                           ";
  for (const auto& [model, n] : summary.per_model) {
    std::snprintf(buf, sizeof buf, " %12s", group_thousands(n).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, " %12s\n", group_thousands(summary.total).c_str());
  out << buf;
  return out.str();
}

Json to_json(const TrialSpec& t) {
  return Json{{"trial_id", t.trial_id},   {"scenario_id", t.scenario_id}, {"paraphrase_index", t.paraphrase_index},
              {"order", to_string(t.order)}, {"replicate", t.replicate},   {"model_id", t.model_id}};
}

TrialSpec trial_spec_from_json(const Json& j) {
  TrialSpec t;
  t.trial_id = j.at("trial_id").get<std::string>();
  t.scenario_id = j.at("scenario_id").get<std::string>();
  t.paraphrase_index = j.at("paraphrase_index").get<int>();
  t.order = parse_order(j.at("order").get<std::string>());
  t.replicate = j.at("replicate").get<int>();
  t.model_id = j.at("model_id").get<std::string>();
  return t;
}

void save_plan(const std::vector<TrialSpec>& trials, const std::filesystem::path& path) {
  std::string out;
  for (const auto& t : trials) {
    out += to_json(t).dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<TrialSpec> load_plan(const std::filesystem::path& path) {
  std::vector<TrialSpec> trials;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      trials.push_back(trial_spec_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw JsonlError(path, line, e.what());
    }
  });
  return trials;
}

}  // namespace citepref
