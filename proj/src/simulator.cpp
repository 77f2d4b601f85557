#include "citepref/simulator.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace citepref {

namespace {

double standard_normal(std::string_view key) {
  std::mt19937_64 rng(sha256_u64(key));
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

constexpr std::array<const char*, 4> kReasons{{
    "its balance of features and price",
    "reliable everyday performance",
    "the detail in its hands-on testing",
    "a clear summary of strengths and trade-offs",
}};

constexpr const char* kForeignUrl = "https://www.shopping-roundup.example/best-picks";

}  // namespace

double SimConfig::gamma0_for(int factor_id) const {
  auto it = factor_gamma0.find(factor_id);
  return it == factor_gamma0.end() ? gamma0 : it->second;
}

void SimConfig::validate() const {
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(no_url_rate) || !rate_ok(foreign_url_rate) || !rate_ok(multi_url_rate)) {
    throw std::invalid_argument("simulator rates must lie in [0, 1]");
  }
  if (no_url_rate + foreign_url_rate > 1.0) {
    throw std::invalid_argument("no_url_rate + foreign_url_rate must be <= 1");
  }
  if (no_url_rate + multi_url_rate > 1.0) {
    throw std::invalid_argument("no_url_rate + multi_url_rate must be <= 1");
  }
  if (!(sigma_s >= 0.0) || !(sigma_so >= 0.0)) throw std::invalid_argument("simulator sigmas must be >= 0");
  if (std::isnan(gamma0) || std::isnan(gamma1)) throw std::invalid_argument("simulator gammas must not be NaN");
}

double SimState::scenario_effect(const std::string& model_id, const std::string& scenario_id) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(model_id, scenario_id);
  auto it = u_.find(key);
  if (it == u_.end()) {
    const double z = standard_normal("sim-u|" + std::to_string(config_.seed) + "|" + model_id + "|" + scenario_id);
    it = u_.emplace(std::move(key), z).first;
  }
  return config_.sigma_s * it->second;
}

double SimState::scenario_order_effect(const std::string& model_id, const std::string& scenario_id, Order order) {
  std::lock_guard lock(mu_);
  auto key = std::make_tuple(model_id, scenario_id, order);
  auto it = v_.find(key);
  if (it == v_.end()) {
    const double z = standard_normal("sim-v|" + std::to_string(config_.seed) + "|" + model_id + "|" + scenario_id +
                                     "|" + std::string(to_string(order)));
    it = v_.emplace(std::move(key), z).first;
  }
  return config_.sigma_so * it->second;
}

double sim_a_first_probability(const TrialContext& context, const SimConfig& config, SimState& state) {
  const TrialSpec& t = context.spec;
  const double eta = config.gamma0_for(context.factor_id) + config.gamma1 * position_indicator(t.order) +
                     state.scenario_effect(t.model_id, t.scenario_id) +
                     state.scenario_order_effect(t.model_id, t.scenario_id, t.order);
  return logistic(eta);
}

namespace {

// "Quillo Core 5 Review" -> "Quillo Core 5"
std::string product_name(const std::string& title) {
  constexpr std::string_view suffix = " Review";
  return title.ends_with(suffix) ? title.substr(0, title.size() - suffix.size()) : title;
}

}  // namespace

std::string simulate_answer(const TrialContext& context, const MessageSequence& messages, const SimConfig& config,
                            SimState& state) {
  const TrialSpec& t = context.spec;
  const double p_a = sim_a_first_probability(context, config, state);
  std::mt19937_64 rng(sha256_u64("sim-trial|" + std::to_string(config.seed) + "|" + t.trial_id));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const bool a_first = u(rng) < p_a;
  const double mode_draw = u(rng);
  const bool no_url = mode_draw < config.no_url_rate;
  const double rest = 1.0 - config.no_url_rate;
  const bool foreign = !no_url && rest > 0.0 && u(rng) * rest < config.foreign_url_rate;
  const bool multi = !no_url && rest > 0.0 && u(rng) * rest < config.multi_url_rate;
  const std::size_t style = static_cast<std::size_t>(rng() % 3);
  const char* reason = kReasons[static_cast<std::size_t>(rng() % kReasons.size())];

  // tool_response[0] is A iff order == AB.
  const bool winner_listed_first = a_first == (t.order == Order::AB);
  const SearchResult& winner = messages.tool_response[winner_listed_first ? 0 : 1];
  const SearchResult& other = messages.tool_response[winner_listed_first ? 1 : 0];

  std::string answer;
  if (no_url) {
    answer = "Based on the search results, the " + product_name(winner.title) + " is a strong choice. Reviewers point to " +
             reason + " [1]. It should suit most buyers.";
    return answer;
  }
  if (foreign) {
    answer = std::string("According to ") + kForeignUrl + ", the " + product_name(winner.title) + " is worth a look for " + reason + ".";
    if (multi) answer += " The full review is at " + winner.url + ".";
    return answer;
  }
  switch (style) {
    case 0:
      answer = "Based on the search results, the top pick is the " + product_name(winner.title) + ". According to " + winner.url +
               ", it stands out for " + reason + ".";
      break;
    case 1:
      answer = "I'd recommend the " + product_name(winner.title) + " (" + winner.url + "). The review highlights " + reason +
               ", which makes it the stronger choice.";
      break;
    default:
      answer = "The best option right now appears to be the " + product_name(winner.title) + ": " + winner.url +
               "\nReviewers point to " + reason + ".";
      break;
  }
  if (multi) {
    answer += " Another perspective is available at " + other.url + ", which reviews the " + product_name(other.title) + ".";
  }
  return answer;
}

std::vector<std::string> simulate_answers_serial(const std::vector<TrialContext>& contexts,
                                                 const std::vector<MessageSequence>& messages,
                                                 const SimConfig& config) {
  if (contexts.size() != messages.size()) throw std::invalid_argument("contexts/messages size mismatch");
  SimState state(config);
  std::vector<std::string> out(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) out[i] = simulate_answer(contexts[i], messages[i], config, state);
  return out;
}

std::vector<std::string> simulate_answers_openmp(const std::vector<TrialContext>& contexts,
                                                 const std::vector<MessageSequence>& messages,
                                                 const SimConfig& config) {
  if (contexts.size() != messages.size()) throw std::invalid_argument("contexts/messages size mismatch");
  SimState state(config);
  std::vector<std::string> out(contexts.size());
  const auto n = static_cast<std::ptrdiff_t>(contexts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = simulate_answer(contexts[k], messages[k], config, state);
  }
  return out;
}

SimulatorBackend::SimulatorBackend(std::string id, SimConfig config)
    : id_(std::move(id)), config_(std::move(config)), state_(config_) {
  config_.validate();
}

Completion SimulatorBackend::complete(const MessageSequence& messages, const TrialContext& context) {
  return {simulate_answer(context, messages, config_, state_), "simulator seed=" + std::to_string(config_.seed)};
}

}  // namespace citepref
