#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "citepref/backend.hpp"
#include "citepref/util.hpp"

namespace citepref {

/// Data-generating process for the seeded answer simulator:
/// logit P(A cited first) = gamma0 + gamma1 * X + u_s + v_so, X = +-0.5.
struct SimConfig {
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double sigma_s = 0.0;
  double sigma_so = 0.0;
  /// Defaults reproduce the observed mix: 86.4% one URL, 10.5% two or more, 3.1% none.
  double no_url_rate = 0.031;
  double foreign_url_rate = 0.003;
  double multi_url_rate = 0.105;
  std::uint64_t seed = 0;
  /// Per-factor overrides of gamma0.
  std::map<int, double> factor_gamma0;

  double gamma0_for(int factor_id) const;
  /// Throws std::invalid_argument when a rate or sigma is out of range.
  void validate() const;
};

/// Memoised random intercepts. Values depend only on (seed, model, scenario[, order]),
/// so concurrent callers and call order cannot change them.
class SimState {
 public:
  explicit SimState(const SimConfig& config) : config_(config) {}
  double scenario_effect(const std::string& model_id, const std::string& scenario_id);
  double scenario_order_effect(const std::string& model_id, const std::string& scenario_id, Order order);

 private:
  const SimConfig& config_;
  std::mutex mu_;
  std::map<std::pair<std::string, std::string>, double> u_;
  std::map<std::tuple<std::string, std::string, Order>, double> v_;
};

/// Probability that variant A is cited first for this trial, random effects included.
double sim_a_first_probability(const TrialContext& context, const SimConfig& config, SimState& state);

/// Plausible prose with embedded URLs. Deterministic given the seed and trial.
std::string simulate_answer(const TrialContext& context, const MessageSequence& messages, const SimConfig& config,
                            SimState& state);

/// Batch kernels: one answer per trial. The OpenMP path is bit-identical to the serial one.
std::vector<std::string> simulate_answers_serial(const std::vector<TrialContext>& contexts,
                                                 const std::vector<MessageSequence>& messages,
                                                 const SimConfig& config);
std::vector<std::string> simulate_answers_openmp(const std::vector<TrialContext>& contexts,
                                                 const std::vector<MessageSequence>& messages,
                                                 const SimConfig& config);

class SimulatorBackend final : public Backend {
 public:
  SimulatorBackend(std::string id, SimConfig config);
  std::string id() const override { return id_; }
  Completion complete(const MessageSequence& messages, const TrialContext& context) override;
  const SimConfig& config() const { return config_; }

 private:
  std::string id_;
  SimConfig config_;
  SimState state_;
};

}  // namespace citepref
