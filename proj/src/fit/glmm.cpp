#include "citepref/fit/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "citepref/factors.hpp"

namespace citepref::fit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Which model parameters the optimizer sees, in order: beta0, beta1, sigma_s, sigma_so.
struct Layout {
  bool beta0 = true;
  bool beta1 = false;
  bool sigmas = false;
  ModelParams fixed;

  std::size_t size() const { return (beta0 ? 1 : 0) + (beta1 ? 1 : 0) + (sigmas ? 2 : 0); }

  ModelParams unpack(std::span<const double> v) const {
    ModelParams p = fixed;
    std::size_t i = 0;
    if (beta0) p.beta0 = v[i++];
    if (beta1) p.beta1 = v[i++];
    if (sigmas) {
      p.sigma_s = v[i++];
      p.sigma_so = v[i++];
    }
    return p;
  }

  std::vector<double> pack(const ModelParams& p) const {
    std::vector<double> v;
    if (beta0) v.push_back(p.beta0);
    if (beta1) v.push_back(p.beta1);
    if (sigmas) {
      v.push_back(p.sigma_s);
      v.push_back(p.sigma_so);
    }
    return v;
  }

  void bounds(const AnalysisConfig& cfg, std::vector<double>& lo, std::vector<double>& hi) const {
    lo.clear();
    hi.clear();
    for (std::size_t i = 0; i < (beta0 ? 1u : 0u) + (beta1 ? 1u : 0u); ++i) {
      lo.push_back(-cfg.beta_bound);
      hi.push_back(cfg.beta_bound);
    }
    if (sigmas) {
      for (int i = 0; i < 2; ++i) {
        lo.push_back(0.0);
        hi.push_back(cfg.sigma_upper);
      }
    }
  }
};

struct Optimum {
  ModelParams params;
  double value = 0.0;
  int evaluations = 0;
  bool converged = true;
};

Optimum optimize(const FitData& data, const Layout& layout, const ModelParams& start, const AnalysisConfig& cfg,
                 Execution exec) {
  auto objective = [&](std::span<const double> v) {
    return laplace_objective(layout.unpack(v), data, exec, cfg.inner).value;
  };
  Optimum out;
  if (layout.size() == 0) {
    out.params = layout.fixed;
    out.value = laplace_objective(layout.fixed, data, exec, cfg.inner).value;
    out.evaluations = 1;
    return out;
  }
  std::vector<double> lo, hi;
  layout.bounds(cfg, lo, hi);
  const auto x0 = layout.pack(start);
  const auto tr = minimize_bounded(objective, x0, lo, hi, cfg.optimizer);
  out.params = layout.unpack(tr.x);
  out.value = tr.f;
  out.evaluations = tr.evaluations;
  out.converged = tr.converged;
  return out;
}

}  // namespace

void AnalysisConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(reporting_cap > 1.0)) throw std::invalid_argument("reporting cap must exceed 1");
  if (!(beta_bound > std::log(reporting_cap))) throw std::invalid_argument("beta bound must exceed ln(cap)");
  if (!(sigma_upper > 0.0) || !(sigma_start >= 0.0) || sigma_start > sigma_upper) {
    throw std::invalid_argument("sigma start/upper bound invalid");
  }
  if (!(hessian_step > 0.0)) throw std::invalid_argument("hessian step must be positive");
  if (!(optimizer.rho_end > 0.0) || optimizer.rho_end > optimizer.rho_begin) {
    throw std::invalid_argument("need 0 < rho_end <= rho_begin");
  }
  if (optimizer.max_evaluations < 20) throw std::invalid_argument("max_evaluations must be at least 20");
  if (inner.max_iterations < 1) throw std::invalid_argument("inner iteration cap must be positive");
}

std::vector<std::string> FitFlags::names() const {
  std::vector<std::string> out;
  if (separation) out.emplace_back("separation");
  if (degenerate_hessian) out.emplace_back("degenerate_hessian");
  if (singular_fit) out.emplace_back("singular_fit");
  if (no_convergence) out.emplace_back("no_convergence");
  return out;
}

double wald_p_value(double estimate, double se) {
  if (!std::isfinite(estimate) || !std::isfinite(se) || se < 0.0) {
    throw std::invalid_argument("wald_p_value needs a finite estimate and se >= 0");
  }
  if (se == 0.0) return 0.0;
  return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

FitResult fit_factor_model(std::span<const FitTrial> trials, bool include_position, const AnalysisConfig& cfg,
                           Execution exec) {
  cfg.validate();
  const FitData data = FitData::build(trials, include_position);
  if (data.scenarios().size() < 2) throw std::invalid_argument("fit needs at least 2 scenarios");
  if (include_position && !data.has_both_positions()) {
    throw std::invalid_argument("position covariate requested but only one source order occurs");
  }

  Layout layout;
  layout.beta1 = include_position;
  layout.sigmas = !cfg.fix_variance_zero;

  ModelParams start;
  if (cfg.glm_start) {
    const GlmFit glm = fit_logistic_irls(data, cfg.beta_bound - 1.0);
    start.beta0 = glm.beta0;
    start.beta1 = glm.beta1;
  }
  if (layout.sigmas) start.sigma_s = start.sigma_so = cfg.sigma_start;

  Optimum best = optimize(data, layout, start, cfg, exec);
  // Never report a fit worse than the null point.
  const ModelParams zero;
  const double f_zero = laplace_objective(zero, data, exec, cfg.inner).value;
  if (f_zero < best.value) {
    Optimum retry = optimize(data, layout, zero, cfg, exec);
    retry.evaluations += best.evaluations;
    best = retry.value <= f_zero ? retry : Optimum{zero, f_zero, retry.evaluations, retry.converged};
  }

  FitResult r;
  const ModelParams& p = best.params;
  r.beta0 = p.beta0;
  if (include_position) r.beta1 = p.beta1;
  r.sigma_s = layout.sigmas ? p.sigma_s : 0.0;
  r.sigma_so = layout.sigmas ? p.sigma_so : 0.0;
  r.loglik = -best.value;
  r.odds_ratio = std::exp(r.beta0);
  r.evaluations = best.evaluations;
  r.n_trials = data.trial_count();
  r.n_scenarios = data.scenarios().size();
  r.flags.no_convergence = !best.converged;

  const ObjectiveValue at_opt = laplace_objective(p, data, exec, cfg.inner);
  const bool all_same = data.positive_count() == 0 || data.positive_count() == data.trial_count();
  r.flags.separation = std::abs(r.beta0) > std::log(cfg.reporting_cap) || all_same || !at_opt.ok();
  if (layout.sigmas) {
    r.flags.singular_fit = r.sigma_s < cfg.singular_threshold || r.sigma_so < cfg.singular_threshold;
  }

  // Central-difference Hessian over beta and interior sigmas.
  const double h = cfg.hessian_step;
  std::vector<int> free;  // 0 beta0, 1 beta1, 2 sigma_s, 3 sigma_so
  free.push_back(0);
  if (include_position) free.push_back(1);
  if (layout.sigmas) {
    if (p.sigma_s > h) free.push_back(2);
    if (p.sigma_so > h) free.push_back(3);
  }
  auto shifted = [&](std::initializer_list<std::pair<int, double>> moves) {
    ModelParams q = p;
    for (auto [idx, by] : moves) {
      switch (idx) {
        case 0: q.beta0 += by; break;
        case 1: q.beta1 += by; break;
        case 2: q.sigma_s += by; break;
        default: q.sigma_so += by; break;
      }
    }
    return laplace_objective(q, data, exec, cfg.inner).value;
  };
  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd H(m, m);
  const double f0 = at_opt.value;
  for (Eigen::Index a = 0; a < m; ++a) {
    const int i = free[static_cast<std::size_t>(a)];
    H(a, a) = (shifted({{i, h}}) - 2.0 * f0 + shifted({{i, -h}})) / (h * h);
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const int j = free[static_cast<std::size_t>(b)];
      H(a, b) = H(b, a) = (shifted({{i, h}, {j, h}}) - shifted({{i, h}, {j, -h}}) - shifted({{i, -h}, {j, h}}) +
                           shifted({{i, -h}, {j, -h}})) /
                          (4.0 * h * h);
    }
  }
  auto covariance = [](const Eigen::MatrixXd& M, Eigen::MatrixXd& cov) {
    if (!M.allFinite()) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-10 * std::max(1.0, top))) return false;
    cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return true;
  };
  Eigen::MatrixXd cov;
  bool pd = covariance(H, cov);
  const Eigen::Index nb = include_position ? 2 : 1;
  if (!pd) {
    if (!r.flags.separation) r.flags.degenerate_hessian = true;
    pd = covariance(H.topLeftCorner(nb, nb), cov);
  }
  r.se0 = pd ? std::sqrt(cov(0, 0)) : kNaN;
  if (include_position) r.se1 = pd ? std::sqrt(cov(1, 1)) : kNaN;

  if (r.flags.separation) {
    // Likelihood-ratio test of beta0 = 0 with the other parameters re-optimized.
    Layout null_layout = layout;
    null_layout.beta0 = false;
    null_layout.fixed = ModelParams{};
    ModelParams null_start = p;
    null_start.beta0 = 0.0;
    if (null_layout.sigmas) {
      null_start.sigma_s = std::max(null_start.sigma_s, cfg.sigma_start);
      null_start.sigma_so = std::max(null_start.sigma_so, cfg.sigma_start);
    }
    const Optimum null_fit = optimize(data, null_layout, null_start, cfg, exec);
    const double stat = std::max(0.0, 2.0 * (null_fit.value - best.value));
    r.p_value = std::erfc(std::sqrt(stat / 2.0));
    r.p_value_method = "lrt";
  } else if (std::isfinite(r.se0)) {
    if (r.se0 == 0.0) r.flags.degenerate_hessian = true;
    r.p_value = wald_p_value(r.beta0, r.se0);
  } else {
    r.p_value = kNaN;
  }
  if (include_position) {
    r.p_value_position = r.se1 && std::isfinite(*r.se1) ? wald_p_value(*r.beta1, *r.se1) : kNaN;
  }
  return r;
}

std::string_view to_string(GroupStatus s) {
  switch (s) {
    case GroupStatus::Fitted: return "fitted";
    case GroupStatus::Missing: return "missing";
    case GroupStatus::Failed: return "failed";
  }
  return "?";
}

std::vector<FitTrial> fit_inputs(std::span<const Outcome> outcomes, const GroupKey& key) {
  const auto factor = find_factor(key.factor_id);
  const bool position = !factor || factor->counterbalanced;
  std::vector<FitTrial> out;
  for (const auto& o : outcomes) {
    if (o.factor_id != key.factor_id || o.model_id != key.model_id) continue;
    if (o.result == CitationResult::Excluded) continue;
    FitTrial t;
    t.y = o.result == CitationResult::AFirst ? 1 : 0;
    if (position) t.x = position_indicator(o.order);
    t.scenario_key = o.scenario_id;
    t.scenario_order_key = o.scenario_id + "|" + std::string(to_string(o.order));
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::vector<GroupKey> group_keys(std::span<const Outcome> outcomes, std::span<const GroupKey> expected) {
  std::set<GroupKey> keys(expected.begin(), expected.end());
  for (const auto& o : outcomes) keys.insert(GroupKey{o.factor_id, o.model_id});
  return {keys.begin(), keys.end()};
}

GroupFit fit_group(std::span<const Outcome> outcomes, const GroupKey& key, const AnalysisConfig& cfg) {
  GroupFit g;
  g.key = key;
  const auto factor = find_factor(key.factor_id);
  g.include_position = !factor || factor->counterbalanced;
  for (const auto& o : outcomes) {
    if (o.factor_id == key.factor_id && o.model_id == key.model_id && o.result == CitationResult::Excluded) ++g.excluded;
  }
  const auto trials = fit_inputs(outcomes, key);
  g.retained = trials.size();
  if (trials.empty()) {
    g.status = GroupStatus::Missing;
    g.message = "no retained trials";
    return g;
  }
  try {
    g.fit = fit_factor_model(trials, g.include_position, cfg, Execution::Serial);
    g.status = GroupStatus::Fitted;
  } catch (const std::exception& e) {
    g.status = GroupStatus::Failed;
    g.message = e.what();
  }
  return g;
}

}  // namespace

std::vector<GroupFit> fit_all_serial(std::span<const Outcome> outcomes, const AnalysisConfig& cfg,
                                     std::span<const GroupKey> expected) {
  cfg.validate();
  const auto keys = group_keys(outcomes, expected);
  std::vector<GroupFit> out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) out[i] = fit_group(outcomes, keys[i], cfg);
  return out;
}

std::vector<GroupFit> fit_all_openmp(std::span<const Outcome> outcomes, const AnalysisConfig& cfg,
                                     std::span<const GroupKey> expected) {
  cfg.validate();
  const auto keys = group_keys(outcomes, expected);
  std::vector<GroupFit> out(keys.size());
  const auto n = static_cast<std::ptrdiff_t>(keys.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = fit_group(outcomes, keys[static_cast<std::size_t>(i)], cfg);
  }
  return out;
}

std::vector<GroupFit> fit_all(std::span<const Outcome> outcomes, const AnalysisConfig& cfg, Execution exec,
                              std::span<const GroupKey> expected) {
  return exec == Execution::Serial ? fit_all_serial(outcomes, cfg, expected) : fit_all_openmp(outcomes, cfg, expected);
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_from(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

Json to_json(const GroupFit& g) {
  Json j;
  j["factor_id"] = g.key.factor_id;
  const auto factor = find_factor(g.key.factor_id);
  j["factor"] = factor ? std::string(factor->name) : std::string();
  j["model_id"] = g.key.model_id;
  j["status"] = std::string(to_string(g.status));
  j["include_position"] = g.include_position;
  j["n_retained"] = g.retained;
  j["n_excluded"] = g.excluded;
  if (!g.message.empty()) j["message"] = g.message;
  if (g.fit) {
    const FitResult& r = *g.fit;
    j["beta0"] = number(r.beta0);
    j["beta1"] = r.beta1 ? number(*r.beta1) : Json(nullptr);
    j["se0"] = number(r.se0);
    j["se1"] = r.se1 ? number(*r.se1) : Json(nullptr);
    j["sigma_s"] = number(r.sigma_s);
    j["sigma_so"] = number(r.sigma_so);
    j["loglik"] = number(r.loglik);
    j["p_value"] = number(r.p_value);
    j["p_value_method"] = r.p_value_method;
    j["p_value_position"] = r.p_value_position ? number(*r.p_value_position) : Json(nullptr);
    j["odds_ratio"] = number(r.odds_ratio);
    j["flags"] = r.flags.names();
    j["evaluations"] = r.evaluations;
    j["n_trials"] = r.n_trials;
    j["n_scenarios"] = r.n_scenarios;
  }
  return j;
}

GroupFit group_fit_from_json(const Json& j) {
  GroupFit g;
  g.key.factor_id = j.at("factor_id").get<int>();
  g.key.model_id = j.at("model_id").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status == "fitted") g.status = GroupStatus::Fitted;
  else if (status == "missing") g.status = GroupStatus::Missing;
  else if (status == "failed") g.status = GroupStatus::Failed;
  else throw std::invalid_argument("unknown fit status: " + status);
  g.include_position = j.value("include_position", true);
  g.retained = j.value("n_retained", std::size_t{0});
  g.excluded = j.value("n_excluded", std::size_t{0});
  g.message = j.value("message", std::string());
  if (g.status == GroupStatus::Fitted) {
    FitResult r;
    r.beta0 = number_from(j.at("beta0"));
    if (!j.at("beta1").is_null()) r.beta1 = j.at("beta1").get<double>();
    r.se0 = number_from(j.at("se0"));
    if (j.contains("se1") && !j.at("se1").is_null()) r.se1 = j.at("se1").get<double>();
    else if (r.beta1) r.se1 = kNaN;
    r.sigma_s = number_from(j.at("sigma_s"));
    r.sigma_so = number_from(j.at("sigma_so"));
    r.loglik = number_from(j.at("loglik"));
    r.p_value = number_from(j.at("p_value"));
    r.p_value_method = j.value("p_value_method", std::string("wald"));
    if (j.contains("p_value_position") && !j.at("p_value_position").is_null()) {
      r.p_value_position = j.at("p_value_position").get<double>();
    } else if (r.beta1) {
      r.p_value_position = kNaN;
    }
    r.odds_ratio = number_from(j.at("odds_ratio"));
    for (const auto& f : j.at("flags")) {
      const auto name = f.get<std::string>();
      if (name == "separation") r.flags.separation = true;
      else if (name == "degenerate_hessian") r.flags.degenerate_hessian = true;
      else if (name == "singular_fit") r.flags.singular_fit = true;
      else if (name == "no_convergence") r.flags.no_convergence = true;
      else throw std::invalid_argument("unknown fit flag: " + name);
    }
    r.evaluations = j.value("evaluations", 0);
    r.n_trials = j.value("n_trials", std::size_t{0});
    r.n_scenarios = j.value("n_scenarios", std::size_t{0});
    g.fit = r;
  }
  return g;
}

void save_fits(const std::vector<GroupFit>& fits, const std::filesystem::path& path) {
  std::string text;
  for (const auto& g : fits) text += to_json(g).dump() + "\n";
  write_file(path, text);
}

std::vector<GroupFit> load_fits(const std::filesystem::path& path) {
  std::vector<GroupFit> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back(group_fit_from_json(j));
    } catch (const std::exception& e) {
      throw JsonlError(path, line, e.what());
    }
  });
  return out;
}

}  // namespace citepref::fit
