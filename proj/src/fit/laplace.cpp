#include "citepref/fit/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace citepref::fit {

namespace {

double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Arrow-shaped Newton system for one scenario:
//   A = I + Lambda Z' W Z Lambda, with one scenario intercept coupled to each group intercept.
struct ArrowSystem {
  double a_uu = 1.0;
  std::vector<double> a_ug;
  std::vector<double> a_gg;

  void reset(std::size_t groups) {
    a_uu = 1.0;
    a_ug.assign(groups, 0.0);
    a_gg.assign(groups, 1.0);
  }

  double schur() const {
    double s = a_uu;
    for (std::size_t g = 0; g < a_gg.size(); ++g) s -= a_ug[g] * a_ug[g] / a_gg[g];
    return s;
  }

  double log_det() const {
    double ld = std::log(schur());
    for (double d : a_gg) ld += std::log(d);
    return ld;
  }

  // Solves A [du; dg] = [ru; rg].
  void solve(double ru, const std::vector<double>& rg, double& du, std::vector<double>& dg) const {
    double rhs = ru;
    for (std::size_t g = 0; g < a_gg.size(); ++g) rhs -= a_ug[g] * rg[g] / a_gg[g];
    du = rhs / schur();
    dg.resize(a_gg.size());
    for (std::size_t g = 0; g < a_gg.size(); ++g) dg[g] = (rg[g] - a_ug[g] * du) / a_gg[g];
  }
};

}  // namespace

FitData FitData::build(std::span<const FitTrial> trials, bool include_position) {
  FitData d;
  d.include_position_ = include_position;
  // scenario -> scenario-order group -> x -> (n, k)
  std::map<std::string, std::map<std::string, std::map<double, std::pair<double, double>>>> tree;
  std::map<std::string, std::string> group_owner;
  for (const auto& t : trials) {
    if (t.scenario_key.empty() || t.scenario_order_key.empty()) {
      throw std::invalid_argument("every trial needs a scenario key and a scenario-order key");
    }
    if (t.y != 0 && t.y != 1) throw std::invalid_argument("y must be 0 or 1");
    if (include_position != t.x.has_value()) {
      throw std::invalid_argument(include_position ? "position covariate missing on a trial"
                                                   : "position covariate present in a fit without it");
    }
    if (t.x && *t.x != 0.5 && *t.x != -0.5) throw std::invalid_argument("x must be +0.5 or -0.5");
    auto [it, inserted] = group_owner.emplace(t.scenario_order_key, t.scenario_key);
    if (!inserted && it->second != t.scenario_key) {
      throw std::invalid_argument("scenario-order key " + t.scenario_order_key + " spans scenarios " + it->second +
                                  " and " + t.scenario_key);
    }
    auto& cell = tree[t.scenario_key][t.scenario_order_key][t.x.value_or(0.0)];
    cell.first += 1.0;
    cell.second += t.y;
    ++d.trials_;
    d.positives_ += static_cast<std::size_t>(t.y);
  }
  for (const auto& [scenario, groups] : tree) {
    ScenarioBlock block;
    block.cell_begin = d.cells_.size();
    int g = 0;
    for (const auto& [group, by_x] : groups) {
      for (const auto& [x, nk] : by_x) d.cells_.push_back({x, nk.first, nk.second, g});
      ++g;
    }
    block.cell_end = d.cells_.size();
    block.groups = g;
    d.scenarios_.push_back(block);
  }
  return d;
}

bool FitData::has_both_positions() const {
  bool pos = false, neg = false;
  for (const auto& c : cells_) {
    pos = pos || c.x > 0;
    neg = neg || c.x < 0;
  }
  return pos && neg;
}

ScenarioContribution scenario_laplace(const FitData& data, std::size_t scenario, const ModelParams& p,
                                      const InnerOptions& options) {
  const ScenarioBlock& block = data.scenarios()[scenario];
  const auto& cells = data.cells();
  const auto groups = static_cast<std::size_t>(block.groups);
  const double beta1 = data.include_position() ? p.beta1 : 0.0;

  // Spherical random effects: eta = fixed + sigma_s * zu + sigma_so * zg.
  double zu = 0.0;
  std::vector<double> zg(groups, 0.0);
  std::vector<double> rg(groups);
  std::vector<double> dg(groups);
  std::vector<double> trial_zg(groups);
  ArrowSystem sys;

  auto penalized = [&](double u, const std::vector<double>& v) {
    double f = -0.5 * u * u;
    for (double z : v) f -= 0.5 * z * z;
    for (std::size_t c = block.cell_begin; c < block.cell_end; ++c) {
      const Cell& cell = cells[c];
      const double eta = p.beta0 + beta1 * cell.x + p.sigma_s * u + p.sigma_so * v[static_cast<std::size_t>(cell.group)];
      f += cell.k * eta - cell.n * softplus(eta);
    }
    return f;
  };

  // Gradient and negative Hessian at (zu, zg).
  auto linearize = [&](double& ru) {
    sys.reset(groups);
    ru = -zu;
    for (std::size_t g = 0; g < groups; ++g) rg[g] = -zg[g];
    for (std::size_t c = block.cell_begin; c < block.cell_end; ++c) {
      const Cell& cell = cells[c];
      const auto g = static_cast<std::size_t>(cell.group);
      const double eta = p.beta0 + beta1 * cell.x + p.sigma_s * zu + p.sigma_so * zg[g];
      const double mu = logistic(eta);
      const double resid = cell.k - cell.n * mu;
      const double w = cell.n * mu * (1.0 - mu);
      ru += p.sigma_s * resid;
      rg[g] += p.sigma_so * resid;
      sys.a_uu += p.sigma_s * p.sigma_s * w;
      sys.a_ug[g] += p.sigma_s * p.sigma_so * w;
      sys.a_gg[g] += p.sigma_so * p.sigma_so * w;
    }
  };

  ScenarioContribution out;
  out.converged = false;
  double f = penalized(zu, zg);
  for (int it = 0; it < options.max_iterations; ++it) {
    double ru = 0.0;
    linearize(ru);
    double du = 0.0;
    sys.solve(ru, rg, du, dg);
    double decrement = du * ru;
    for (std::size_t g = 0; g < groups; ++g) decrement += dg[g] * rg[g];
    out.iterations = it;
    if (!(decrement >= 0.0) || !std::isfinite(decrement)) break;
    if (0.5 * decrement < options.tolerance) {
      out.converged = true;
      break;
    }
    // Damped Newton: the penalized log-likelihood is strictly concave.
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const double u_try = zu + step * du;
      for (std::size_t g = 0; g < groups; ++g) trial_zg[g] = zg[g] + step * dg[g];
      const double f_try = penalized(u_try, trial_zg);
      if (f_try >= f - 1e-12 * std::abs(f)) {
        zu = u_try;
        zg.swap(trial_zg);
        trial_zg.resize(groups);
        f = f_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (!out.converged) return out;

  double ru = 0.0;
  linearize(ru);
  out.log_likelihood = f - 0.5 * sys.log_det();
  return out;
}

std::vector<ScenarioContribution> scenario_contributions_serial(const FitData& data, const ModelParams& params,
                                                                const InnerOptions& options) {
  std::vector<ScenarioContribution> out(data.scenarios().size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = scenario_laplace(data, s, params, options);
  return out;
}

std::vector<ScenarioContribution> scenario_contributions_openmp(const FitData& data, const ModelParams& params,
                                                                const InnerOptions& options) {
  std::vector<ScenarioContribution> out(data.scenarios().size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= 32)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    out[static_cast<std::size_t>(s)] = scenario_laplace(data, static_cast<std::size_t>(s), params, options);
  }
  return out;
}

ObjectiveValue laplace_objective(const ModelParams& params, const FitData& data, Execution exec,
                                 const InnerOptions& options) {
  const auto parts = exec == Execution::Serial ? scenario_contributions_serial(data, params, options)
                                               : scenario_contributions_openmp(data, params, options);
  ObjectiveValue v;
  double total = 0.0;
  for (const auto& c : parts) {
    v.max_inner_iterations = std::max(v.max_inner_iterations, c.iterations);
    if (!c.converged) ++v.failed_scenarios;
    total += c.log_likelihood;
  }
  v.value = v.failed_scenarios > 0 || !std::isfinite(total) ? kInnerFailurePenalty : -total;
  return v;
}

double logistic_log_likelihood(const FitData& data, double beta0, double beta1) {
  double ll = 0.0;
  const double b1 = data.include_position() ? beta1 : 0.0;
  for (const auto& c : data.cells()) {
    const double eta = beta0 + b1 * c.x;
    ll += c.k * eta - c.n * softplus(eta);
  }
  return ll;
}

GlmFit fit_logistic_irls(const FitData& data, double bound, int max_iterations) {
  GlmFit fit;
  const bool two = data.include_position();
  double b0 = 0.0, b1 = 0.0;
  double ll = logistic_log_likelihood(data, b0, b1);
  for (int it = 1; it <= max_iterations; ++it) {
    fit.iterations = it;
    // Normal equations X'WX delta = X'(y - mu) on the aggregated cells.
    double h00 = 0, h01 = 0, h11 = 0, g0 = 0, g1 = 0;
    for (const auto& c : data.cells()) {
      const double mu = logistic(b0 + (two ? b1 * c.x : 0.0));
      const double w = c.n * mu * (1.0 - mu);
      const double r = c.k - c.n * mu;
      h00 += w;
      h01 += w * c.x;
      h11 += w * c.x * c.x;
      g0 += r;
      g1 += r * c.x;
    }
    double d0 = 0, d1 = 0;
    if (two) {
      const double det = h00 * h11 - h01 * h01;
      if (!(det > 1e-300)) break;
      d0 = (h11 * g0 - h01 * g1) / det;
      d1 = (h00 * g1 - h01 * g0) / det;
    } else {
      if (!(h00 > 1e-300)) break;
      d0 = g0 / h00;
    }
    double step = 1.0;
    double n0 = b0, n1 = b1, nll = ll;
    for (int halving = 0; halving < 40; ++halving) {
      n0 = std::clamp(b0 + step * d0, -bound, bound);
      n1 = std::clamp(b1 + step * d1, -bound, bound);
      nll = logistic_log_likelihood(data, n0, n1);
      if (nll >= ll - 1e-12 * std::abs(ll)) break;
      step *= 0.5;
    }
    const double change = std::max(std::abs(n0 - b0), std::abs(n1 - b1));
    b0 = n0;
    b1 = n1;
    ll = nll;
    if (change < 1e-12) {
      fit.converged = true;
      break;
    }
  }
  fit.beta0 = b0;
  fit.beta1 = two ? b1 : 0.0;
  return fit;
}

}  // namespace citepref::fit
