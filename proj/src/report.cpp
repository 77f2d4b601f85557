#include "citepref/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "citepref/factors.hpp"

namespace citepref {

std::string_view to_string(EffectCategory c) {
  switch (c) {
    case EffectCategory::Negligible: return "Negligible";
    case EffectCategory::Weak: return "Weak";
    case EffectCategory::Moderate: return "Moderate";
    case EffectCategory::Strong: return "Strong";
    case EffectCategory::VeryStrong: return "Very strong";
  }
  return "?";
}

std::string_view to_string(ConsensusTier t) {
  switch (t) {
    case ConsensusTier::Gatekeeper: return "gatekeeper";
    case ConsensusTier::Differentiator: return "differentiator";
    case ConsensusTier::NoConsensus: return "no_consensus";
  }
  return "?";
}

EffectCategory classify_effect(double odds_ratio) {
  if (!(odds_ratio > 0.0)) throw std::invalid_argument("odds ratio must be positive");
  const double m = std::max(odds_ratio, 1.0 / odds_ratio);
  if (m > 100.0) return EffectCategory::VeryStrong;
  if (m > 10.0) return EffectCategory::Strong;
  if (m > 3.0) return EffectCategory::Moderate;
  if (m > 1.5) return EffectCategory::Weak;
  return EffectCategory::Negligible;
}

std::string cap_label(double cap) {
  if (cap >= 1000.0 && std::fmod(cap, 1000.0) == 0.0) return ">" + std::to_string(static_cast<long long>(cap / 1000.0)) + "k";
  return ">" + format_odds_ratio(cap);
}

std::string format_odds_ratio(double v) {
  if (!std::isfinite(v)) return "n/a";
  if (v >= 999.5) {
    return group_thousands(static_cast<std::uint64_t>(std::llround(v)));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  std::string s = buf;
  if (s.find('e') != std::string::npos) return s;
  // %.3g drops trailing zeros; restore them so every value shows three digits.
  std::size_t significant = 0;
  bool seen_nonzero = false;
  for (char c : s) {
    if (c < '0' || c > '9') continue;
    if (c != '0') seen_nonzero = true;
    if (seen_nonzero) ++significant;
  }
  if (significant < 3 && v != 0.0) {
    if (s.find('.') == std::string::npos) s.push_back('.');
    s.append(3 - significant, '0');
  }
  return s;
}

namespace {

EffectCell make_cell(const fit::GroupFit& g, const ReportConfig& cfg) {
  EffectCell c;
  c.factor_id = g.key.factor_id;
  c.model_id = g.key.model_id;
  c.status = g.status;
  if (!g.fit) {
    c.display = g.status == fit::GroupStatus::Failed ? "failed" : "n/a";
    return c;
  }
  const fit::FitResult& r = *g.fit;
  c.flags = r.flags;
  c.odds_ratio = r.odds_ratio;
  c.p_value = r.p_value;
  c.significant = std::isfinite(r.p_value) && r.p_value < cfg.alpha;
  const double m = std::max(r.odds_ratio, 1.0 / r.odds_ratio);
  c.capped = r.flags.separation || m > cfg.cap;
  if (c.capped) {
    c.display = r.odds_ratio >= 1.0 ? cap_label(cfg.cap) : "<1/" + cap_label(cfg.cap).substr(1);
  } else {
    c.display = format_odds_ratio(r.odds_ratio);
  }
  if (r.odds_ratio > 0.0 && std::isfinite(r.odds_ratio)) c.category = classify_effect(r.odds_ratio);
  else if (r.odds_ratio > 0.0) c.category = EffectCategory::VeryStrong;
  return c;
}

std::string decorate(const EffectCell& c) {
  std::string s = c.significant ? "**" + c.display + "**" : c.display;
  if (c.flags.degenerate_hessian) s += "*";
  if (c.flags.singular_fit) s += "†";
  return s;
}

std::string percent(int part, int whole) {
  return std::to_string(static_cast<long long>(std::llround(100.0 * part / whole))) + "%";
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::optional<ConsensusSummary> summarize_consensus(const std::vector<EffectCell>& cells,
                                                    const std::vector<std::string>& models,
                                                    const std::vector<int>& factors) {
  if (models.size() < 2) return std::nullopt;
  ConsensusSummary s;
  s.models = static_cast<int>(models.size());
  s.threshold = (2 * s.models + 2) / 3;
  s.total_factors = static_cast<int>(factors.size());
  for (std::size_t row = 0; row < factors.size(); ++row) {
    FactorConsensus f;
    f.factor_id = factors[row];
    f.models = s.models;
    bool all_large = true;
    for (std::size_t col = 0; col < models.size(); ++col) {
      const EffectCell& c = cells[row * models.size() + col];
      if (c.significant) ++f.significant_models;
      const bool large = c.status == fit::GroupStatus::Fitted && (c.capped ? c.odds_ratio > 1.0 : c.odds_ratio > 100.0);
      all_large = all_large && large;
    }
    if (f.significant_models == s.models && all_large) f.tier = ConsensusTier::Gatekeeper;
    else if (f.significant_models >= s.threshold) f.tier = ConsensusTier::Differentiator;
    if (f.significant_models >= s.threshold) ++s.consensus_factors;
    s.factors.push_back(f);
  }
  return s;
}

ReportDocument render_report(const std::vector<fit::GroupFit>& fits, const ReportConfig& cfg) {
  if (fits.empty()) throw std::invalid_argument("report needs at least one fit");
  std::set<std::string> model_set;
  std::set<int> factor_set;
  std::map<std::pair<int, std::string>, const fit::GroupFit*> by_key;
  for (const auto& g : fits) {
    if (!by_key.emplace(std::pair{g.key.factor_id, g.key.model_id}, &g).second) {
      throw std::invalid_argument("duplicate fit for factor " + std::to_string(g.key.factor_id) + ", model " +
                                  g.key.model_id);
    }
    model_set.insert(g.key.model_id);
    factor_set.insert(g.key.factor_id);
  }
  ReportDocument doc;
  doc.models.assign(model_set.begin(), model_set.end());
  doc.factors.assign(factor_set.begin(), factor_set.end());
  for (int f : doc.factors) {
    for (const auto& m : doc.models) {
      const auto it = by_key.find({f, m});
      if (it != by_key.end()) {
        doc.cells.push_back(make_cell(*it->second, cfg));
      } else {
        EffectCell c;
        c.factor_id = f;
        c.model_id = m;
        c.display = "n/a";
        doc.cells.push_back(c);
      }
    }
  }
  doc.consensus = summarize_consensus(doc.cells, doc.models, doc.factors);

  auto factor_label = [](int id) {
    const auto f = find_factor(id);
    return f ? std::string(f->contrast) : "factor " + std::to_string(id);
  };
  auto factor_name = [](int id) {
    const auto f = find_factor(id);
    return f ? std::string(f->name) : "factor " + std::to_string(id);
  };

  std::ostringstream out;
  out << "Odds ratios by factor and model (OR > 1 favors variant A)\n\n";
  out << "| Factor (A vs B) |";
  for (const auto& m : doc.models) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < doc.models.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t row = 0; row < doc.factors.size(); ++row) {
    out << "| " << factor_label(doc.factors[row]) << " |";
    for (std::size_t col = 0; col < doc.models.size(); ++col) out << ' ' << decorate(doc.cell(row, col)) << " |";
    out << '\n';
  }
  std::ostringstream alpha;
  alpha << cfg.alpha;
  out << "\nBold = significant (p < " << alpha.str() << "). " << cap_label(cfg.cap)
      << " = quasi-separation, odds ratio capped.\n";
  out << "Convergence warnings: * degenerate Hessian, † singular fit.\n";
  if (doc.consensus) {
    const ConsensusSummary& s = *doc.consensus;
    out << "\nConsensus: " << s.consensus_factors << '/' << s.total_factors << " factors ("
        << percent(s.consensus_factors, s.total_factors) << ") significant in at least " << s.threshold << " of "
        << s.models << " models.\n";
    std::vector<std::string> gate, diff;
    for (const auto& f : s.factors) {
      if (f.tier == ConsensusTier::Gatekeeper) gate.push_back(factor_name(f.factor_id));
      if (f.tier == ConsensusTier::Differentiator) diff.push_back(factor_name(f.factor_id));
    }
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
      return v.empty() ? std::string("none") : s;
    };
    out << "Gatekeepers (significant in all models, OR > 100): " << join(gate) << '\n';
    out << "Differentiators (significant in at least " << s.threshold << " models): " << join(diff) << '\n';
  }
  doc.text = out.str();

  Json j;
  j["alpha"] = cfg.alpha;
  j["cap"] = cfg.cap;
  j["models"] = doc.models;
  Json rows = Json::array();
  for (std::size_t row = 0; row < doc.factors.size(); ++row) {
    Json r;
    r["factor_id"] = doc.factors[row];
    r["factor"] = factor_name(doc.factors[row]);
    r["contrast"] = factor_label(doc.factors[row]);
    Json cells = Json::array();
    for (std::size_t col = 0; col < doc.models.size(); ++col) {
      const EffectCell& c = doc.cell(row, col);
      Json cj;
      cj["model_id"] = c.model_id;
      cj["status"] = std::string(fit::to_string(c.status));
      cj["display"] = c.display;
      cj["significant"] = c.significant;
      cj["capped"] = c.capped;
      cj["category"] = c.category ? Json(std::string(to_string(*c.category))) : Json(nullptr);
      cj["odds_ratio"] = c.status == fit::GroupStatus::Fitted ? number(c.odds_ratio) : Json(nullptr);
      cj["p_value"] = c.status == fit::GroupStatus::Fitted ? number(c.p_value) : Json(nullptr);
      cj["flags"] = c.flags.names();
      cells.push_back(cj);
    }
    r["cells"] = cells;
    if (doc.consensus) {
      const auto& f = doc.consensus->factors[row];
      r["significant_models"] = f.significant_models;
      r["tier"] = std::string(to_string(f.tier));
    }
    rows.push_back(r);
  }
  j["factors"] = rows;
  if (doc.consensus) {
    const ConsensusSummary& s = *doc.consensus;
    j["consensus"] = {{"models", s.models},
                      {"threshold", s.threshold},
                      {"consensus_factors", s.consensus_factors},
                      {"total_factors", s.total_factors},
                      {"share", static_cast<double>(s.consensus_factors) / s.total_factors}};
  } else {
    j["consensus"] = nullptr;
  }
  doc.summary = j;
  return doc;
}

}  // namespace citepref
