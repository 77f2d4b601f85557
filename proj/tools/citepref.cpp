// citepref: command-line driver for the citation-preference testbed.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "citepref/audit.hpp"
#include "citepref/config.hpp"
#include "citepref/corpus.hpp"
#include "citepref/extract.hpp"
#include "citepref/fit/glmm.hpp"
#include "citepref/pipeline.hpp"
#include "citepref/plan.hpp"
#include "citepref/report.hpp"
#include "citepref/runner.hpp"
#include "citepref/trial_log.hpp"

namespace fs = std::filesystem;
using namespace citepref;

namespace {

enum Exit : int { kOk = 0, kRuntime = 1, kUsage = 2, kMissingFile = 3, kBadConfig = 4, kBadData = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const fs::path& need(const fs::path& p, std::string_view what) {
  if (p.empty()) throw UsageError(std::string(what) + " is required");
  if (!fs::exists(p)) throw MissingFile(std::string(what) + " not found: " + p.string());
  return p;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<double> alpha;
};

std::vector<std::string> parse_models(const std::string& spec) {
  std::vector<std::string> out;
  if (!spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos) {
    const int n = std::stoi(spec);
    if (n < 1) throw UsageError("--models must be at least 1");
    for (int i = 1; i <= n; ++i) out.push_back("model-" + std::to_string(i));
    return out;
  }
  std::string cur;
  for (char c : spec + ",") {
    if (c == ',') {
      auto t = std::string(trim(cur));
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (out.empty()) throw UsageError("--models needs a count or a comma-separated list of ids");
  return out;
}

RunConfig config_with_globals(const fs::path& path, const Globals& g) {
  RunConfig c = load_run_config(need(path, "--config"));
  if (g.seed) c.seed = *g.seed;
  if (g.parallelism) c.parallelism = *g.parallelism;
  if (g.alpha) {
    c.alpha = *g.alpha;
    c.analysis.alpha = *g.alpha;
  }
  c.validate();
  return c;
}

Corpus load_corpus_checked(const fs::path& p) { return load_corpus(need(p, "--corpus")); }

CalendarDate today() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  return {tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday};
}

PageContent load_page(const fs::path& p) {
  const auto text = read_file(need(p, "--page"));
  PageContent page;
  const auto j = Json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) {
    if (!j.contains("text") || !j["text"].is_string()) throw DataError("page JSON needs a \"text\" string");
    page.text = j["text"].get<std::string>();
    page.url = j.value("url", std::string());
    if (j.contains("published")) {
      page.published = parse_iso_date(j["published"].get<std::string>());
      if (!page.published) throw DataError("page \"published\" must be YYYY-MM-DD");
    }
  } else {
    page.text = text;
  }
  return page;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citepref: paired-source citation preference testbed", "citepref"};
  app.require_subcommand(1);
  Globals globals;
  std::uint64_t seed = 0;
  int parallelism = 1;
  double alpha = 0.05;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice");
  auto* par_opt = app.add_option("--parallelism", parallelism, "Concurrent trials / fits")->check(CLI::PositiveNumber);
  auto* alpha_opt = app.add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  app.fallthrough();

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Expand a corpus into the counterbalanced trial plan");
  fs::path plan_corpus, plan_config, plan_out;
  std::string plan_models = "1";
  int plan_reps = 5;
  plan_cmd->add_option("--corpus", plan_corpus, "Corpus JSONL");
  plan_cmd->add_option("--config", plan_config, "Run config (corpus, backends, reps, seed)");
  plan_cmd->add_option("--models", plan_models, "Model count N (model-1..model-N) or comma-separated ids");
  plan_cmd->add_option("--reps", plan_reps, "Repetitions per condition");
  plan_cmd->add_option("--out", plan_out, "Write the plan as JSONL");

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute planned trials against the configured backends");
  fs::path run_config, run_plan_path, run_log;
  run_cmd->add_option("--config", run_config, "Run config")->required();
  run_cmd->add_option("--plan", run_plan_path, "Plan JSONL (default: built from the config)");
  run_cmd->add_option("--log", run_log, "Trial log JSONL (default: <output_dir>/trials.jsonl)");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Classify each logged answer by its first URL");
  fs::path ex_plan, ex_log, ex_corpus, ex_out;
  extract_cmd->add_option("--plan", ex_plan, "Plan JSONL")->required();
  extract_cmd->add_option("--log", ex_log, "Trial log JSONL")->required();
  extract_cmd->add_option("--corpus", ex_corpus, "Corpus JSONL")->required();
  extract_cmd->add_option("--out", ex_out, "Outcomes JSONL")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit one mixed-effects logistic model per factor x model");
  fs::path fit_in, fit_out;
  double fit_cap = 10000.0;
  fit_cmd->add_option("--outcomes", fit_in, "Outcomes JSONL")->required();
  fit_cmd->add_option("--out", fit_out, "Fits JSONL")->required();
  fit_cmd->add_option("--cap", fit_cap, "Odds-ratio reporting cap");

  // report
  auto* report_cmd = app.add_subcommand("report", "Render the odds-ratio table and consensus summary");
  fs::path rep_fits, rep_out;
  std::string rep_format = "text";
  double rep_cap = 10000.0;
  report_cmd->add_option("--fits", rep_fits, "Fits JSONL")->required();
  report_cmd->add_option("--out", rep_out, "Output file (stdout when omitted)");
  report_cmd->add_option("--format", rep_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  report_cmd->add_option("--cap", rep_cap, "Odds-ratio reporting cap");

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Route a brand's answer-engine result and audit its page");
  fs::path au_answer, au_page, au_brand, au_out, au_fits;
  std::string au_query, au_format = "json", au_date;
  int au_window = 18;
  audit_cmd->add_option("--answer", au_answer, "Answer text file")->required();
  audit_cmd->add_option("--page", au_page, "Page text, or JSON {text, url, published}")->required();
  audit_cmd->add_option("--brand", au_brand, "Brand profile YAML (names, domains)")->required();
  audit_cmd->add_option("--query", au_query, "The user query")->required();
  audit_cmd->add_option("--out", au_out, "Findings file");
  audit_cmd->add_option("--format", au_format, "Findings file format: json or text")
      ->check(CLI::IsMember({"text", "json"}));
  audit_cmd->add_option("--reference-date", au_date, "YYYY-MM-DD used for freshness (default: today)");
  audit_cmd->add_option("--freshness-months", au_window, "Freshness window in months");
  audit_cmd->add_option("--fits", au_fits, "Fits JSONL; weights become ln(median OR)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Synthesize a matched-pair corpus");
  fs::path sim_out;
  int sim_per_factor = 4;
  std::vector<int> sim_factors;
  sim_cmd->add_option("--out", sim_out, "Corpus JSONL")->required();
  sim_cmd->add_option("--per-factor", sim_per_factor, "Scenarios per factor");
  sim_cmd->add_option("--factors", sim_factors, "Factor ids (default: all 18)")->delimiter(',');

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "plan -> run -> extract -> fit -> report");
  fs::path pipe_config, pipe_dir;
  pipe_cmd->add_option("--config", pipe_config, "Run config")->required();
  pipe_cmd->add_option("--output-dir", pipe_dir, "Override output_dir");

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (seed_opt->count()) globals.seed = seed;
  if (par_opt->count()) globals.parallelism = parallelism;
  if (alpha_opt->count()) globals.alpha = alpha;

  try {
    if (plan_cmd->parsed()) {
      Corpus corpus;
      std::vector<std::string> models;
      int reps = plan_reps;
      std::uint64_t plan_seed = globals.seed.value_or(0);
      if (!plan_config.empty()) {
        const RunConfig c = config_with_globals(plan_config, globals);
        corpus = corpus_for(c);
        models = c.model_ids();
        if (plan_cmd->count("--models")) models = parse_models(plan_models);
        if (!plan_cmd->count("--reps")) reps = c.reps;
        plan_seed = c.seed;
      } else {
        corpus = load_corpus_checked(plan_corpus);
        models = parse_models(plan_models);
      }
      const TrialPlan plan = build_plan(corpus, models, reps, plan_seed);
      if (!plan_out.empty()) save_plan(plan.trials, plan_out);
      std::cout << format_plan_summary(plan.summary);
      return kOk;
    }

    if (run_cmd->parsed()) {
      const RunConfig c = config_with_globals(run_config, globals);
      const Corpus corpus = corpus_for(c);
      std::vector<TrialSpec> trials =
          run_plan_path.empty() ? build_plan(corpus, c.model_ids(), c.reps, c.seed).trials
                                : load_plan(need(run_plan_path, "--plan"));
      const fs::path log_path = run_log.empty() ? c.output_dir / "trials.jsonl" : run_log;
      std::vector<std::unique_ptr<Backend>> owned;
      std::map<std::string, Backend*> backends;
      for (const auto& spec : c.backends) {
        owned.push_back(make_backend(spec, c.seed));
        backends[spec.id] = owned.back().get();
      }
      TrialLog log(log_path);
      RunOptions options;
      options.parallelism = c.parallelism;
      options.retry = c.retry;
      const RunSummary s = run_plan(trials, corpus, backends, log, options);
      std::cout << "completed " << s.completed << ", cached " << s.cached << ", failed " << s.failed << "\n";
      std::cout << "trial log: " << log_path.string() << "\n";
      for (const auto& [id, msg] : s.failures) std::cerr << "  " << id << ": " << msg << "\n";
      if (s.auth_failure) std::cerr << "a backend rejected its credentials; check its token_env variable\n";
      if (s.failed > 0) {
        std::cerr << s.failed << " trials failed; rerun the same command to retry only those\n";
        return kRuntime;
      }
      return kOk;
    }

    if (extract_cmd->parsed()) {
      const auto plan = load_plan(need(ex_plan, "--plan"));
      const auto log = load_trial_log(need(ex_log, "--log"));
      const Corpus corpus = load_corpus_checked(ex_corpus);
      std::vector<std::string> missing;
      const auto outcomes = extract_plan(plan, log, corpus, &missing);
      save_outcomes(outcomes, ex_out);
      const auto st = url_stats(outcomes);
      std::printf("outcomes %zu (missing from log: %zu)\n", outcomes.size(), missing.size());
      std::printf("one URL %.1f%%, two or more %.1f%%, none %.1f%%, excluded %.1f%%\n", 100 * st.one_url_share,
                  100 * st.multi_url_share, 100 * st.no_url_share, 100 * st.exclusion_share);
      return kOk;
    }

    if (fit_cmd->parsed()) {
      const auto outcomes = load_outcomes(need(fit_in, "--outcomes"));
      if (outcomes.empty()) throw DataError("outcomes file is empty");
      fit::AnalysisConfig cfg;
      cfg.alpha = globals.alpha.value_or(cfg.alpha);
      cfg.reporting_cap = fit_cap;
      const auto fits = fit::fit_all(outcomes, cfg);
      fit::save_fits(fits, fit_out);
      for (const auto& g : fits) {
        std::printf("factor %2d  %-16s %-7s", g.key.factor_id, g.key.model_id.c_str(),
                    std::string(fit::to_string(g.status)).c_str());
        if (g.fit) std::printf("  OR %-10s p %.3g", format_odds_ratio(g.fit->odds_ratio).c_str(), g.fit->p_value);
        if (!g.message.empty()) std::printf("  %s", g.message.c_str());
        std::printf("\n");
      }
      return kOk;
    }

    if (report_cmd->parsed()) {
      const auto fits = fit::load_fits(need(rep_fits, "--fits"));
      if (fits.empty()) throw DataError("fits file is empty");
      ReportConfig rc;
      rc.alpha = globals.alpha.value_or(rc.alpha);
      rc.cap = rep_cap;
      const auto doc = render_report(fits, rc);
      const std::string body = rep_format == "json" ? doc.summary.dump(2) + "\n" : doc.text;
      if (rep_out.empty()) std::cout << body;
      else write_file(rep_out, body);
      return kOk;
    }

    if (audit_cmd->parsed()) {
      const auto answer = read_file(need(au_answer, "--answer"));
      const PageContent page = load_page(au_page);
      const BrandProfile brand = load_brand_profile(need(au_brand, "--brand"));
      AuditSettings settings;
      if (!au_date.empty()) {
        const auto d = parse_iso_date(au_date);
        if (!d) throw UsageError("--reference-date must be YYYY-MM-DD");
        settings.reference_date = *d;
      } else {
        settings.reference_date = today();
      }
      settings.freshness_months = au_window;
      settings.weights = au_fits.empty() ? default_priority_weights()
                                         : priority_weights_from_fits(fit::load_fits(need(au_fits, "--fits")));
      if (trim(answer).empty() || trim(page.text).empty()) throw DataError("answer and page must be non-empty");
      const AuditReport report = audit(answer, brand, page, au_query, settings);
      std::cout << format_audit(report);
      if (!au_out.empty()) write_file(au_out, au_format == "json" ? to_json(report).dump(2) + "\n" : format_audit(report));
      return kOk;
    }

    if (sim_cmd->parsed()) {
      SynthConfig sc;
      if (!sim_factors.empty()) sc.factors = sim_factors;
      sc.per_factor = sim_per_factor;
      for (int id : sc.factors) {
        if (!find_factor(id)) throw UsageError("unknown factor id " + std::to_string(id));
      }
      if (sc.per_factor < 1) throw UsageError("--per-factor must be at least 1");
      const Corpus corpus = synth_corpus(sc, globals.seed.value_or(0));
      save_corpus(corpus, sim_out);
      std::cout << "wrote " << corpus.size() << " scenarios to " << sim_out.string() << "\n";
      return kOk;
    }

    if (pipe_cmd->parsed()) {
      RunConfig c = config_with_globals(pipe_config, globals);
      if (!pipe_dir.empty()) c.output_dir = pipe_dir;
      const auto r = run_pipeline(c, [](const std::string& msg) { std::cout << msg << "\n"; });
      std::cout << r.report.text;
      std::cout << "outputs in " << c.output_dir.string() << "\n";
      if (r.run.failed > 0) {
        std::cerr << r.run.failed << " trials failed; rerun to retry them\n";
        return kRuntime;
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingFile;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kBadData;
  } catch (const JsonlError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kBadData;
  } catch (const CorpusError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kBadData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
