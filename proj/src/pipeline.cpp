#include "citepref/pipeline.hpp"

#include <cstdio>
#include <set>

namespace citepref {

PipelinePaths PipelinePaths::in(const std::filesystem::path& dir) {
  return {dir / "plan.jsonl",  dir / "trials.jsonl", dir / "outcomes.jsonl",
          dir / "fits.jsonl", dir / "report.txt",   dir / "report.json"};
}

Corpus corpus_for(const RunConfig& config) {
  if (config.corpus_path) return load_corpus(*config.corpus_path);
  return synth_corpus(*config.synth, config.seed);
}

std::vector<fit::GroupKey> expected_groups(const Corpus& corpus, const std::vector<std::string>& models) {
  std::set<int> factors;
  for (const auto& s : corpus.scenarios()) factors.insert(s.factor_id);
  std::vector<fit::GroupKey> out;
  for (int f : factors) {
    for (const auto& m : models) out.push_back({f, m});
  }
  return out;
}

PipelineResult run_pipeline(const RunConfig& config, const std::function<void(const std::string&)>& log) {
  config.validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  PipelineResult result;
  result.paths = PipelinePaths::in(config.output_dir);
  std::filesystem::create_directories(config.output_dir);

  const Corpus corpus = corpus_for(config);
  const auto models = config.model_ids();
  const TrialPlan plan = build_plan(corpus, models, config.reps, config.seed);
  save_plan(plan.trials, result.paths.plan);
  result.plan = plan.summary;
  say("planned " + std::to_string(plan.trials.size()) + " trials");

  std::vector<std::unique_ptr<Backend>> owned;
  std::map<std::string, Backend*> backends;
  for (const auto& spec : config.backends) {
    owned.push_back(make_backend(spec, config.seed));
    backends[spec.id] = owned.back().get();
  }
  TrialLog trial_log(result.paths.trials);
  RunOptions options;
  options.parallelism = config.parallelism;
  options.retry = config.retry;
  result.run = run_plan(plan.trials, corpus, backends, trial_log, options);
  say("run: " + std::to_string(result.run.completed) + " completed, " + std::to_string(result.run.cached) +
      " cached, " + std::to_string(result.run.failed) + " failed");

  std::vector<std::string> missing;
  result.outcomes = extract_plan(plan.trials, trial_log.records(), corpus, &missing);
  save_outcomes(result.outcomes, result.paths.outcomes);
  const auto stats = url_stats(result.outcomes);
  char share[32];
  std::snprintf(share, sizeof share, "%.1f", 100.0 * stats.exclusion_share);
  say("extracted " + std::to_string(result.outcomes.size()) + " outcomes (" + share + "% excluded)");

  fit::AnalysisConfig analysis = config.analysis;
  analysis.alpha = config.alpha;
  const auto groups = expected_groups(corpus, models);
  result.fits = fit::fit_all(result.outcomes, analysis, Execution::Parallel, groups);
  fit::save_fits(result.fits, result.paths.fits);
  say("fitted " + std::to_string(result.fits.size()) + " factor x model groups");

  ReportConfig rc;
  rc.alpha = config.alpha;
  rc.cap = analysis.reporting_cap;
  result.report = render_report(result.fits, rc);
  write_file(result.paths.report_text, result.report.text);
  write_file(result.paths.report_json, result.report.summary.dump(2) + "\n");
  return result;
}

}  // namespace citepref
