#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "citepref/config.hpp"
#include "citepref/corpus.hpp"
#include "citepref/extract.hpp"
#include "citepref/fit/glmm.hpp"
#include "citepref/plan.hpp"
#include "citepref/report.hpp"
#include "citepref/runner.hpp"

namespace citepref {

struct PipelinePaths {
  std::filesystem::path plan;
  std::filesystem::path trials;
  std::filesystem::path outcomes;
  std::filesystem::path fits;
  std::filesystem::path report_text;
  std::filesystem::path report_json;

  static PipelinePaths in(const std::filesystem::path& dir);
};

struct PipelineResult {
  PipelinePaths paths;
  PlanSummary plan;
  RunSummary run;
  std::vector<Outcome> outcomes;
  std::vector<fit::GroupFit> fits;
  ReportDocument report;
};

/// Corpus from the config (file or synthesized from the seed).
Corpus corpus_for(const RunConfig& config);

/// Every (factor, model) pair the plan covers, so groups with no usable trials still show up.
std::vector<fit::GroupKey> expected_groups(const Corpus& corpus, const std::vector<std::string>& models);

/// plan -> run -> extract -> fit -> report, writing each stage's file into the output
/// directory. An existing trial log there is resumed rather than re-run.
PipelineResult run_pipeline(const RunConfig& config, const std::function<void(const std::string&)>& log = {});

}  // namespace citepref
