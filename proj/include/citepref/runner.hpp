#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "citepref/backend.hpp"
#include "citepref/corpus.hpp"
#include "citepref/plan.hpp"
#include "citepref/retry.hpp"
#include "citepref/trial_log.hpp"

namespace citepref {

enum class TrialStatus { Completed, Cached, Failed };

struct TrialRun {
  TrialStatus status = TrialStatus::Failed;
  std::optional<RawTrialResult> result;
  int attempts = 0;
  std::string error;
  std::optional<BackendError::Kind> error_kind;
};

/// Executes one trial exactly once per trial_id: a stored result is returned without
/// contacting the backend. Transient errors are retried per `policy`; auth errors fail fast.
/// A failed trial is not persisted, so a later run retries it.
TrialRun run_trial(const TrialSpec& spec, const Corpus& corpus, Backend& backend, TrialLog& log,
                   const RetryPolicy& policy, const Sleeper& sleep = real_sleeper());

struct RunOptions {
  int parallelism = 1;
  RetryPolicy retry;
  Sleeper sleep = real_sleeper();
  /// Called after each trial with (done, total). May be called from worker threads.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct RunSummary {
  std::size_t completed = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  /// trial_id -> error message
  std::map<std::string, std::string> failures;
  /// Set when any backend rejected its credentials; that backend's remaining trials are skipped.
  bool auth_failure = false;
};

/// Runs every trial of the plan against the backend registered for its model_id.
/// Throws std::invalid_argument if a model has no backend.
RunSummary run_plan(const std::vector<TrialSpec>& trials, const Corpus& corpus,
                    const std::map<std::string, Backend*>& backends, TrialLog& log, const RunOptions& options);

}  // namespace citepref
