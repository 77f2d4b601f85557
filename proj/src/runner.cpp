#include "citepref/runner.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

namespace citepref {

TrialRun run_trial(const TrialSpec& spec, const Corpus& corpus, Backend& backend, TrialLog& log,
                   const RetryPolicy& policy, const Sleeper& sleep) {
  TrialRun run;
  if (auto stored = log.find(spec.trial_id)) {
    run.status = TrialStatus::Cached;
    run.attempts = stored->attempts;
    run.result = std::move(stored);
    return run;
  }

  const MessageSequence messages = build_messages(spec, corpus);
  const TrialContext context{spec, corpus.at(spec.scenario_id).factor_id};
  const auto started = std::chrono::steady_clock::now();
  const int max_attempts = std::max(1, policy.max_attempts);

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    run.attempts = attempt;
    try {
      Completion c = backend.complete(messages, context);
      RawTrialResult r;
      r.trial_id = spec.trial_id;
      r.answer_text = std::move(c.text);
      r.attempts = attempt;
      r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      r.backend_meta = std::move(c.meta);
      if (!log.append(r)) {
        // Another writer finished this trial first; its record wins.
        run.status = TrialStatus::Cached;
        run.result = log.find(spec.trial_id);
        return run;
      }
      run.status = TrialStatus::Completed;
      run.result = std::move(r);
      return run;
    } catch (const BackendError& e) {
      run.error = e.what();
      run.error_kind = e.kind();
      if (e.kind() != BackendError::Kind::Transient) break;
      if (attempt < max_attempts) sleep(policy.backoff(attempt, sha256_u64("retry|" + spec.trial_id)));
    }
  }
  run.status = TrialStatus::Failed;
  return run;
}

RunSummary run_plan(const std::vector<TrialSpec>& trials, const Corpus& corpus,
                    const std::map<std::string, Backend*>& backends, TrialLog& log, const RunOptions& options) {
  for (const auto& t : trials) {
    auto it = backends.find(t.model_id);
    if (it == backends.end() || it->second == nullptr) {
      throw std::invalid_argument("no backend configured for model " + t.model_id);
    }
  }

  RunSummary summary;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::set<std::string> auth_failed;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= trials.size()) return;
      const TrialSpec& spec = trials[i];
      bool skip = false;
      {
        std::lock_guard lock(mu);
        skip = auth_failed.count(spec.model_id) != 0;
        if (skip) {
          ++summary.failed;
          summary.failures.emplace(spec.trial_id, "skipped: authentication failed for " + spec.model_id);
        }
      }
      if (skip) {
        if (options.progress) options.progress(done.fetch_add(1) + 1, trials.size());
        continue;
      }
      TrialRun r = run_trial(spec, corpus, *backends.at(spec.model_id), log, options.retry, options.sleep);
      {
        std::lock_guard lock(mu);
        switch (r.status) {
          case TrialStatus::Completed: ++summary.completed; break;
          case TrialStatus::Cached: ++summary.cached; break;
          case TrialStatus::Failed:
            ++summary.failed;
            summary.failures.emplace(spec.trial_id, r.error);
            break;
        }
        if (r.error_kind == BackendError::Kind::Auth) {
          summary.auth_failure = true;
          auth_failed.insert(spec.model_id);
        }
      }
      if (options.progress) options.progress(done.fetch_add(1) + 1, trials.size());
    }
  };

  const int threads = std::max(1, options.parallelism);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return summary;
}

}  // namespace citepref
