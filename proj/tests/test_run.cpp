#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "citepref/extract.hpp"
#include "citepref/http_backend.hpp"
#include "citepref/runner.hpp"
#include "citepref/simulator.hpp"
#include "support/temp_dir.hpp"

using namespace citepref;

namespace {

struct Batch {
  Corpus corpus;
  std::vector<TrialSpec> specs;
  std::vector<TrialContext> contexts;
  std::vector<MessageSequence> messages;
};

// n trials of one scenario in the given order, distinct ids via the replicate field.
Batch batch(int n, Order order, int factor = 1) {
  Batch b;
  b.corpus = synth_corpus(SynthConfig{{factor}, 1}, 4);
  const auto& s = b.corpus.scenarios()[0];
  for (int r = 1; r <= n; ++r) {
    TrialSpec t{make_trial_id(s.scenario_id, 0, order, r, "sim"), s.scenario_id, 0, order, r, "sim"};
    b.specs.push_back(t);
    b.contexts.push_back({t, s.factor_id});
    b.messages.push_back(build_messages(t, b.corpus));
  }
  return b;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double a_first_share(const Batch& b, const std::vector<std::string>& answers) {
  const std::string a = canonicalize_url(b.corpus.scenarios()[0].variant_a.url);
  int hits = 0;
  for (const auto& text : answers) {
    const auto urls = find_urls(text);
    if (!urls.empty() && canonicalize_url(urls[0]) == a) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(answers.size());
}

SimConfig no_noise() {
  SimConfig c;
  c.no_url_rate = 0.0;
  c.foreign_url_rate = 0.0;
  c.multi_url_rate = 0.0;
  return c;
}

}  // namespace

TEST(Simulator, NullModelIsFiftyFifty) {
  const Batch b = batch(10000, Order::AB);
  SimConfig cfg = no_noise();
  cfg.seed = 17;
  EXPECT_NEAR(a_first_share(b, simulate_answers_serial(b.contexts, b.messages, cfg)), 0.5, 0.02);
}

TEST(Simulator, OrderCellsConvergeToLogistic) {
  SimConfig cfg = no_noise();
  cfg.gamma0 = 0.3;
  cfg.gamma1 = 1.0;
  cfg.seed = 5;
  for (Order o : {Order::AB, Order::BA}) {
    const Batch b = batch(10000, o);
    const double p = logistic(cfg.gamma0 + cfg.gamma1 * position_indicator(o));
    const double tol = 3.0 * std::sqrt(p * (1 - p) / 10000.0);
    EXPECT_NEAR(a_first_share(b, simulate_answers_openmp(b.contexts, b.messages, cfg)), p, tol) << to_string(o);
  }
}

TEST(Simulator, ForcedProbabilityCitesAFirst) {
  SimConfig cfg = no_noise();
  cfg.gamma0 = 1000.0;
  cfg.multi_url_rate = 1.0;
  for (Order o : {Order::AB, Order::BA}) {
    const Batch b = batch(200, o);
    const auto answers = simulate_answers_serial(b.contexts, b.messages, cfg);
    EXPECT_EQ(a_first_share(b, answers), 1.0);
    const std::string a = b.corpus.scenarios()[0].variant_a.url;
    const std::string other = b.corpus.scenarios()[0].variant_b.url;
    for (const auto& text : answers) EXPECT_LT(text.find(a), text.find(other));
  }
}

TEST(Simulator, DefaultUrlMix) {
  const Batch b = batch(100000, Order::AB);
  SimConfig cfg;
  cfg.seed = 3;
  const auto answers = simulate_answers_openmp(b.contexts, b.messages, cfg);
  std::vector<RawTrialResult> raws;
  for (std::size_t i = 0; i < answers.size(); ++i) raws.push_back({b.specs[i].trial_id, answers[i], 1, {}, ""});
  const UrlCountStats st = url_stats(extract_outcomes_openmp(raws, b.specs, b.corpus));
  // 3-sigma binomial bands at n = 100,000.
  EXPECT_NEAR(st.no_url_share, 0.031, 3 * std::sqrt(0.031 * 0.969 / 1e5));
  EXPECT_NEAR(st.multi_url_share, 0.105, 0.006);
  EXPECT_NEAR(st.one_url_share, 0.864, 0.006);
}

TEST(Simulator, SerialAndOpenMpIdentical) {
  const Batch b = batch(3000, Order::BA);
  SimConfig cfg;
  cfg.gamma0 = 0.7;
  cfg.sigma_s = 0.4;
  cfg.sigma_so = 0.2;
  cfg.seed = 99;
  EXPECT_EQ(simulate_answers_serial(b.contexts, b.messages, cfg), simulate_answers_openmp(b.contexts, b.messages, cfg));
}

TEST(Simulator, ValidatesRates) {
  SimConfig c;
  c.no_url_rate = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.no_url_rate = 0.6;
  c.foreign_url_rate = 0.6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.sigma_s = -1.0;
  EXPECT_THROW(SimulatorBackend("x", c), std::invalid_argument);
}

namespace {

// Fails with the given kinds, then succeeds.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<BackendError::Kind> failures) : failures_(std::move(failures)) {}
  std::string id() const override { return "scripted"; }
  Completion complete(const MessageSequence& m, const TrialContext&) override {
    const int call = calls.fetch_add(1);
    if (call < static_cast<int>(failures_.size())) throw BackendError(failures_[call], "scripted failure");
    return {"Pick " + m.tool_response[0].url, "scripted"};
  }
  std::atomic<int> calls{0};

 private:
  std::vector<BackendError::Kind> failures_;
};

RetryPolicy fast_policy(int attempts) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.initial_delay = std::chrono::milliseconds(1);
  return p;
}

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST(Runner, RetriesTransientThenSucceeds) {
  testing_support::TempDir dir("run");
  const Batch b = batch(1, Order::AB);
  TrialLog log(dir / "trials.jsonl");
  ScriptedBackend backend({BackendError::Kind::Transient, BackendError::Kind::Transient});
  std::vector<std::chrono::milliseconds> sleeps;
  const TrialRun r = run_trial(b.specs[0], b.corpus, backend, log, fast_policy(3),
                               [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  EXPECT_EQ(r.status, TrialStatus::Completed);
  EXPECT_EQ(r.attempts, 3);
  ASSERT_TRUE(r.result);
  EXPECT_EQ(r.result->attempts, 3);
  EXPECT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(log.size(), 1u);
}

TEST(Runner, CachedTrialMakesNoCall) {
  testing_support::TempDir dir("run");
  const Batch b = batch(1, Order::AB);
  TrialLog log(dir / "trials.jsonl");
  ScriptedBackend backend({});
  ASSERT_EQ(run_trial(b.specs[0], b.corpus, backend, log, fast_policy(3), kNoSleep).status, TrialStatus::Completed);
  const TrialRun again = run_trial(b.specs[0], b.corpus, backend, log, fast_policy(3), kNoSleep);
  EXPECT_EQ(again.status, TrialStatus::Cached);
  EXPECT_EQ(backend.calls.load(), 1);

  // Reopening the log keeps the record.
  TrialLog reopened(dir / "trials.jsonl");
  EXPECT_EQ(run_trial(b.specs[0], b.corpus, backend, reopened, fast_policy(3), kNoSleep).status, TrialStatus::Cached);
  EXPECT_EQ(backend.calls.load(), 1);
}

TEST(Runner, AuthFailsFastAndPermanentIsNotRetried) {
  testing_support::TempDir dir("run");
  const Batch b = batch(1, Order::AB);
  TrialLog log(dir / "trials.jsonl");
  ScriptedBackend auth({BackendError::Kind::Auth});
  TrialRun r = run_trial(b.specs[0], b.corpus, auth, log, fast_policy(5), kNoSleep);
  EXPECT_EQ(r.status, TrialStatus::Failed);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(r.error_kind, BackendError::Kind::Auth);
  EXPECT_EQ(log.size(), 0u);

  ScriptedBackend perm({BackendError::Kind::Permanent});
  r = run_trial(b.specs[0], b.corpus, perm, log, fast_policy(5), kNoSleep);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(r.status, TrialStatus::Failed);
}

TEST(Runner, ExhaustedRetriesFail) {
  testing_support::TempDir dir("run");
  const Batch b = batch(1, Order::AB);
  TrialLog log(dir / "trials.jsonl");
  ScriptedBackend backend(std::vector<BackendError::Kind>(5, BackendError::Kind::Transient));
  const TrialRun r = run_trial(b.specs[0], b.corpus, backend, log, fast_policy(3), kNoSleep);
  EXPECT_EQ(r.status, TrialStatus::Failed);
  EXPECT_EQ(backend.calls.load(), 3);
}

TEST(Runner, PlanRunIsExactlyOncePerTrial) {
  testing_support::TempDir dir("run");
  const Corpus corpus = synth_corpus(SynthConfig{{1, 2, 15}, 3}, 8);
  const TrialPlan plan = build_plan(corpus, {"m1", "m2"}, 2, 1);
  SimulatorBackend sim1("m1", SimConfig{}), sim2("m2", SimConfig{});
  RunOptions opts;
  opts.parallelism = 4;
  opts.sleep = kNoSleep;
  {
    TrialLog log(dir / "trials.jsonl");
    const RunSummary s = run_plan(plan.trials, corpus, {{"m1", &sim1}, {"m2", &sim2}}, log, opts);
    EXPECT_EQ(s.completed, plan.trials.size());
    EXPECT_EQ(s.failed, 0u);
  }
  TrialLog log(dir / "trials.jsonl");
  const RunSummary again = run_plan(plan.trials, corpus, {{"m1", &sim1}, {"m2", &sim2}}, log, opts);
  EXPECT_EQ(again.cached, plan.trials.size());
  EXPECT_EQ(load_trial_log(dir / "trials.jsonl").size(), plan.trials.size());
  EXPECT_THROW(run_plan(plan.trials, corpus, {{"m1", &sim1}}, log, opts), std::invalid_argument);
}

TEST(Runner, AuthFailureSkipsRestOfModel) {
  testing_support::TempDir dir("run");
  const Corpus corpus = synth_corpus(SynthConfig{{1}, 2}, 8);
  const TrialPlan plan = build_plan(corpus, {"m"}, 1, 1);
  ScriptedBackend backend(std::vector<BackendError::Kind>(100, BackendError::Kind::Auth));
  TrialLog log(dir / "trials.jsonl");
  RunOptions opts;
  opts.sleep = kNoSleep;
  const RunSummary s = run_plan(plan.trials, corpus, {{"m", &backend}}, log, opts);
  EXPECT_TRUE(s.auth_failure);
  EXPECT_EQ(s.failed, plan.trials.size());
  EXPECT_EQ(backend.calls.load(), 1);
}

TEST(TrialLogResume, TornFinalLineIsDropped) {
  testing_support::TempDir dir("run");
  const auto path = dir / "trials.jsonl";
  {
    TrialLog log(path);
    log.append({"t1", "answer one", 1, std::chrono::milliseconds(3), "m"});
    log.append({"t2", "answer two", 2, std::chrono::milliseconds(4), "m"});
    EXPECT_FALSE(log.append({"t2", "dup", 1, {}, ""}));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"trial_id":"t3","answer_te)";
  }
  {
    TrialLog log(path);
    EXPECT_EQ(log.size(), 2u);
    EXPECT_FALSE(log.contains("t3"));
    EXPECT_EQ(log.find("t2")->attempts, 2);
    EXPECT_TRUE(log.append({"t3", "answer three", 1, {}, "m"}));
  }
  const auto records = load_trial_log(path);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[2].trial_id, "t3");
  EXPECT_EQ(records[0], raw_result_from_json(to_json(records[0])));
}

TEST(Retry, BackoffGrowsAndIsCapped) {
  RetryPolicy p;
  p.jitter = 0.0;
  EXPECT_EQ(p.backoff(1, 1).count(), 500);
  EXPECT_EQ(p.backoff(2, 1).count(), 1000);
  EXPECT_EQ(p.backoff(20, 1).count(), 30000);
  p.jitter = 0.5;
  for (int s = 0; s < 50; ++s) {
    const auto d = p.backoff(1, static_cast<std::uint64_t>(s)).count();
    EXPECT_GE(d, 250);
    EXPECT_LE(d, 750);
    EXPECT_EQ(d, p.backoff(1, static_cast<std::uint64_t>(s)).count());
  }
}

namespace {

// Local server that records requests and answers from a script of statuses.
class FakeApi {
 public:
  explicit FakeApi(std::vector<int> statuses) : statuses_(std::move(statuses)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      requests.push_back(req);
      const int status = calls < statuses_.size() ? statuses_[calls] : 200;
      ++calls;
      res.status = status;
      if (status != 200) {
        res.set_content(R"({"error":"nope"})", "application/json");
        return;
      }
      const Json body = Json::parse(req.body);
      const Json reply = req.path == "/v1/messages"
                             ? Json{{"model", "m"}, {"content", {{{"type", "text"}, {"text", "See https://a.example/x"}}}}}
                             : Json{{"model", "m"}, {"choices", {{{"message", {{"content", "See https://a.example/x"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    };
    server_.Post("/v1/chat/completions", handler);
    server_.Post("/v1/messages", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeApi() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<httplib::Request> requests;
  std::size_t calls = 0;

 private:
  std::vector<int> statuses_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
};

}  // namespace

TEST(HttpBackend, OpenAiDialectRoundTrip) {
  FakeApi api({});
  ::setenv("CITEPREF_TEST_TOKEN", "sekrit", 1);
  HttpBackendConfig cfg;
  cfg.id = "o";
  cfg.base_url = api.base_url();
  cfg.model = "gpt-test";
  cfg.token_env = "CITEPREF_TEST_TOKEN";
  cfg.temperature = 0.0;
  HttpBackend backend(cfg);
  const Batch b = batch(1, Order::BA);
  const Completion c = backend.complete(b.messages[0], b.contexts[0]);
  EXPECT_EQ(c.text, "See https://a.example/x");
  ASSERT_EQ(api.requests.size(), 1u);
  EXPECT_EQ(api.requests[0].get_header_value("Authorization"), "Bearer sekrit");
  const Json body = Json::parse(api.requests[0].body);
  EXPECT_EQ(body["model"], "gpt-test");
  EXPECT_EQ(body["max_completion_tokens"], 1024);
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 4u);
  EXPECT_EQ(body["messages"][0]["content"], std::string(kSystemPrompt));
  EXPECT_EQ(body["messages"][2]["tool_calls"][0]["function"]["name"], "web_search");
  EXPECT_EQ(body["messages"][3]["content"], tool_response_text(b.messages[0]));
}

TEST(HttpBackend, AnthropicDialectRoundTrip) {
  FakeApi api({});
  ::setenv("CITEPREF_TEST_TOKEN", "k2", 1);
  HttpBackendConfig cfg;
  cfg.base_url = api.base_url();
  cfg.model = "claude-test";
  cfg.dialect = ApiDialect::AnthropicMessages;
  cfg.token_env = "CITEPREF_TEST_TOKEN";
  HttpBackend backend(cfg);
  const Batch b = batch(1, Order::AB);
  EXPECT_EQ(backend.complete(b.messages[0], b.contexts[0]).text, "See https://a.example/x");
  EXPECT_EQ(api.requests[0].get_header_value("x-api-key"), "k2");
  EXPECT_FALSE(api.requests[0].get_header_value("anthropic-version").empty());
  const Json body = Json::parse(api.requests[0].body);
  EXPECT_EQ(body["system"], std::string(kSystemPrompt));
  EXPECT_FALSE(body.contains("temperature"));
  EXPECT_EQ(body["max_tokens"], 1024);
  EXPECT_EQ(body["messages"][2]["content"][0]["content"], tool_response_text(b.messages[0]));
}

TEST(HttpBackend, RateLimitIsRetriedThroughRunner) {
  testing_support::TempDir dir("http");
  FakeApi api({429, 503});
  HttpBackendConfig cfg;
  cfg.base_url = api.base_url();
  cfg.model = "m";
  HttpBackend backend(cfg);
  const Batch b = batch(1, Order::AB);
  TrialLog log(dir / "trials.jsonl");
  const TrialRun r = run_trial(b.specs[0], b.corpus, backend, log, fast_policy(3), kNoSleep);
  EXPECT_EQ(r.status, TrialStatus::Completed);
  EXPECT_EQ(r.attempts, 3);
}

TEST(HttpBackend, UnauthorizedAndMissingToken) {
  FakeApi api({401});
  HttpBackendConfig cfg;
  cfg.base_url = api.base_url();
  cfg.model = "m";
  HttpBackend backend(cfg);
  const Batch b = batch(1, Order::AB);
  try {
    backend.complete(b.messages[0], b.contexts[0]);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::Auth);
    EXPECT_EQ(e.status(), 401);
  }
  cfg.token_env = "CITEPREF_TEST_TOKEN_UNSET";
  ::unsetenv("CITEPREF_TEST_TOKEN_UNSET");
  HttpBackend no_token(cfg);
  try {
    no_token.complete(b.messages[0], b.contexts[0]);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::Auth);
  }
  EXPECT_EQ(api.calls, 1u);
}

TEST(HttpBackend, StatusClassesAndParsing) {
  EXPECT_FALSE(classify_status(200));
  EXPECT_EQ(classify_status(429), BackendError::Kind::Transient);
  EXPECT_EQ(classify_status(500), BackendError::Kind::Transient);
  EXPECT_EQ(classify_status(403), BackendError::Kind::Auth);
  EXPECT_EQ(classify_status(400), BackendError::Kind::Permanent);
  EXPECT_THROW(parse_response_text(ApiDialect::OpenAIChat, Json{{"choices", Json::array()}}), BackendError);
  EXPECT_EQ(parse_response_text(ApiDialect::AnthropicMessages,
                                Json{{"content", {{{"type", "text"}, {"text", "a"}}, {{"type", "text"}, {"text", "b"}}}}}),
            "a\nb");
  EXPECT_THROW(parse_dialect("gemini"), std::invalid_argument);
}
