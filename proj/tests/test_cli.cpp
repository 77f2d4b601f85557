#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "citepref/util.hpp"
#include "support/temp_dir.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout and stderr merged.
Result cli(const std::string& args) {
  const std::string cmd = std::string(CITEPREF_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string source(const std::string& rel) { return std::string(CITEPREF_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  const Result r = cli("");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("pipeline"), std::string::npos);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
}

TEST(Cli, DistinctExitCodes) {
  testing_support::TempDir dir("cli");
  EXPECT_EQ(cli("plan --bogus-flag").code, 2);
  EXPECT_EQ(cli("fit --outcomes " + (dir / "nope.jsonl").string() + " --out " + (dir / "f.jsonl").string()).code, 3);
  citepref::write_file(dir / "bad.yaml", "corpus: c.jsonl\nreps: 0\nbackends: [{id: s, kind: simulator}]\n");
  const Result bad_cfg = cli("pipeline --config " + (dir / "bad.yaml").string());
  EXPECT_EQ(bad_cfg.code, 4);
  EXPECT_NE(bad_cfg.out.find("reps"), std::string::npos);
  citepref::write_file(dir / "broken.jsonl", "{not json\n");
  EXPECT_EQ(cli("fit --outcomes " + (dir / "broken.jsonl").string() + " --out " + (dir / "f.jsonl").string()).code, 5);
}

TEST(Cli, PlanPrintsFullTotal) {
  testing_support::TempDir dir("cli");
  ASSERT_EQ(cli("--seed 1 simulate --out " + (dir / "full.jsonl").string() + " --per-factor 80").code, 0);
  const Result r = cli("plan --corpus " + (dir / "full.jsonl").string() + " --models 6 --reps 5");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("252,000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("42,000"), std::string::npos);
}

TEST(Cli, StagesComposeThroughFiles) {
  testing_support::TempDir dir("cli");
  const std::string d = dir.path().string();
  citepref::write_file(dir / "run.yaml",
                       "synth_corpus: {factors: [3, 15], per_factor: 4}\nseed: 5\nreps: 2\noutput_dir: " + d +
                           "/out\nbackends: [{id: sim, kind: simulator, factor_gamma0: {3: 2.0}}]\n");
  ASSERT_EQ(cli("--seed 5 simulate --out " + d + "/c.jsonl --factors 3,15 --per-factor 4").code, 0);
  ASSERT_EQ(cli("--seed 5 plan --config " + d + "/run.yaml --out " + d + "/plan.jsonl").code, 0);
  const Result run = cli("run --config " + d + "/run.yaml --plan " + d + "/plan.jsonl --log " + d + "/trials.jsonl");
  ASSERT_EQ(run.code, 0) << run.out;
  // The config synthesizes its corpus from the same seed, so the simulate output matches it.
  const Result ex = cli("extract --plan " + d + "/plan.jsonl --log " + d + "/trials.jsonl --corpus " + d +
                        "/c.jsonl --out " + d + "/outcomes.jsonl");
  ASSERT_EQ(ex.code, 0) << ex.out;
  ASSERT_EQ(cli("fit --outcomes " + d + "/outcomes.jsonl --out " + d + "/fits.jsonl").code, 0);
  const Result rep = cli("report --fits " + d + "/fits.jsonl --format json --out " + d + "/report.json");
  ASSERT_EQ(rep.code, 0) << rep.out;
  const auto j = citepref::Json::parse(citepref::read_file(dir / "report.json"));
  EXPECT_EQ(j["factors"].size(), 2u);
}

TEST(Cli, PipelineIsDeterministic) {
  testing_support::TempDir dir("cli");
  const std::string cfg = source("configs/desk.yaml");
  const Result a = cli("pipeline --config " + cfg + " --output-dir " + (dir / "a").string());
  const Result b = cli("pipeline --config " + cfg + " --output-dir " + (dir / "b").string());
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  for (const char* f : {"outcomes.jsonl", "fits.jsonl", "report.txt", "report.json"}) {
    EXPECT_EQ(citepref::read_file(dir / "a" / f), citepref::read_file(dir / "b" / f)) << f;
  }
  const std::string report = citepref::read_file(dir / "a" / "report.txt");
  int rows = 0;
  for (std::size_t pos = 0; (pos = report.find("\n| ", pos)) != std::string::npos; ++pos) ++rows;
  EXPECT_EQ(rows, 1 + 18);  // header + factors
}

TEST(Cli, AuditCommand) {
  testing_support::TempDir dir("cli");
  citepref::write_file(dir / "answer.txt", "I recommend the Trailmark Ridge: https://trailmark.example/ridge\n");
  citepref::write_file(dir / "page.txt", "The Zephyr Pulse 2 fitness tracker. Contact us for pricing details.\n");
  citepref::write_file(dir / "brand.yaml", "names: [Zephyr Pulse 2]\ndomains: [zephyr.example]\n");
  const Result r = cli("audit --answer " + (dir / "answer.txt").string() + " --page " + (dir / "page.txt").string() +
                       " --brand " + (dir / "brand.yaml").string() + " --query 'fitness tracker' --out " +
                       (dir / "audit.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("improve_seo"), std::string::npos);
  EXPECT_EQ(citepref::Json::parse(citepref::read_file(dir / "audit.json"))["route"], "improve_seo");
}
