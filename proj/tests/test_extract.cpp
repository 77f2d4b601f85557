#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "citepref/extract.hpp"
#include "citepref/simulator.hpp"
#include "support/extraction_cases.hpp"
#include "support/temp_dir.hpp"

using namespace citepref;

namespace {

TrialSpec spec_for(const std::string& id) { return {id, "ex-1", 0, Order::AB, 1, "m"}; }

Outcome classify(const std::string& answer) {
  static const Corpus corpus = cases::extraction_corpus();
  return extract_outcome({"t", answer, 1, {}, ""}, spec_for("t"), corpus);
}

Outcome with_count(CitationResult r, int urls) {
  Outcome o;
  o.result = r;
  o.url_count = urls;
  if (r == CitationResult::Excluded) o.exclusion_reason = urls == 0 ? ExclusionReason::NoUrl : ExclusionReason::ForeignFirstUrl;
  return o;
}

}  // namespace

TEST(Extract, FirstUrlDecides) {
  const Outcome o = classify("See https://a.example/x1 and https://b.example/y2");
  EXPECT_EQ(o.result, CitationResult::AFirst);
  EXPECT_EQ(o.url_count, 2);
  EXPECT_FALSE(o.exclusion_reason);
  EXPECT_EQ(o.scenario_id, "ex-1");
  EXPECT_EQ(o.factor_id, 3);
}

TEST(Extract, NoUrlExcluded) {
  const Outcome o = classify("I would go with the first one.");
  EXPECT_EQ(o.result, CitationResult::Excluded);
  EXPECT_EQ(o.exclusion_reason, ExclusionReason::NoUrl);
  EXPECT_EQ(o.url_count, 0);
}

TEST(Extract, ForeignFirstUrlExcluded) {
  const Outcome o = classify("https://other.example/z then https://b.example/y2");
  EXPECT_EQ(o.result, CitationResult::Excluded);
  EXPECT_EQ(o.exclusion_reason, ExclusionReason::ForeignFirstUrl);
}

TEST(Extract, CraftedTable) {
  for (const auto& c : cases::extraction_table()) {
    const Outcome o = classify(c.answer);
    EXPECT_EQ(o.result, c.result) << c.note;
    EXPECT_EQ(o.exclusion_reason, c.reason) << c.note;
    if (c.url_count >= 0) EXPECT_EQ(o.url_count, c.url_count) << c.note;
    // Invariants tying result, reason and count together.
    EXPECT_EQ(o.result == CitationResult::Excluded, o.exclusion_reason.has_value()) << c.note;
    if (o.url_count == 0) EXPECT_EQ(o.exclusion_reason, ExclusionReason::NoUrl) << c.note;
  }
}

TEST(Canonicalize, RulesAndIdempotence) {
  EXPECT_EQ(canonicalize_url("https://Shop.Example.COM/Path/"), "shop.example.com/Path");
  EXPECT_EQ(canonicalize_url("http://shop.example.com/Path"), "shop.example.com/Path");
  EXPECT_EQ(canonicalize_url("shop.example.com/Path/"), "shop.example.com/Path");
  EXPECT_EQ(canonicalize_url("https://x.example/a/?q=1"), "x.example/a?q=1");
  EXPECT_EQ(canonicalize_url("https://x.example/a?q=B/"), "x.example/a?q=B/");
  EXPECT_EQ(canonicalize_url("https://X.example"), "x.example");
  for (const char* u : {"HTTPS://A.b/C/", "a.b", "http://a.b/c?d=E#F", "//A.B/c//", "https://a.b/?x"}) {
    const std::string once = canonicalize_url(u);
    EXPECT_EQ(canonicalize_url(once), once) << u;
  }
}

TEST(FindUrls, ReadingOrderAndTrimming) {
  const auto urls = find_urls("a (see https://x.example/a_(b)) and http://y.example/c.");
  ASSERT_EQ(urls.size(), 2u);
  EXPECT_EQ(urls[0], "https://x.example/a_(b)");
  EXPECT_EQ(urls[1], "http://y.example/c");
  EXPECT_TRUE(find_urls("nohttps://x.example").empty());
}

TEST(UrlStats, Shares) {
  std::vector<Outcome> v;
  for (int i = 0; i < 8; ++i) v.push_back(with_count(CitationResult::AFirst, 1));
  v.push_back(with_count(CitationResult::BFirst, 2));
  v.push_back(with_count(CitationResult::Excluded, 0));
  const UrlCountStats s = url_stats(v);
  EXPECT_FALSE(s.empty);
  EXPECT_EQ(s.total, 10u);
  EXPECT_DOUBLE_EQ(s.one_url_share, 0.8);
  EXPECT_DOUBLE_EQ(s.multi_url_share, 0.1);
  EXPECT_DOUBLE_EQ(s.no_url_share, 0.1);
  EXPECT_DOUBLE_EQ(s.exclusion_share, 0.1);

  const UrlCountStats all = url_stats({with_count(CitationResult::Excluded, 0), with_count(CitationResult::Excluded, 1)});
  EXPECT_DOUBLE_EQ(all.exclusion_share, 1.0);
  EXPECT_TRUE(url_stats({}).empty);
}

TEST(Extract, SerialOpenMpAndOrderInsensitive) {
  const Corpus corpus = synth_corpus(SynthConfig{{1, 2, 15}, 4}, 3);
  const TrialPlan plan = build_plan(corpus, {"m"}, 3, 3);
  SimConfig cfg;
  cfg.seed = 1;
  cfg.no_url_rate = 0.2;
  cfg.foreign_url_rate = 0.2;
  SimState state(cfg);
  std::vector<RawTrialResult> raws;
  for (const auto& t : plan.trials) {
    const auto m = build_messages(t, corpus);
    raws.push_back({t.trial_id, simulate_answer({t, corpus.at(t.scenario_id).factor_id}, m, cfg, state), 1, {}, ""});
  }
  const auto serial = extract_outcomes_serial(raws, plan.trials, corpus);
  EXPECT_EQ(serial, extract_outcomes_openmp(raws, plan.trials, corpus));

  std::size_t a = 0, b = 0, x = 0;
  for (const auto& o : serial) {
    (o.result == CitationResult::AFirst ? a : o.result == CitationResult::BFirst ? b : x) += 1;
  }
  EXPECT_EQ(a + b + x, plan.trials.size());
  EXPECT_GT(x, 0u);

  // Shuffled log: extract_plan still returns plan order with identical outcomes.
  std::vector<RawTrialResult> shuffled = raws;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(4));
  shuffled.pop_back();
  std::vector<std::string> missing;
  const auto from_plan = extract_plan(plan.trials, shuffled, corpus, &missing, Execution::Serial);
  EXPECT_EQ(missing.size(), 1u);
  EXPECT_EQ(from_plan.size(), serial.size() - 1);
  std::size_t j = 0;
  for (const auto& o : serial) {
    if (o.trial_id == missing[0]) continue;
    EXPECT_EQ(from_plan[j++], o);
  }
}

TEST(Extract, OutcomeFileRoundTrip) {
  testing_support::TempDir dir("extract");
  std::vector<Outcome> v{classify("https://a.example/x1"), classify("none"), classify("https://z.example")};
  save_outcomes(v, dir / "o.jsonl");
  EXPECT_EQ(load_outcomes(dir / "o.jsonl"), v);
}
