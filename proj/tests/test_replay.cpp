#include <gtest/gtest.h>

#include "axregion/replay.hpp"
#include "axregion/synthetic.hpp"
#include "test_util.hpp"

using namespace axregion;
using axregion::testing::fixture_dir;

namespace {

std::vector<TraceRecord> multi_page() { return load_trace(fixture_dir() / "traces/multi_page_5.jsonl"); }

ReplayResult run(const std::vector<TraceRecord>& trace, const RegionSelector& selector,
                 std::size_t* calls = nullptr) {
  const auto model = rule_model();
  auto partitioner = Partitioner::from_model(model);
  const HeuristicAbstractor abstractor;
  ReplayBackends backends{partitioner, abstractor, selector};
  auto result = replay(trace, backends, "t");
  if (calls) *calls = partitioner.calls();
  return result;
}

}  // namespace

TEST(Replay, SingleStep) {
  auto trace = multi_page();
  trace.erase(trace.begin() + 1, trace.end());
  std::size_t calls = 0;
  const auto r = run(trace, KeywordSelector(), &calls);
  ASSERT_EQ(r.report.steps.size(), 1u);
  ASSERT_EQ(r.digests.size(), 1u);
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(r.report.pages, 1u);
  EXPECT_EQ(r.report.decompose_calls, 1u);
  EXPECT_TRUE(r.report.steps[0].new_page);
  EXPECT_EQ(r.report.steps[0].added + r.report.steps[0].removed + r.report.steps[0].modified, 0u);
  EXPECT_EQ(r.report.steps[0].digest_tokens, token_count(r.digests[0]));
  EXPECT_GT(r.report.steps[0].selection_tokens, 0u);
}

TEST(Replay, MultiPageCountsAndViewAll) {
  const auto trace = multi_page();
  const auto r = run(trace, KeywordSelector(3));
  ASSERT_EQ(r.report.steps.size(), trace.size());
  EXPECT_EQ(r.report.pages, 5u);
  EXPECT_EQ(r.report.decompose_calls, 5u);
  EXPECT_EQ(r.report.view_all_count, 2u);
  // Oracle: a step renders under view_all when an earlier record of the same
  // url run issued view_all().
  bool active = false;
  std::size_t pages = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool fresh = i == 0 || trace[i].url != trace[i - 1].url;
    if (fresh) active = false, ++pages;
    EXPECT_EQ(r.report.steps[i].new_page, fresh) << i;
    EXPECT_EQ(r.report.steps[i].view_all_active, active) << i;
    if (!fresh) EXPECT_EQ(r.report.steps[i].selection_tokens, 0u) << i;
    if (is_view_all(trace[i].action)) active = true;
  }
  EXPECT_EQ(pages, 5u);
  const auto& t = r.report.totals;
  EXPECT_EQ(t.pipeline_tokens, t.actor_observation_tokens + t.view_all_tokens + t.selection_tokens);
  EXPECT_GT(t.view_all_tokens, 0u);
  EXPECT_NEAR(t.actor_observation_share + t.view_all_share + t.selection_share, 1.0, 1e-12);
}

TEST(Replay, SelectingEverythingGivesNoReduction) {
  std::set<std::size_t> everything;
  for (std::size_t i = 0; i < 1000; ++i) everything.insert(i);
  const auto r = run(multi_page(), FixedSelector(everything));
  for (const auto& s : r.report.steps) {
    EXPECT_GE(s.digest_tokens, s.baseline_tokens);
    EXPECT_TRUE(s.no_reduction);
    EXPECT_EQ(s.selected_regions, s.region_count);
  }
  EXPECT_EQ(r.report.no_reduction_steps, r.report.steps.size());
  EXPECT_NE(r.report.to_text().find("[no reduction]"), std::string::npos);
}

TEST(Replay, Deterministic) {
  const auto trace = multi_page();
  const auto a = run(trace, KeywordSelector(3));
  const auto b = run(trace, KeywordSelector(3));
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  EXPECT_EQ(a.report.to_text(), b.report.to_text());
  EXPECT_EQ(a.digests, b.digests);
}

TEST(Replay, ReportJsonShape) {
  const auto r = run(multi_page(), KeywordSelector(3));
  const auto j = r.report.to_json();
  EXPECT_NE(j.find(kReplaySchema), std::string::npos);
  EXPECT_NE(j.find("\"decompose_calls\""), std::string::npos);
}

TEST(Trace, ParseErrorsCarryLineNumbers) {
  const std::string good = format_trace_record(0, "u", "click('1')", parse_axtree("[1] main\n", "u"), "task");
  try {
    parse_trace(good + "\n\n{not json}\n");
    FAIL();
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_trace(good + "\n{\"url\": \"u\", \"axtree\": \"[1] main\\n\\t\\t[2] x\"}\n");
    FAIL();
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_trace("{\"axtree\": \"[1] main\"}\n"), TraceParseError);
  EXPECT_THROW(parse_trace("[1, 2]\n"), TraceParseError);
}

TEST(Trace, RecordRoundTripAndTaskCarry) {
  const auto tree = parse_axtree("[1] main\n\t[2] link 'a b'\n", "http://x/");
  const auto text = format_trace_record(4, "http://x/", "click('2')", tree, "do it") + "\n" +
                    format_trace_record(5, "http://x/", "", tree) + "\n";
  const auto recs = parse_trace(text);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].step, 4);
  EXPECT_EQ(recs[0].task, std::optional<std::string>("do it"));
  EXPECT_FALSE(recs[1].task);
  EXPECT_EQ(recs[0].snapshot, tree);
  EXPECT_EQ(recs[1].action, "");
  EXPECT_EQ(recs[1].line, 2u);
}

TEST(Trace, ActionHelpers) {
  EXPECT_EQ(action_target("click('a12')"), std::optional<std::string>("a12"));
  EXPECT_EQ(action_target("fill(\"7\", 'x')"), std::optional<std::string>("7"));
  EXPECT_FALSE(action_target("stop()"));
  EXPECT_TRUE(is_view_all("view_all()"));
  EXPECT_TRUE(is_view_all("  view_all ( ) "));
  EXPECT_FALSE(is_view_all("view_all('x')"));
}
