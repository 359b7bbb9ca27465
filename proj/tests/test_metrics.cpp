#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "axregion/metrics.hpp"
#include "axregion/rng.hpp"
#include "axregion/synthetic.hpp"

using namespace axregion;

namespace {

EdgeLabelSet labels_from_bits(const std::vector<int>& bits) {
  EdgeLabelSet out;
  for (std::size_t i = 0; i < bits.size(); ++i)
    out.set("p", "c" + std::to_string(i), bits[i] ? EdgeLabel::kCut : EdgeLabel::kMerge);
  return out;
}

RegionPartition random_partition(const AXTree& t, Rng& rng) {
  const TreeIndex index(t);
  std::vector<std::string> roots;
  const double p = rng.uniform();
  for (std::size_t i = 1; i < index.size(); ++i)
    if (rng.chance(p)) roots.push_back(index.node(i).id);
  return partition_from_region_roots(t, roots);
}

const std::vector<std::string> kRoles = {"generic", "link", "list", "button"};

}  // namespace

TEST(EdgeF1, Examples) {
  const auto truth = labels_from_bits({1, 0, 1, 0, 0, 1, 0, 0, 0, 0});
  auto s = edge_f1(truth, truth);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f1, 1.0);

  s = edge_f1(labels_from_bits(std::vector<int>(10, 0)), truth);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);

  // 2 TP (0, 2), 1 FP (4), 1 FN (5).
  s = edge_f1(labels_from_bits({1, 0, 1, 0, 1, 0, 0, 0, 0, 0}), truth);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.f1, 2.0 / 3.0);

  const auto none = labels_from_bits({0, 0, 0});
  EXPECT_EQ(edge_f1(none, none).f1, 1.0);
}

TEST(EdgeF1, DomainMismatch) {
  try {
    edge_f1(labels_from_bits({1, 0}), labels_from_bits({1, 0, 0}));
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kDomainMismatch);
  }
  EdgeLabelSet other;
  other.set("q", "c0", EdgeLabel::kCut);
  EXPECT_THROW(edge_f1(other, labels_from_bits({1})), MetricError);
}

TEST(EdgeF1, InvariantUnderPartitionRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_tree(rng, 12, kRoles);
    const auto a = labels_from_partition(t, random_partition(t, rng));
    const auto b = labels_from_partition(t, random_partition(t, rng));
    const auto direct = edge_f1(a, b);
    const auto via = edge_f1(labels_from_partition(t, partition_from_labels(t, a)),
                             labels_from_partition(t, partition_from_labels(t, b)));
    EXPECT_EQ(direct.f1, via.f1);
    EXPECT_EQ(direct.precision, via.precision);
  }
}

TEST(RegionPrf, IdenticalPartitions) {
  const auto t = parse_axtree("[1] main\n\t[2] list\n\t\t[3] link 'a'\n\t[4] form\n", "u");
  const auto p = partition_from_region_roots(t, {"2", "4"});
  const auto r = region_prf(p, p);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.matched.size(), 3u);
}

TEST(RegionPrf, SupersetMatchesAtTwoThirds) {
  // pred {a,b,c} vs truth {a,b}: IoU 2/3.
  const auto t = parse_axtree("[a] main\n\t[b] list\n\t[c] link 'x'\n", "u");
  const auto pred = partition_from_region_roots(t, {});
  const auto truth = partition_from_region_roots(t, {"c"});
  const auto r = region_prf(pred, truth);
  ASSERT_EQ(r.matched.size(), 1u);
  EXPECT_DOUBLE_EQ(r.matched[0].iou, 2.0 / 3.0);
  EXPECT_EQ(r.matched[0].truth_region, 0u);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

TEST(RegionPrf, NodeSetMismatch) {
  const auto a = parse_axtree("[1] main\n\t[2] link 'a'\n", "u");
  const auto b = parse_axtree("[1] main\n\t[3] link 'a'\n", "u");
  try {
    region_prf(partition_from_region_roots(a, {}), partition_from_region_roots(b, {}));
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kNodeSetMismatch);
  }
}

TEST(RegionPrf, StoredCountsReproduceReferenceRow) {
  const RegionCounts counts{3572, 4606, 4613};
  const auto s = counts.scores();
  EXPECT_NEAR(s.precision, 0.7755, 1e-4);
  EXPECT_NEAR(s.recall, 0.7743, 1e-4);
  EXPECT_NEAR(s.f1, 0.7749, 1e-4);
}

TEST(RegionPrf, PropertiesOnRandomPartitions) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto t = random_tree(rng, 15, kRoles);
    const auto a = random_partition(t, rng);
    const auto b = random_partition(t, rng);
    const auto ab = region_prf(a, b);
    const auto ba = region_prf(b, a);
    EXPECT_DOUBLE_EQ(ab.f1, ba.f1);
    EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
    EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
    std::set<std::size_t> truth_seen, pred_seen;
    for (const auto& m : ab.matched) {
      EXPECT_GE(m.iou, 0.5);
      EXPECT_TRUE(truth_seen.insert(m.truth_region).second);
      EXPECT_TRUE(pred_seen.insert(m.pred_region).second);
    }
    EXPECT_GE(ab.f1, 0.0);
    EXPECT_LE(ab.f1, 1.0);
  }
}

TEST(LcaDepthRatio, Examples) {
  const auto t = parse_axtree("[0] main\n\t[1] list\n\t\t[2] listitem\n\t\t\t[3] link 'a'\n\t\t\t\t[4] image 'i'\n\t[5] button 'b'\n", "u");
  EXPECT_EQ(lca_depth_ratio(t, "1", "5"), 0.0);
  EXPECT_EQ(lca_depth_ratio(t, "3", "4"), 0.75);
  EXPECT_EQ(lca_depth_ratio(t, "2", "2"), 0.5);
  EXPECT_EQ(lca_depth_ratio(t, "4", "4"), 1.0);
  const auto single = parse_axtree("[x] main\n", "u");
  EXPECT_EQ(lca_depth_ratio(single, "x", "x"), 0.0);
  try {
    lca_depth_ratio(t, "1", "zz");
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kUnknownId);
  }
}

TEST(LcaDepthRatio, RangeAndUnitIffSameDeepestNode) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_tree(rng, 20, kRoles);
    const TreeIndex index(t);
    for (int k = 0; k < 20; ++k) {
      const auto a = rng.below(index.size()), b = rng.below(index.size());
      const double r = lca_depth_ratio(index, a, b);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
      const bool same_deepest = a == b && index.depth(a) == index.max_depth() && index.max_depth() > 0;
      EXPECT_EQ(r == 1.0, same_deepest);
    }
  }
}

TEST(ChangeRatio, Examples) {
  const auto before = parse_axtree(
      "[1] main\n\t[2] a\n\t[3] a\n\t[4] a\n\t[5] a\n\t[6] a\n\t[7] a\n\t[8] a\n\t[9] a\n\t[10] a\n", "u");
  EXPECT_EQ(change_ratio(before, before), 0.0);
  const auto plus_one = parse_axtree(
      "[1] main\n\t[2] a\n\t[3] a\n\t[4] a\n\t[5] a\n\t[6] a\n\t[7] a\n\t[8] a\n\t[9] a\n\t[10] a\n\t[11] a\n", "u");
  EXPECT_DOUBLE_EQ(change_ratio(before, plus_one), 0.1);
  std::set<std::string> ids_a, ids_b;
  for (int i = 0; i < 10; ++i) ids_a.insert("a" + std::to_string(i)), ids_b.insert("b" + std::to_string(i));
  EXPECT_DOUBLE_EQ(change_ratio(ids_a, ids_b), 2.0);
  EXPECT_THROW(change_ratio(std::set<std::string>{}, ids_b), MetricError);
}

TEST(ChangeRatio, IgnoresSiblingOrderAndValueEdits) {
  const auto a = parse_axtree("[1] main\n\t[2] link 'x'\n\t[3] textbox '' 'v'\n", "u");
  const auto b = parse_axtree("[1] main\n\t[3] textbox '' 'changed'\n\t[2] link 'x'\n", "u");
  EXPECT_EQ(change_ratio(a, b), 0.0);
}

TEST(TokenCount, DefaultFormula) {
  EXPECT_EQ(token_count(""), 0u);
  EXPECT_EQ(token_count("aaaa"), 1u);
  // ceil(11/4) = 3, 2 words -> (3 + 2 + 1) / 2 = 3.
  EXPECT_EQ(token_count("hello world"), 3u);
  EXPECT_EQ(TokenCounter().name(), "approx-bytes4-words");
}

TEST(TokenCount, PluggableCounterMatchesExternalTokenizer) {
  // Stand-in tokenizer: every maximal run of letters/digits is one token, as
  // is every other non-space byte.
  auto external = [](std::string_view text) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < text.size();) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (std::isspace(c)) {
        ++i;
      } else if (std::isalnum(c)) {
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        ++n;
      } else {
        ++i;
        ++n;
      }
    }
    return n;
  };
  const TokenCounter counter(external, "alnum-runs");
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    std::string s;
    const auto len = rng.below(60);
    for (std::size_t k = 0; k < len; ++k) s.push_back(" ab1[]'\n"[rng.below(8)]);
    EXPECT_EQ(token_count(s, counter), external(s)) << s;
  }
  EXPECT_EQ(counter.name(), "alnum-runs");
}
