#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "axregion/axtree.hpp"
#include "axregion/rng.hpp"
#include "axregion/synthetic.hpp"
#include "test_util.hpp"

using namespace axregion;
using axregion::testing::fixture_files;
using axregion::testing::load_fixture_tree;
using axregion::testing::read_file;

namespace {

AXNode node(std::string id, std::string role, std::string name = "", std::vector<AXNode> kids = {}) {
  AXNode n;
  n.id = std::move(id);
  n.role = std::move(role);
  n.name = std::move(name);
  n.children = std::move(kids);
  return n;
}

AxTreeError::Kind parse_error_kind(std::string_view text) {
  try {
    parse_axtree(text, "u");
  } catch (const AxTreeError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return AxTreeError::Kind::kMalformedLine;
}

std::vector<std::string> preorder_ids(const AXNode& n) {
  std::vector<std::string> out{n.id};
  for (const auto& c : n.children) {
    auto sub = preorder_ids(c);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

}  // namespace

TEST(ParseAxtree, SingleLine) {
  const auto t = parse_axtree("[a1] link 'Home'", "http://x/");
  EXPECT_EQ(t.node_count(), 1u);
  EXPECT_EQ(t.root().id, "a1");
  EXPECT_EQ(t.root().role, "link");
  EXPECT_EQ(t.root().name, "Home");
  EXPECT_TRUE(t.root().value.empty());
  EXPECT_EQ(t.url(), "http://x/");
}

TEST(ParseAxtree, EmptyInputIsMalformed) {
  EXPECT_EQ(parse_error_kind(""), AxTreeError::Kind::kMalformedLine);
  EXPECT_EQ(parse_error_kind("\n\n  \n"), AxTreeError::Kind::kMalformedLine);
}

TEST(ParseAxtree, StructuralErrors) {
  EXPECT_EQ(parse_error_kind("[1] main\n\t\t[2] link 'x'\n"), AxTreeError::Kind::kIndentJump);
  EXPECT_EQ(parse_error_kind("[1] main\n[2] main\n"), AxTreeError::Kind::kMultipleRoots);
  EXPECT_EQ(parse_error_kind("[1] main\n\t[1] link\n"), AxTreeError::Kind::kDuplicateId);
  EXPECT_EQ(parse_error_kind("[1] main\n\tlink 'x'\n"), AxTreeError::Kind::kMalformedLine);
  EXPECT_EQ(parse_error_kind("[1] main 'unterminated\n"), AxTreeError::Kind::kMalformedLine);
  EXPECT_EQ(parse_error_kind("\t[1] main\n"), AxTreeError::Kind::kIndentJump);
}

TEST(ParseAxtree, ErrorCarriesLineNumber) {
  try {
    parse_axtree("[1] main\n\t[2] link\n\t\t\t[3] link\n", "u");
    FAIL();
  } catch (const AxTreeError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseAxtree, ValueAndAttributes) {
  const auto t = parse_axtree(
      "[1] RootWebArea 'R'\n\t[2] textbox '' 'typed' required=True\n\t[3] image src=/a.png\n", "u");
  const auto& box = t.root().children[0];
  EXPECT_EQ(box.name, "");
  EXPECT_EQ(box.value, "typed");
  EXPECT_EQ(box.attrs.at("required"), "True");
  EXPECT_EQ(t.root().children[1].attrs.at("src"), "/a.png");
}

TEST(ParseAxtree, SpaceIndentation) {
  const auto tabs = parse_axtree("[1] main\n\t[2] list\n\t\t[3] link 'a'\n\t[4] link 'b'\n", "u");
  const auto two = parse_axtree("[1] main\n  [2] list\n    [3] link 'a'\n  [4] link 'b'\n", "u");
  EXPECT_EQ(tabs, two);
  ParseOptions four;
  four.indent_spaces = 4;
  const auto fixed = parse_axtree("[1] main\n    [2] list\n        [3] link 'a'\n    [4] link 'b'\n",
                                  "u", four);
  EXPECT_EQ(tabs, fixed);
}

TEST(ParseAxtree, IndentVariantsMatchCanonical) {
  const auto canonical = load_fixture_tree(axregion::testing::fixture_dir() / "trees/forum_submit.axtree");
  for (const auto& path : fixture_files("indent")) {
    const auto t = parse_axtree(read_file(path), canonical.url());
    EXPECT_EQ(t, canonical) << path;
  }
}

TEST(SerializeAxtree, OneNode) {
  const auto t = AXTree(node("a1", "link", "Home"), "u");
  EXPECT_EQ(serialize_axtree(t), "[a1] link 'Home'\n");
}

TEST(SerializeAxtree, EscapesQuotes) {
  auto n = node("q", "StaticText", "it's \\ a\ttab\nline");
  const AXTree t(n, "u");
  const auto text = serialize_axtree(t);
  EXPECT_EQ(text, "[q] StaticText 'it\\'s \\\\ a\\ttab\\nline'\n");
  EXPECT_EQ(parse_axtree(text, "u"), t);
}

TEST(SerializeAxtree, ValueWithoutName) {
  auto n = node("v", "textbox");
  n.value = "x";
  EXPECT_EQ(serialize_axtree(AXTree(n, "u")), "[v] textbox '' 'x'\n");
}

TEST(SerializeAxtree, AttributeQuoting) {
  auto n = node("a", "link", "L");
  n.attrs = {{"href", "/p?q=1"}, {"title", "two words"}, {"empty", ""}, {"plain", "ok"}};
  const AXTree t(n, "u");
  EXPECT_EQ(serialize_axtree(t),
            "[a] link 'L' empty='' href='/p?q=1' plain=ok title='two words'\n");
  EXPECT_EQ(parse_axtree(serialize_axtree(t), "u"), t);
}

TEST(SerializeAxtree, FixtureFilesAreCanonical) {
  const auto files = fixture_files("trees");
  ASSERT_GE(files.size(), 50u);
  for (const auto& path : files) {
    const auto text = read_file(path);
    const auto t = parse_axtree(text, "u");
    EXPECT_EQ(serialize_axtree(t), text) << path;
    EXPECT_EQ(parse_axtree(serialize_axtree(t), "u"), t) << path;
  }
}

TEST(AXTreeType, RejectsDuplicateIdsAndEmptyRoles) {
  EXPECT_THROW(AXTree(node("1", "main", "", {node("1", "link")}), "u"), AxTreeError);
  EXPECT_THROW(AXTree(node("1", ""), "u"), AxTreeError);
}

TEST(AXTreeType, NodeCountMatchesReachableNodes) {
  Rng rng(5);
  const std::vector<std::string> roles = {"generic", "link", "list", "main"};
  for (int i = 0; i < 50; ++i) {
    const auto t = random_tree(rng, 25, roles);
    EXPECT_EQ(t.node_count(), preorder_ids(t.root()).size());
  }
}

// Random trees with names/values/attrs built from an awkward alphabet must
// survive text round trips.
TEST(SerializeAxtree, GenerativeRoundTrip) {
  Rng rng(77);
  auto random_text = [&](std::size_t max_len) {
    std::string s;
    const auto len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      static const std::vector<std::string> pieces = {"a", "b", " ", "'", "\\", "\t", "\n", "\r",
                                                      "=", "\"", "é", "✓", "x"};
      s += pieces[rng.below(pieces.size())];
    }
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t next = 0;
    std::function<AXNode(std::size_t)> build = [&](std::size_t depth) {
      AXNode n = node("n" + std::to_string(next++), rng.chance(0.5) ? "link" : "generic");
      n.name = random_text(6);
      if (rng.chance(0.3)) n.value = random_text(4);
      if (rng.chance(0.3)) n.attrs["k" + std::to_string(rng.below(3))] = random_text(5);
      const auto kids = depth < 4 ? rng.below(4) : 0;
      for (std::size_t k = 0; k < kids; ++k) n.children.push_back(build(depth + 1));
      return n;
    };
    const AXTree t(build(0), "u");
    ASSERT_EQ(parse_axtree(serialize_axtree(t), "u"), t) << serialize_axtree(t);
  }
}

TEST(Preprocess, WrapperWithTwoBranchesRetained) {
  const auto t = parse_axtree(
      "[1] RootWebArea 'R'\n\t[2] generic\n\t\t[3] link 'a'\n\t\t[4] link 'b'\n", "u");
  const auto p = preprocess(t);
  EXPECT_EQ(p, t);
}

TEST(Preprocess, WrapperWithOneBranchRemoved) {
  const auto t = parse_axtree(
      "[1] RootWebArea 'R'\n\t[2] generic\n\t\t[3] link 'a'\n\t[4] button 'b'\n", "u");
  const auto p = preprocess(t);
  EXPECT_EQ(preorder_ids(p.root()), (std::vector<std::string>{"1", "3", "4"}));
  EXPECT_EQ(p.root().children[0].id, "3");
}

TEST(Preprocess, NamelessLinkTakesHref) {
  const auto t = parse_axtree("[1] RootWebArea 'R'\n\t[2] link href=/x\n\t[3] image src=/i.png\n", "u");
  const auto p = preprocess(t);
  EXPECT_EQ(p.root().children[0].name, "/x");
  EXPECT_EQ(p.root().children[1].name, "/i.png");
}

TEST(Preprocess, ContentFreeLeavesVanishRootStays) {
  const auto t = parse_axtree("[1] generic\n\t[2] none\n\t[3] generic\n\t\t[4] none\n", "u");
  const auto p = preprocess(t);
  EXPECT_EQ(p.node_count(), 1u);
  EXPECT_EQ(p.root().id, "1");
}

TEST(Preprocess, PropertiesOverCorpus) {
  Rng rng(3);
  const std::vector<std::string> roles = {"generic", "none", "link", "StaticText", "list", "button"};
  std::vector<AXTree> trees;
  for (const auto& path : fixture_files("trees")) trees.push_back(load_fixture_tree(path));
  for (int i = 0; i < 200; ++i) trees.push_back(random_tree(rng, 30, roles));
  for (const auto& t : trees) {
    const auto p = preprocess(t);
    EXPECT_EQ(preprocess(p), p);
    // Surviving ids keep their relative document order and are a subset.
    const auto before = preorder_ids(t.root());
    const auto after = preorder_ids(p.root());
    std::size_t j = 0;
    for (const auto& id : before)
      if (j < after.size() && after[j] == id) ++j;
    EXPECT_EQ(j, after.size());
    EXPECT_EQ(p.root().id, t.root().id);
  }
}

TEST(TreeIndex, LevelsAreBottomUp) {
  const auto t = parse_axtree(
      "[1] main\n\t[2] list\n\t\t[3] link 'a'\n\t\t[4] link 'b'\n\t[5] button 'c'\n", "u");
  const TreeIndex index(t);
  EXPECT_EQ(index.size(), 5u);
  EXPECT_EQ(index.max_depth(), 2u);
  EXPECT_EQ(index.height(0), 2u);
  EXPECT_EQ(index.subtree_size(1), 3u);
  ASSERT_EQ(index.levels().size(), 3u);
  EXPECT_EQ(index.levels()[0], (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(index.levels()[1], (std::vector<std::size_t>{1}));
  EXPECT_EQ(index.levels()[2], (std::vector<std::size_t>{0}));
  EXPECT_EQ(index.find("4"), std::optional<std::size_t>(3));
  EXPECT_FALSE(index.find("9"));
}
