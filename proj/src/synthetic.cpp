#include "axregion/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace axregion {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kWords = {
    "home",   "search", "account", "orders",  "cart",    "help",    "settings", "reviews",
    "price",  "stock",  "issues",  "project", "members", "wiki",    "forum",    "posts",
    "map",    "route",  "city",    "store",   "product", "details", "shipping", "returns",
    "latest", "top",    "popular", "new",     "report",  "customer"};

class PageBuilder {
 public:
  PageBuilder(Rng& rng, std::size_t budget) : rng_(rng), budget_(budget) {}

  AXNode node(std::string role, std::string name = {}) {
    AXNode n;
    n.id = std::to_string(next_id_++);
    n.role = std::move(role);
    n.name = std::move(name);
    if (budget_ > 0) --budget_;
    return n;
  }

  bool has_budget(std::size_t need = 1) const { return budget_ >= need; }

  std::string phrase(std::size_t words) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
      if (i) out += ' ';
      out += kWords[rng_.below(kWords.size())];
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  }

  AXNode link() { return node("link", phrase(1 + rng_.below(2))); }

  AXNode list(std::size_t items) {
    AXNode l = node("list");
    for (std::size_t i = 0; i < items && has_budget(2); ++i) {
      AXNode item = node("listitem");
      item.children.push_back(link());
      l.children.push_back(std::move(item));
    }
    return l;
  }

  AXNode navigation() {
    AXNode nav = node("navigation", rng_.chance(0.5) ? phrase(1) : std::string());
    if (rng_.chance(0.5) && has_budget(3)) {
      nav.children.push_back(list(2 + rng_.below(3)));
    } else {
      const auto k = 2 + rng_.below(3);
      for (std::size_t i = 0; i < k && has_budget(); ++i) nav.children.push_back(link());
    }
    return nav;
  }

  AXNode form() {
    AXNode f = node("form", rng_.chance(0.3) ? phrase(1) : std::string());
    const auto k = 1 + rng_.below(3);
    for (std::size_t i = 0; i < k && has_budget(); ++i) {
      const char* roles[] = {"textbox", "combobox", "checkbox", "searchbox"};
      f.children.push_back(node(roles[rng_.below(4)], phrase(1)));
    }
    if (has_budget()) f.children.push_back(node("button", phrase(1)));
    return f;
  }

  // Decoy containers never cut under the rule.
  AXNode decoy() {
    const char* roles[] = {"group", "region", "article", "toolbar", "menu", "section", "table"};
    const std::string role = roles[rng_.below(7)];
    AXNode d = node(role, rng_.chance(0.5) ? phrase(2) : std::string());
    if (role == "table") {
      const auto rows = 1 + rng_.below(2);
      for (std::size_t r = 0; r < rows && has_budget(3); ++r) {
        AXNode row = node("row");
        row.children.push_back(node("cell", phrase(1)));
        row.children.push_back(node("cell", phrase(1)));
        d.children.push_back(std::move(row));
      }
      return d;
    }
    const auto k = 1 + rng_.below(3);
    for (std::size_t i = 0; i < k && has_budget(); ++i) d.children.push_back(leaf());
    return d;
  }

  AXNode leaf() {
    switch (rng_.below(6)) {
      case 0: return node("heading", phrase(2));
      case 1: return link();
      case 2: return node("button", phrase(1));
      case 3: return node("image", phrase(1));
      default: return node("StaticText", phrase(2 + rng_.below(3)));
    }
  }

  AXNode block(int depth) {
    const auto pick = rng_.below(10);
    if (pick < 2 && has_budget(3)) return list(1 + rng_.below(4));
    if (pick < 4 && has_budget(3)) return form();
    if (pick < 5 && has_budget(3)) return navigation();
    if (pick < 7 && has_budget(3)) return decoy();
    if (pick < 9 && depth < 3 && has_budget(3)) {
      AXNode g = node("generic");
      const auto k = 1 + rng_.below(3);
      for (std::size_t i = 0; i < k && has_budget(); ++i) g.children.push_back(block(depth + 1));
      return g;
    }
    return leaf();
  }

  AXNode page(std::size_t page_index) {
    AXNode root = node("RootWebArea", phrase(2) + " " + std::to_string(page_index));
    if (rng_.chance(0.7)) {
      AXNode banner = node("banner");
      banner.children.push_back(node("heading", phrase(1)));
      if (rng_.chance(0.6) && has_budget(4)) banner.children.push_back(navigation());
      else if (has_budget()) banner.children.push_back(link());
      root.children.push_back(std::move(banner));
    }
    if (rng_.chance(0.5) && has_budget(4)) root.children.push_back(navigation());
    AXNode main = node("main");
    while (has_budget(1) && main.children.size() < 6) main.children.push_back(block(0));
    if (main.children.empty()) main.children.push_back(leaf());
    root.children.push_back(std::move(main));
    if (rng_.chance(0.5)) {
      AXNode footer = node("contentinfo");
      footer.children.push_back(node("StaticText", phrase(3)));
      root.children.push_back(std::move(footer));
    }
    return root;
  }

 private:
  Rng& rng_;
  std::size_t budget_;
  std::size_t next_id_ = 1;
};

}  // namespace

const std::set<std::string>& default_rule_roles() {
  static const std::set<std::string> roles = {"navigation", "list", "form"};
  return roles;
}

AXTree synthetic_page(Rng& rng, std::size_t page_index, const SyntheticOptions& options) {
  const auto span = options.max_nodes > options.min_nodes ? options.max_nodes - options.min_nodes : 0;
  const auto target = options.min_nodes + (span ? rng.below(span + 1) : 0);
  // Fixed scaffolding (root, banner, main, footer) takes a few nodes.
  PageBuilder builder(rng, target > 6 ? target - 6 : 1);
  return AXTree(builder.page(page_index), "https://synthetic.test/page/" + std::to_string(page_index));
}

AXTree random_tree(Rng& rng, std::size_t max_nodes, const std::vector<std::string>& roles) {
  const auto n = 1 + rng.below(std::max<std::size_t>(max_nodes, 1));
  std::vector<AXNode> nodes(n);
  std::vector<std::size_t> parent(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = "n" + std::to_string(i);
    nodes[i].role = roles[rng.below(roles.size())];
    if (rng.chance(0.5)) nodes[i].name = kWords[rng.below(kWords.size())];
    if (i > 0) parent[i] = rng.below(i);
  }
  // Attach bottom-up so every child vector is complete before it moves.
  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t i = 1; i < n; ++i) kids[parent[i]].push_back(i);
  for (std::size_t i = n; i-- > 0;)
    for (auto c : kids[i]) nodes[i].children.push_back(std::move(nodes[c]));
  return AXTree(std::move(nodes[0]), "https://random.test/" + std::to_string(rng.below(1000)));
}

EdgeLabelSet role_rule_labels(const AXTree& tree, const std::set<std::string>& cut_roles) {
  EdgeLabelSet labels;
  std::vector<const AXNode*> stack{&tree.root()};
  while (!stack.empty()) {
    const AXNode* n = stack.back();
    stack.pop_back();
    for (const auto& c : n->children) {
      labels.set(n->id, c.id, cut_roles.count(c.role) ? EdgeLabel::kCut : EdgeLabel::kMerge);
      stack.push_back(&c);
    }
  }
  return labels;
}

DecompositionModel rule_model(const std::set<std::string>& cut_roles, const RoleVocabulary& vocab) {
  DecompositionModel model;
  for (const auto& role : cut_roles) {
    const auto r = vocab.index_of(role);
    if (r == vocab.unknown_index() && role != vocab.role(r))
      throw VocabularyError("rule role '" + role + "' is not in the vocabulary");
    model.role_embedding()(static_cast<Eigen::Index>(r), 0) = 1.0;
  }
  // Unit 0 carries the flag: embedding -> representation -> edge logit.
  auto& enc = model.region_encoder().layers();
  for (auto& layer : enc) layer.weight(0, 0) = 1.0;
  auto& cls = model.edge_classifier().layers();
  cls[0].weight(0, static_cast<Eigen::Index>(kFeatureDim)) = 1.0;
  for (std::size_t i = 1; i + 1 < cls.size(); ++i) cls[i].weight(0, 0) = 1.0;
  cls.back().weight(0, 0) = 20.0;
  cls.back().bias(0) = -10.0;
  model.metadata().init = "rule:" + [&] {
    std::string joined;
    for (const auto& r : cut_roles) joined += (joined.empty() ? "" : ",") + r;
    return joined;
  }();
  return model;
}

std::vector<LabeledTree> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                          const SyntheticOptions& options) {
  Rng rng(seed);
  std::vector<LabeledTree> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AXTree tree = synthetic_page(rng, i, options);
    EdgeLabelSet labels = role_rule_labels(tree);
    out.push_back({std::move(tree), std::move(labels)});
  }
  return out;
}

std::string format_region_roots(const RegionPartition& partition) {
  std::string out;
  for (const auto& r : partition.regions) {
    if (!out.empty()) out += ',';
    out += r.root_id;
  }
  return out;
}

std::vector<std::string> parse_region_roots(const std::string& text) {
  std::vector<std::string> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t\r\n");
    ids.push_back(item.substr(b, e - b + 1));
  }
  return ids;
}

void write_labeled_corpus(const std::string& dir, const std::vector<LabeledTree>& corpus) {
  fs::create_directories(dir);
  const auto width = std::to_string(std::max<std::size_t>(corpus.size(), 1) - 1).size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::string stem = std::to_string(i);
    stem.insert(0, width - stem.size(), '0');
    stem = "page_" + stem;
    const auto& item = corpus[i];
    std::ofstream tree_out(fs::path(dir) / (stem + ".axtree"));
    tree_out << serialize_axtree(item.tree);
    std::ofstream regions_out(fs::path(dir) / (stem + ".regions"));
    regions_out << format_region_roots(partition_from_labels(item.tree, item.labels)) << '\n';
  }
}

std::vector<LabeledTree> read_labeled_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<fs::path> trees;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".axtree") trees.push_back(entry.path());
  std::sort(trees.begin(), trees.end());
  std::vector<LabeledTree> out;
  for (const auto& path : trees) {
    auto regions_path = path;
    regions_path.replace_extension(".regions");
    std::ifstream tin(path);
    std::stringstream tbuf;
    tbuf << tin.rdbuf();
    AXTree tree = parse_axtree(tbuf.str(), "file://" + fs::absolute(path).string());
    std::ifstream rin(regions_path);
    if (!rin) throw std::runtime_error("missing " + regions_path.string());
    std::stringstream rbuf;
    rbuf << rin.rdbuf();
    const auto partition = partition_from_region_roots(tree, parse_region_roots(rbuf.str()));
    EdgeLabelSet labels = labels_from_partition(tree, partition);
    out.push_back({std::move(tree), std::move(labels)});
  }
  return out;
}

}  // namespace axregion
