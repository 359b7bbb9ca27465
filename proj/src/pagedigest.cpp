#include "axregion/pagedigest.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include "axregion/embedded.hpp"

namespace axregion {

namespace {

const std::set<std::string>& stoplist() {
  static const std::set<std::string> words = {
      "a",       "about",   "action",  "actions", "add",     "all",       "an",        "and",
      "any",     "are",     "as",      "at",      "available", "be",      "by",        "can",
      "container", "content", "do",    "does",    "element", "elements",  "find",      "for",
      "from",    "get",     "go",      "has",     "have",    "how",       "i",         "if",
      "in",      "interactive", "into", "is",     "it",      "its",       "layout",    "me",
      "more",    "my",      "no",      "not",     "of",      "on",        "one",       "or",
      "own",     "please",  "readable", "section", "show",   "shows",     "structural", "tell",
      "than",    "that",    "the",     "their",   "then",    "there",     "this",      "to",
      "up",      "us",      "was",     "we",      "what",    "when",      "where",     "which",
      "who",     "will",    "with",    "wrapper", "you",     "your"};
  return words;
}

std::string normalize_word(std::string w) {
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
  return w;
}

void emit_subtree(const AXNode& node, std::size_t depth, std::string& out) {
  out += format_node_line(node, depth);
  out += '\n';
  for (const auto& c : node.children) emit_subtree(c, depth + 1, out);
}

void replace_placeholder(std::string& s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
}

}  // namespace

std::set<std::string> TransitionDelta::added_ids() const {
  std::set<std::string> ids;
  std::vector<const AXNode*> stack;
  for (const auto& g : added)
    for (const auto& t : g.subtrees) stack.push_back(&t);
  while (!stack.empty()) {
    const AXNode* n = stack.back();
    stack.pop_back();
    ids.insert(n->id);
    for (const auto& c : n->children) stack.push_back(&c);
  }
  return ids;
}

std::set<std::string> TransitionDelta::modified_ids() const {
  std::set<std::string> ids;
  for (const auto& m : modified) ids.insert(m.id);
  return ids;
}

TransitionDelta compute_delta(const AXTree& entry, const AXTree& current,
                              const RegionPartition& partition) {
  const TreeIndex ei(entry);
  const TreeIndex ci(current);
  std::map<std::string, std::size_t, std::less<>> region_of;
  for (const auto& r : partition.regions)
    for (const auto& id : r.members) region_of[id] = r.index;

  TransitionDelta delta;
  std::vector<bool> current_survives(ci.size(), false);
  std::vector<bool> survives(ei.size(), false);
  for (std::size_t i = 0; i < ei.size(); ++i) {
    const auto& node = ei.node(i);
    const auto c = ci.find(node.id);
    bool ok = false;
    if (c) {
      const auto ep = ei.parent(i);
      const auto cp = ci.parent(*c);
      if (ep == TreeIndex::kNoParent)
        ok = cp == TreeIndex::kNoParent;
      else
        ok = survives[ep] && cp != TreeIndex::kNoParent && ci.node(cp).id == ei.node(ep).id;
    }
    survives[i] = ok;
    if (!ok) {
      delta.removed.insert(node.id);
      if (c) delta.collisions.push_back(node.id);
      continue;
    }
    current_survives[*c] = true;
    const auto& now = ci.node(*c);
    if (now.role != node.role) delta.modified.push_back({node.id, "role", node.role, now.role});
    if (now.name != node.name) delta.modified.push_back({node.id, "name", node.name, now.name});
    if (now.value != node.value) delta.modified.push_back({node.id, "value", node.value, now.value});
  }

  std::map<std::string, std::size_t> group_of;
  for (std::size_t c = 0; c < ci.size(); ++c) {
    if (current_survives[c]) continue;
    const auto p = ci.parent(c);
    if (p != TreeIndex::kNoParent && !current_survives[p]) continue;  // inside an added subtree
    const std::string anchor = p == TreeIndex::kNoParent ? std::string() : ci.node(p).id;
    auto it = group_of.find(anchor);
    if (it == group_of.end()) {
      AddedGroup g;
      g.anchor_id = anchor;
      if (!anchor.empty()) {
        g.anchor_depth = ci.depth(p);
        if (const auto r = region_of.find(anchor); r != region_of.end()) g.region_index = r->second;
      }
      delta.added.push_back(std::move(g));
      it = group_of.emplace(anchor, delta.added.size() - 1).first;
    }
    delta.added[it->second].subtrees.push_back(ci.node(c));
  }
  return delta;
}

Partitioner Partitioner::from_model(const DecompositionModel& model, const RoleVocabulary& vocab) {
  auto owned = std::make_shared<const DecompositionModel>(model);
  return Partitioner([owned, &vocab](const AXTree& tree) { return decompose(tree, *owned, vocab); });
}

Partitioner Partitioner::from_region_roots(
    std::function<std::vector<std::string>(const AXTree&)> roots) {
  return Partitioner([roots = std::move(roots)](const AXTree& tree) {
    return partition_from_region_roots(tree, roots(tree));
  });
}

std::set<std::string> KeywordSelector::content_words(const std::string& text) {
  std::set<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stoplist().count(cur)) words.insert(normalize_word(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || u >= 0x80)
      cur.push_back(static_cast<char>(std::tolower(u)));
    else
      flush();
  }
  flush();
  return words;
}

std::set<std::size_t> KeywordSelector::select(const SelectionRequest& request) const {
  const auto& abstractions = *request.abstractions;
  const auto task_words = content_words(request.task);
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, region)
  for (const auto& a : abstractions) {
    const auto words = content_words(a.purpose + " " + a.state_summary);
    std::size_t overlap = 0;
    for (const auto& w : task_words) overlap += words.count(w);
    if (overlap > 0) scored.emplace_back(overlap, a.region_index);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (top_k_ && scored.size() > *top_k_) scored.resize(*top_k_);
  std::set<std::size_t> out;
  for (const auto& s : scored) out.insert(s.second);
  if (out.empty() && !abstractions.empty()) out.insert(abstractions.front().region_index);
  return out;
}

std::set<std::size_t> LmSelector::select(const SelectionRequest& request) const {
  const auto n = request.abstractions->size();
  try {
    return parse_selection_reply(client_.complete(request.prompt), n);
  } catch (const SelectionParseError&) {
  } catch (const AbstractionError&) {
  }
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < n; ++i) all.insert(i);
  return all;
}

std::set<std::size_t> FixedSelector::select(const SelectionRequest& request) const {
  std::set<std::size_t> out;
  for (auto r : regions_)
    if (r < request.abstractions->size()) out.insert(r);
  return out;
}

std::string format_action_history(const std::vector<std::string>& history) {
  if (history.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + history[i];
  }
  return out;
}

std::string format_region_abstractions(const std::vector<RegionAbstraction>& abstractions) {
  std::string out;
  for (std::size_t i = 0; i < abstractions.size(); ++i) {
    const auto& a = abstractions[i];
    if (i) out += '\n';
    out += a.region_id + "\n  purpose: " + a.purpose + "\n  state_summary: " + a.state_summary;
  }
  return out;
}

std::string render_selection_prompt(const std::string& task,
                                    const std::vector<std::string>& history,
                                    const std::vector<RegionAbstraction>& abstractions) {
  std::string prompt(embedded::selection_prompt());
  replace_placeholder(prompt, "{task_instruction}", task);
  replace_placeholder(prompt, "{action_history}", format_action_history(history));
  replace_placeholder(prompt, "{region_abstractions}", format_region_abstractions(abstractions));
  return prompt;
}

std::set<std::size_t> parse_selection_reply(const std::string& reply, std::size_t region_count) {
  static const std::regex id_re(R"(\bR(\d+)\b)");
  std::set<std::size_t> out;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), id_re); it != std::sregex_iterator(); ++it) {
    const auto digits = (*it)[1].str();
    if (digits.size() > 9) throw SelectionParseError("region id out of range: R" + digits);
    const auto r = static_cast<std::size_t>(std::stoul(digits));
    if (r >= region_count)
      throw SelectionParseError("region id out of range: R" + digits);
    out.insert(r);
  }
  if (out.empty()) throw SelectionParseError("no region ids in selection reply");
  return out;
}

std::string escape_attribute(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      default: out += c;
    }
  }
  return out;
}

PageSession PageSession::open(AXTree tree, const std::string& task,
                              const std::vector<std::string>& action_history,
                              Partitioner& partitioner, const Abstractor& abstractor,
                              const RegionSelector& selector, std::size_t abstraction_concurrency) {
  PageSession s;
  s.entry_ = std::make_shared<const AXTree>(std::move(tree));
  s.current_ = s.entry_;
  const auto partition = partitioner.partition(*s.entry_);
  s.abstractions_ = abstract_partition(partition, *s.entry_, abstractor, abstraction_concurrency);
  s.partition_ = with_abstractions(partition, s.abstractions_);
  s.selection_prompt_ = render_selection_prompt(task, action_history, s.abstractions_);
  SelectionRequest request{task, action_history, &s.abstractions_, s.selection_prompt_};
  s.selected_ = selector.select(request);
  for (auto r : s.selected_)
    if (r >= s.partition_.regions.size())
      throw SelectionParseError("selector returned unknown region R" + std::to_string(r));
  return s;
}

StepResult PageSession::step(AXTree new_tree, const std::string& new_url) {
  if (new_url != url()) return NewPage{};
  current_ = std::make_shared<const AXTree>(std::move(new_tree));
  delta_ = compute_delta(*entry_, *current_, partition_);
  ++step_index_;
  return SamePage{delta_};
}

std::string PageSession::render_digest() const {
  const TreeIndex ci(*current_);
  std::string out;
  for (const auto& region : partition_.regions) {
    const std::string label = region.label();
    const std::string purpose = region.index < abstractions_.size()
                                    ? abstractions_[region.index].purpose
                                    : region.purpose.value_or("");
    out += "<" + label + " purpose=\"" + escape_attribute(purpose) + "\">\n";
    if (!view_all_ && !selected_.count(region.index)) continue;
    for (const auto& id : region.members) {
      if (delta_.removed.count(id)) continue;
      const auto c = ci.find(id);
      if (!c) continue;
      out += format_node_line(ci.node(*c), ci.depth(*c));
      out += '\n';
    }
    out += "</" + label + ">\n";
  }
  if (!delta_.added.empty()) {
    out += "<added_elements>\n";
    for (const auto& g : delta_.added) {
      out += "<group anchor=\"" + escape_attribute(g.anchor_id) + "\"";
      if (g.region_index) out += " region=\"R" + std::to_string(*g.region_index) + "\"";
      out += ">\n";
      const std::size_t depth = g.anchor_id.empty() ? 0 : g.anchor_depth + 1;
      for (const auto& t : g.subtrees) emit_subtree(t, depth, out);
      out += "</group>\n";
    }
    out += "</added_elements>\n";
  }
  return out;
}

}  // namespace axregion
