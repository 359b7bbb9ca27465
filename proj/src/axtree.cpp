#include "axregion/axtree.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>

namespace axregion {

namespace {

const char* kind_label(AxTreeError::Kind kind) {
  switch (kind) {
    case AxTreeError::Kind::kMalformedLine: return "malformed line";
    case AxTreeError::Kind::kMultipleRoots: return "multiple roots";
    case AxTreeError::Kind::kIndentJump: return "indent jump";
    case AxTreeError::Kind::kDuplicateId: return "duplicate id";
  }
  return "error";
}

std::string format_error(AxTreeError::Kind kind, std::size_t line,
                         const std::string& reason) {
  std::string out;
  if (line > 0) out = "line " + std::to_string(line) + ": ";
  out += kind_label(kind);
  if (!reason.empty()) out += ": " + reason;
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t'; }

bool is_attr_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-' || c == ':' ||
         c == '.';
}

void count_and_validate(const AXNode& node, std::set<std::string>& seen,
                        std::size_t& count) {
  if (node.role.empty())
    throw AxTreeError(AxTreeError::Kind::kMalformedLine, 0,
                      "node '" + node.id + "' has an empty role");
  if (node.id.empty() || node.id.find_first_of("]\n\r") != std::string::npos)
    throw AxTreeError(AxTreeError::Kind::kMalformedLine, 0, "invalid node id '" + node.id + "'");
  if (node.role.front() == '\'' || node.role.find_first_of(" \t\n\r") != std::string::npos)
    throw AxTreeError(AxTreeError::Kind::kMalformedLine, 0, "invalid role '" + node.role + "'");
  for (const auto& [key, value] : node.attrs) {
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_attr_key_char))
      throw AxTreeError(AxTreeError::Kind::kMalformedLine, 0, "invalid attribute key '" + key + "'");
  }
  if (!seen.insert(node.id).second)
    throw AxTreeError(AxTreeError::Kind::kDuplicateId, 0, node.id);
  ++count;
  for (const auto& child : node.children) count_and_validate(child, seen, count);
}

void append_quoted(std::string& out, std::string_view text) {
  out.push_back('\'');
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('\'');
}

bool needs_quoting(std::string_view value) {
  if (value.empty()) return true;
  return std::any_of(value.begin(), value.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\'' ||
           c == '\\' || c == '=';
  });
}

// Cursor over one line's content (indentation already stripped).
class LineScanner {
 public:
  LineScanner(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& reason) const {
    throw AxTreeError(AxTreeError::Kind::kMalformedLine, line_, reason);
  }

  void skip_spaces() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  std::string read_id() {
    if (done() || peek() != '[') fail("expected '[id]'");
    ++pos_;
    const auto close = text_.find(']', pos_);
    if (close == std::string_view::npos) fail("unterminated '[id]'");
    std::string id(text_.substr(pos_, close - pos_));
    if (id.empty()) fail("empty id");
    pos_ = close + 1;
    return id;
  }

  std::string read_bare() {
    const auto start = pos_;
    while (!done() && !is_space(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (done()) fail("unterminated quoted string");
      const char c = text_[pos_++];
      if (c == '\'') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (done()) fail("dangling escape");
      const char e = text_[pos_++];
      switch (e) {
        case '\\': out.push_back('\\'); break;
        case '\'': out.push_back('\''); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        default: fail(std::string("unknown escape '\\") + e + "'");
      }
    }
    if (!done() && !is_space(peek())) fail("text directly after closing quote");
    return out;
  }

  // Reads `key=value` when the next token looks like one.
  std::optional<std::pair<std::string, std::string>> try_read_attr() {
    auto p = pos_;
    while (p < text_.size() && is_attr_key_char(text_[p])) ++p;
    if (p == pos_ || p >= text_.size() || text_[p] != '=') return std::nullopt;
    std::string key(text_.substr(pos_, p - pos_));
    pos_ = p + 1;
    std::string value;
    if (!done() && peek() == '\'') {
      value = read_quoted();
    } else {
      value = read_bare();
      if (value.find('\'') != std::string::npos) fail("stray quote in attribute value");
    }
    return std::make_pair(std::move(key), std::move(value));
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

AXNode parse_node_line(std::string_view content, std::size_t line) {
  LineScanner scan(content, line);
  AXNode node;
  node.id = scan.read_id();
  scan.skip_spaces();
  if (scan.done()) scan.fail("missing role");
  if (scan.peek() == '\'') scan.fail("missing role");
  node.role = scan.read_bare();

  std::vector<std::string> positional;
  bool seen_attr = false;
  while (true) {
    scan.skip_spaces();
    if (scan.done()) break;
    if (scan.peek() == '\'') {
      if (seen_attr) scan.fail("name/value after attributes");
      positional.push_back(scan.read_quoted());
    } else if (auto attr = scan.try_read_attr()) {
      seen_attr = true;
      if (!node.attrs.emplace(std::move(attr->first), std::move(attr->second)).second)
        scan.fail("duplicate attribute");
    } else {
      if (seen_attr) scan.fail("name/value after attributes");
      positional.push_back(scan.read_bare());
    }
    if (positional.size() > 2) scan.fail("more than two name/value fields");
  }
  if (!positional.empty()) node.name = std::move(positional[0]);
  if (positional.size() > 1) node.value = std::move(positional[1]);
  return node;
}

void serialize_into(const AXNode& node, std::size_t depth, std::string& out) {
  out += format_node_line(node, depth);
  out.push_back('\n');
  for (const auto& child : node.children) serialize_into(child, depth + 1, out);
}

constexpr std::array<std::string_view, 7> kInteractiveRoles = {
    "link", "button", "textbox", "combobox", "checkbox", "image", "heading"};

void enrich(AXNode& node) {
  if (node.name.empty() && (node.role == "image" || node.role == "link")) {
    const char* primary = node.role == "image" ? "src" : "href";
    const char* secondary = node.role == "image" ? "href" : "src";
    if (auto it = node.attrs.find(primary); it != node.attrs.end() && !it->second.empty())
      node.name = it->second;
    else if (auto it2 = node.attrs.find(secondary);
             it2 != node.attrs.end() && !it2->second.empty())
      node.name = it2->second;
  }
  for (auto& child : node.children) enrich(child);
}

bool has_visible(const AXNode& node) {
  if (is_visible(node)) return true;
  return std::any_of(node.children.begin(), node.children.end(), has_visible);
}

// Returns the surviving forest for `node`: itself (with processed children)
// or, when dropped, its processed children promoted in order.
std::vector<AXNode> prune(AXNode node, bool is_root) {
  std::vector<AXNode> kept;
  for (auto& child : node.children) {
    auto sub = prune(std::move(child), false);
    for (auto& s : sub) kept.push_back(std::move(s));
  }
  node.children = std::move(kept);

  if (is_root || !is_content_free_wrapper(node)) {
    std::vector<AXNode> out;
    out.push_back(std::move(node));
    return out;
  }
  const auto branches = std::count_if(node.children.begin(), node.children.end(), has_visible);
  if (branches >= 2) {
    std::vector<AXNode> out;
    out.push_back(std::move(node));
    return out;
  }
  return std::move(node.children);
}

}  // namespace

AxTreeError::AxTreeError(Kind kind, std::size_t line, const std::string& reason)
    : std::runtime_error(format_error(kind, line, reason)), kind_(kind), line_(line) {}

AXTree::AXTree(AXNode root, std::string url) : root_(std::move(root)), url_(std::move(url)) {
  std::set<std::string> seen;
  count_and_validate(root_, seen, node_count_);
}

AXTree parse_axtree(std::string_view text, std::string url, const ParseOptions& options) {
  std::optional<std::string> unit;
  if (options.indent_spaces) {
    if (*options.indent_spaces == 0)
      throw AxTreeError(AxTreeError::Kind::kMalformedLine, 0, "indent unit must be positive");
    unit = std::string(*options.indent_spaces, ' ');
  }

  std::optional<AXNode> root;
  std::vector<AXNode*> stack;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t lead = 0;
    while (lead < line.size() && is_space(line[lead])) ++lead;
    if (lead == line.size()) continue;  // blank

    const std::string_view indent = line.substr(0, lead);
    std::size_t depth = 0;
    if (!indent.empty()) {
      if (!unit) {
        if (indent.front() == '\t')
          unit = "\t";
        else
          unit = std::string(indent.substr(0, indent.find('\t')));
      }
      if (indent.size() % unit->size() != 0)
        throw AxTreeError(AxTreeError::Kind::kMalformedLine, line_no,
                          "indentation is not a multiple of the indent unit");
      for (std::size_t i = 0; i < indent.size(); i += unit->size()) {
        if (indent.substr(i, unit->size()) != *unit)
          throw AxTreeError(AxTreeError::Kind::kMalformedLine, line_no,
                            "inconsistent indentation");
      }
      depth = indent.size() / unit->size();
    }

    AXNode node = parse_node_line(line.substr(lead), line_no);
    if (!ids.insert(node.id).second)
      throw AxTreeError(AxTreeError::Kind::kDuplicateId, line_no, node.id);

    if (!root) {
      if (depth != 0)
        throw AxTreeError(AxTreeError::Kind::kIndentJump, line_no,
                          "first node must be at depth 0");
      root = std::move(node);
      stack.assign(1, &*root);
      continue;
    }
    if (depth == 0)
      throw AxTreeError(AxTreeError::Kind::kMultipleRoots, line_no, "second node at depth 0");
    if (depth > stack.size())
      throw AxTreeError(AxTreeError::Kind::kIndentJump, line_no,
                        "depth " + std::to_string(depth) + " follows depth " +
                            std::to_string(stack.size() - 1));
    stack.resize(depth);
    AXNode& parent = *stack.back();
    parent.children.push_back(std::move(node));
    stack.push_back(&parent.children.back());
  }
  if (!root)
    throw AxTreeError(AxTreeError::Kind::kMalformedLine, line_no == 0 ? 1 : line_no,
                      "no root node");
  return AXTree(std::move(*root), std::move(url));
}

std::string format_node_line(const AXNode& node, std::size_t depth) {
  std::string out(depth, '\t');
  out += '[';
  out += node.id;
  out += "] ";
  out += node.role;
  if (!node.name.empty() || !node.value.empty()) {
    out.push_back(' ');
    append_quoted(out, node.name);
  }
  if (!node.value.empty()) {
    out.push_back(' ');
    append_quoted(out, node.value);
  }
  for (const auto& [key, value] : node.attrs) {
    out.push_back(' ');
    out += key;
    out.push_back('=');
    if (needs_quoting(value))
      append_quoted(out, value);
    else
      out += value;
  }
  return out;
}

std::string serialize_axtree(const AXTree& tree) {
  std::string out;
  serialize_into(tree.root(), 0, out);
  return out;
}

bool is_interactive_role(std::string_view role) {
  return std::find(kInteractiveRoles.begin(), kInteractiveRoles.end(), role) !=
         kInteractiveRoles.end();
}

bool is_visible(const AXNode& node) {
  return !node.name.empty() || !node.value.empty() || is_interactive_role(node.role);
}

bool is_content_free_wrapper(const AXNode& node) {
  return (node.role == "generic" || node.role == "none") && node.name.empty() &&
         node.value.empty();
}

AXTree preprocess(const AXTree& tree) {
  AXNode root = tree.root();
  enrich(root);
  auto forest = prune(std::move(root), true);
  return AXTree(std::move(forest.front()), tree.url());
}

TreeIndex::TreeIndex(const AXTree& tree) {
  const std::size_t n = tree.node_count();
  nodes_.reserve(n);
  parents_.reserve(n);
  depths_.reserve(n);

  // Iterative pre-order walk; children pushed in reverse to keep document order.
  std::vector<std::pair<const AXNode*, std::size_t>> pending{{&tree.root(), kNoParent}};
  std::vector<std::vector<std::size_t>> kids;
  while (!pending.empty()) {
    auto [node, parent] = pending.back();
    pending.pop_back();
    const std::size_t index = nodes_.size();
    nodes_.push_back(node);
    parents_.push_back(parent);
    depths_.push_back(parent == kNoParent ? 0 : depths_[parent] + 1);
    kids.emplace_back();
    if (parent != kNoParent) kids[parent].push_back(index);
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it)
      pending.emplace_back(&*it, index);
    by_id_.emplace(node->id, index);
  }

  child_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    child_offsets_[i + 1] = child_offsets_[i] + kids[i].size();
    child_list_.insert(child_list_.end(), kids[i].begin(), kids[i].end());
  }

  heights_.assign(n, 0);
  subtree_sizes_.assign(n, 1);
  for (std::size_t i = n; i-- > 0;) {
    const auto p = parents_[i];
    if (p == kNoParent) continue;
    subtree_sizes_[p] += subtree_sizes_[i];
    heights_[p] = std::max(heights_[p], heights_[i] + 1);
  }
  for (auto d : depths_) max_depth_ = std::max(max_depth_, d);

  levels_.assign(heights_.empty() ? 0 : heights_[0] + 1, {});
  for (std::size_t i = 0; i < n; ++i) levels_[heights_[i]].push_back(i);
}

std::span<const std::size_t> TreeIndex::children(std::size_t i) const {
  return {child_list_.data() + child_offsets_[i], child_offsets_[i + 1] - child_offsets_[i]};
}

std::optional<std::size_t> TreeIndex::find(std::string_view id) const {
  if (auto it = by_id_.find(id); it != by_id_.end()) return it->second;
  return std::nullopt;
}

}  // namespace axregion
