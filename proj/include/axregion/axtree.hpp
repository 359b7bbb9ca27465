#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace axregion {

// One accessibility node. Empty name/value mean "absent".
struct AXNode {
  std::string id;
  std::string role;
  std::string name;
  std::string value;
  std::map<std::string, std::string> attrs;
  std::vector<AXNode> children;

  bool operator==(const AXNode&) const = default;
};

class AxTreeError : public std::runtime_error {
 public:
  enum class Kind { kMalformedLine, kMultipleRoots, kIndentJump, kDuplicateId };

  AxTreeError(Kind kind, std::size_t line, const std::string& reason);

  Kind kind() const { return kind_; }
  // 1-based line number in the parsed text; 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

// Immutable accessibility tree. Construction validates id uniqueness and
// non-empty roles.
class AXTree {
 public:
  AXTree(AXNode root, std::string url);

  const AXNode& root() const { return root_; }
  const std::string& url() const { return url_; }
  std::size_t node_count() const { return node_count_; }

  bool operator==(const AXTree& other) const {
    return url_ == other.url_ && root_ == other.root_;
  }

 private:
  AXNode root_;
  std::string url_;
  std::size_t node_count_ = 0;
};

struct ParseOptions {
  // Fixed number of spaces per depth level. When unset the unit is taken
  // from the first indented line (a single tab or a run of spaces).
  std::optional<std::size_t> indent_spaces;
};

AXTree parse_axtree(std::string_view text, std::string url,
                    const ParseOptions& options = {});

// Canonical text: tab indentation, single-quoted name/value, sorted attrs,
// one node per line, trailing newline.
std::string serialize_axtree(const AXTree& tree);

// A single canonical node line (no trailing newline), indented by `depth` tabs.
std::string format_node_line(const AXNode& node, std::size_t depth);

// Roles that count as visible even without a name or value.
bool is_interactive_role(std::string_view role);
bool is_visible(const AXNode& node);
// generic/none node with neither name nor value.
bool is_content_free_wrapper(const AXNode& node);

AXTree preprocess(const AXTree& tree);

// Flattened pre-order view of a tree. Indices are document order; index 0 is
// the root. Holds pointers into the tree, which must outlive the index.
class TreeIndex {
 public:
  static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

  explicit TreeIndex(const AXTree& tree);

  std::size_t size() const { return nodes_.size(); }
  const AXNode& node(std::size_t i) const { return *nodes_[i]; }
  std::size_t parent(std::size_t i) const { return parents_[i]; }
  std::span<const std::size_t> children(std::size_t i) const;
  std::size_t depth(std::size_t i) const { return depths_[i]; }
  // Longest downward path to a leaf; leaves have height 0.
  std::size_t height(std::size_t i) const { return heights_[i]; }
  std::size_t subtree_size(std::size_t i) const { return subtree_sizes_[i]; }
  std::size_t max_depth() const { return max_depth_; }
  std::size_t edge_count() const { return nodes_.size() - 1; }
  std::optional<std::size_t> find(std::string_view id) const;

  // Node indices grouped by height, lowest first. Every node's children sit
  // in strictly earlier groups.
  const std::vector<std::vector<std::size_t>>& levels() const { return levels_; }

 private:
  std::vector<const AXNode*> nodes_;
  std::vector<std::size_t> parents_;
  std::vector<std::size_t> child_offsets_;
  std::vector<std::size_t> child_list_;
  std::vector<std::size_t> depths_;
  std::vector<std::size_t> heights_;
  std::vector<std::size_t> subtree_sizes_;
  std::size_t max_depth_ = 0;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<std::vector<std::size_t>> levels_;
};

}  // namespace axregion
