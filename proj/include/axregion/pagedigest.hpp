#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "axregion/abstraction.hpp"
#include "axregion/axtree.hpp"
#include "axregion/decomposer.hpp"

namespace axregion {

class SelectionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeModification {
  std::string id;
  std::string field;  // "role", "name" or "value"
  std::string old_value;
  std::string new_value;

  bool operator==(const NodeModification&) const = default;
};

// Added subtrees hanging off one surviving node of the entry tree.
struct AddedGroup {
  std::string anchor_id;                      // empty when the root itself changed
  std::optional<std::size_t> region_index;    // region of the anchor
  std::size_t anchor_depth = 0;
  std::vector<AXNode> subtrees;               // document order

  bool operator==(const AddedGroup&) const = default;
};

struct TransitionDelta {
  std::vector<AddedGroup> added;  // ordered by document position
  std::set<std::string> removed;
  std::vector<NodeModification> modified;  // document order, then role/name/value
  // Ids that exist in both trees under different parents; reported as
  // removed + added.
  std::vector<std::string> collisions;

  bool empty() const { return added.empty() && removed.empty() && modified.empty(); }
  std::set<std::string> added_ids() const;
  std::set<std::string> modified_ids() const;
  bool operator==(const TransitionDelta&) const = default;
};

// A node of `entry` survives when `current` has the same id under the same
// parent id and that parent survives. Regions come from `partition` over
// `entry`.
TransitionDelta compute_delta(const AXTree& entry, const AXTree& current,
                              const RegionPartition& partition);

// Counts how often the decomposition runs.
class Partitioner {
 public:
  using Fn = std::function<RegionPartition(const AXTree&)>;
  explicit Partitioner(Fn fn) : fn_(std::move(fn)) {}

  // Keeps its own copy of the model.
  static Partitioner from_model(const DecompositionModel& model,
                                const RoleVocabulary& vocab = RoleVocabulary::builtin());
  // Region roots looked up per tree url; the tree root is always a region.
  static Partitioner from_region_roots(std::function<std::vector<std::string>(const AXTree&)> roots);

  RegionPartition partition(const AXTree& tree) {
    ++calls_;
    return fn_(tree);
  }
  std::size_t calls() const { return calls_; }

 private:
  Fn fn_;
  std::size_t calls_ = 0;
};

struct SelectionRequest {
  std::string task;
  std::vector<std::string> action_history;
  const std::vector<RegionAbstraction>* abstractions = nullptr;
  std::string prompt;  // rendered selection prompt
};

class RegionSelector {
 public:
  virtual ~RegionSelector() = default;
  // Returns region indices.
  virtual std::set<std::size_t> select(const SelectionRequest& request) const = 0;
};

// Offline stand-in: lowercase alphanumeric words minus a stoplist, with a
// trailing plural "s" dropped; a region is picked when its purpose or state
// summary shares a word with the task. Optional top_k keeps the best
// overlaps. Never returns an empty set.
class KeywordSelector : public RegionSelector {
 public:
  explicit KeywordSelector(std::optional<std::size_t> top_k = std::nullopt) : top_k_(top_k) {}
  std::set<std::size_t> select(const SelectionRequest& request) const override;

  static std::set<std::string> content_words(const std::string& text);

 private:
  std::optional<std::size_t> top_k_;
};

// Sends the selection prompt; unparseable replies select every region.
class LmSelector : public RegionSelector {
 public:
  explicit LmSelector(ChatClient& client) : client_(client) {}
  std::set<std::size_t> select(const SelectionRequest& request) const override;

 private:
  ChatClient& client_;
};

// Fixed choice, for tests and replays that pin the selection.
class FixedSelector : public RegionSelector {
 public:
  explicit FixedSelector(std::set<std::size_t> regions) : regions_(std::move(regions)) {}
  std::set<std::size_t> select(const SelectionRequest& request) const override;

 private:
  std::set<std::size_t> regions_;
};

std::string format_action_history(const std::vector<std::string>& history);
std::string format_region_abstractions(const std::vector<RegionAbstraction>& abstractions);
std::string render_selection_prompt(const std::string& task,
                                    const std::vector<std::string>& history,
                                    const std::vector<RegionAbstraction>& abstractions);
// "R3, R7" -> {3, 7}. Throws SelectionParseError when no id is found or an
// id is out of range.
std::set<std::size_t> parse_selection_reply(const std::string& reply, std::size_t region_count);

std::string escape_attribute(const std::string& text);

struct SamePage {
  TransitionDelta delta;
};
struct NewPage {};
using StepResult = std::variant<SamePage, NewPage>;

class PageSession {
 public:
  // Decomposes, abstracts and selects once for this page.
  static PageSession open(AXTree tree, const std::string& task,
                          const std::vector<std::string>& action_history, Partitioner& partitioner,
                          const Abstractor& abstractor, const RegionSelector& selector,
                          std::size_t abstraction_concurrency = 4);

  const std::string& url() const { return entry_->url(); }
  const AXTree& entry_tree() const { return *entry_; }
  const AXTree& current_tree() const { return *current_; }
  const RegionPartition& partition() const { return partition_; }
  const std::vector<RegionAbstraction>& abstractions() const { return abstractions_; }
  const std::set<std::size_t>& selected() const { return selected_; }
  bool view_all_active() const { return view_all_; }
  std::size_t step_index() const { return step_index_; }
  const TransitionDelta& delta() const { return delta_; }
  const std::string& selection_prompt() const { return selection_prompt_; }

  void view_all() { view_all_ = true; }
  // NewPage leaves the session untouched.
  StepResult step(AXTree new_tree, const std::string& new_url);

  std::string render_digest() const;

 private:
  PageSession() = default;

  std::shared_ptr<const AXTree> entry_;
  std::shared_ptr<const AXTree> current_;
  RegionPartition partition_;
  std::vector<RegionAbstraction> abstractions_;
  std::set<std::size_t> selected_;
  bool view_all_ = false;
  std::size_t step_index_ = 0;
  TransitionDelta delta_;
  std::string selection_prompt_;
};

}  // namespace axregion
