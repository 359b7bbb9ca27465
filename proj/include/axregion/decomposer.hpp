#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "axregion/axtree.hpp"
#include "axregion/features.hpp"
#include "axregion/model.hpp"

namespace axregion {

class PartitionError : public std::runtime_error {
 public:
  enum class Kind { kMissingLabel, kInvalidPartition, kUnknownRegionRoot };
  PartitionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Region {
  std::size_t index = 0;
  std::string root_id;
  std::vector<std::string> members;  // document order, root first
  std::optional<std::string> purpose;
  std::optional<std::string> state_summary;

  std::string label() const { return "R" + std::to_string(index); }
  bool operator==(const Region&) const = default;
};

// Regions ordered by the document position of their roots; region i has
// index i.
struct RegionPartition {
  std::vector<Region> regions;
  std::string url;
  std::size_t node_count = 0;

  // Structural equality ignores purpose/state summaries.
  bool same_regions(const RegionPartition& other) const;
  bool operator==(const RegionPartition&) const = default;
};

enum class EdgeLabel { kMerge, kCut };

// One label per parent->child edge, keyed by (parent id, child id).
class EdgeLabelSet {
 public:
  using Key = std::pair<std::string, std::string>;

  void set(const std::string& parent, const std::string& child, EdgeLabel label);
  std::optional<EdgeLabel> get(const std::string& parent, const std::string& child) const;
  std::size_t size() const { return labels_.size(); }
  std::size_t cut_count() const;
  const std::map<Key, EdgeLabel>& labels() const { return labels_; }
  bool operator==(const EdgeLabelSet&) const = default;

 private:
  std::map<Key, EdgeLabel> labels_;
};

// Connected components after deleting cut edges. Throws kMissingLabel when an
// edge of the tree has no label.
RegionPartition partition_from_labels(const AXTree& tree, const EdgeLabelSet& labels);
// Inverse: cut iff parent and child sit in different regions.
EdgeLabelSet labels_from_partition(const AXTree& tree, const RegionPartition& partition);
// Each listed id starts a region; the tree root always does.
RegionPartition partition_from_region_roots(const AXTree& tree,
                                            const std::vector<std::string>& root_ids);
// Disjoint, exhaustive, each region a connected subtree rooted at root_id.
void validate_partition(const AXTree& tree, const RegionPartition& partition);

struct IndexedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
};

// Backend for the bottom-up traversal. For each height level the traversal
// asks for logits of every edge whose parent sits on the level, decides
// cut/merge, then asks the backend to encode the level's nodes given their
// merged children.
class LevelScorer {
 public:
  virtual ~LevelScorer() = default;
  virtual void begin(const TreeIndex& index) = 0;
  virtual std::vector<double> score(std::span<const IndexedEdge> edges) = 0;
  virtual void encode(std::span<const std::size_t> nodes,
                      std::span<const std::vector<std::size_t>> merged_children) = 0;
};

struct Decomposition {
  RegionPartition partition;
  EdgeLabelSet decisions;
  // Probability per edge, keyed like `decisions`.
  std::map<EdgeLabelSet::Key, double> probabilities;
};

// Single bottom-up pass: edge cut iff sigmoid(logit) >= tau.
Decomposition decompose_with(const AXTree& tree, LevelScorer& scorer, double tau);

// Backend running the learned model.
class ModelScorer : public LevelScorer {
 public:
  explicit ModelScorer(const DecompositionModel& model,
                       const RoleVocabulary& vocab = RoleVocabulary::builtin());

  void begin(const TreeIndex& index) override;
  std::vector<double> score(std::span<const IndexedEdge> edges) override;
  void encode(std::span<const std::size_t> nodes,
              std::span<const std::vector<std::size_t>> merged_children) override;

  const Eigen::MatrixXd& representations() const { return reps_; }

 private:
  const DecompositionModel& model_;
  const RoleVocabulary& vocab_;
  const TreeIndex* index_ = nullptr;
  Eigen::MatrixXd features_;  // kFeatureDim x n
  Eigen::MatrixXd reps_;      // kRepresentationDim x n
};

// Edge classifier stand-in driven by a plain function of (parent, child).
class FunctionScorer : public LevelScorer {
 public:
  using Fn = std::function<double(const TreeIndex&, std::size_t parent, std::size_t child)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}

  void begin(const TreeIndex& index) override { index_ = &index; }
  std::vector<double> score(std::span<const IndexedEdge> edges) override;
  void encode(std::span<const std::size_t>, std::span<const std::vector<std::size_t>>) override {}

 private:
  Fn fn_;
  const TreeIndex* index_ = nullptr;
};

RegionPartition decompose(const AXTree& tree, const DecompositionModel& model,
                          const RoleVocabulary& vocab = RoleVocabulary::builtin());
Decomposition decompose_at(const AXTree& tree, const DecompositionModel& model, double tau,
                           const RoleVocabulary& vocab = RoleVocabulary::builtin());

class LossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FocalLoss {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d logit
};

// Binary focal loss; alpha weights the positive (cut) class. Throws LossError
// on non-finite logits or out-of-range alpha/gamma.
FocalLoss focal_loss(double logit, int label, double alpha, double gamma);

}  // namespace axregion
