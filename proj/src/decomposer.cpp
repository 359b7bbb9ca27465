#include "axregion/decomposer.hpp"

#include <cmath>
#include <set>

namespace axregion {

namespace {

RegionPartition partition_from_cut_flags(const TreeIndex& index, const std::vector<bool>& cut,
                                         const AXTree& tree) {
  RegionPartition out;
  out.url = tree.url();
  out.node_count = index.size();
  std::vector<std::size_t> region_of(index.size(), 0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const bool starts = index.parent(i) == TreeIndex::kNoParent || cut[i];
    if (starts) {
      Region region;
      region.index = out.regions.size();
      region.root_id = index.node(i).id;
      region_of[i] = region.index;
      out.regions.push_back(std::move(region));
    } else {
      region_of[i] = region_of[index.parent(i)];
    }
    out.regions[region_of[i]].members.push_back(index.node(i).id);
  }
  return out;
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

bool RegionPartition::same_regions(const RegionPartition& other) const {
  if (regions.size() != other.regions.size()) return false;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].root_id != other.regions[i].root_id ||
        regions[i].members != other.regions[i].members)
      return false;
  }
  return true;
}

void EdgeLabelSet::set(const std::string& parent, const std::string& child, EdgeLabel label) {
  labels_[{parent, child}] = label;
}

std::optional<EdgeLabel> EdgeLabelSet::get(const std::string& parent,
                                           const std::string& child) const {
  if (auto it = labels_.find({parent, child}); it != labels_.end()) return it->second;
  return std::nullopt;
}

std::size_t EdgeLabelSet::cut_count() const {
  std::size_t n = 0;
  for (const auto& [key, label] : labels_) n += label == EdgeLabel::kCut;
  return n;
}

RegionPartition partition_from_labels(const AXTree& tree, const EdgeLabelSet& labels) {
  const TreeIndex index(tree);
  std::vector<bool> cut(index.size(), false);
  for (std::size_t i = 1; i < index.size(); ++i) {
    const auto& parent = index.node(index.parent(i)).id;
    const auto& child = index.node(i).id;
    const auto label = labels.get(parent, child);
    if (!label)
      throw PartitionError(PartitionError::Kind::kMissingLabel,
                           "no label for edge " + parent + " -> " + child);
    cut[i] = *label == EdgeLabel::kCut;
  }
  if (labels.size() != index.edge_count())
    throw PartitionError(PartitionError::Kind::kMissingLabel,
                         "label set covers edges that are not in the tree");
  return partition_from_cut_flags(index, cut, tree);
}

EdgeLabelSet labels_from_partition(const AXTree& tree, const RegionPartition& partition) {
  const TreeIndex index(tree);
  std::map<std::string, std::size_t, std::less<>> region_of;
  for (const auto& region : partition.regions)
    for (const auto& id : region.members) region_of[id] = region.index;
  EdgeLabelSet labels;
  for (std::size_t i = 1; i < index.size(); ++i) {
    const auto& parent = index.node(index.parent(i)).id;
    const auto& child = index.node(i).id;
    const auto pit = region_of.find(parent);
    const auto cit = region_of.find(child);
    if (pit == region_of.end() || cit == region_of.end())
      throw PartitionError(PartitionError::Kind::kInvalidPartition,
                           "partition does not cover edge " + parent + " -> " + child);
    labels.set(parent, child, pit->second == cit->second ? EdgeLabel::kMerge : EdgeLabel::kCut);
  }
  return labels;
}

RegionPartition partition_from_region_roots(const AXTree& tree,
                                            const std::vector<std::string>& root_ids) {
  const TreeIndex index(tree);
  std::vector<bool> cut(index.size(), false);
  for (const auto& id : root_ids) {
    const auto i = index.find(id);
    if (!i)
      throw PartitionError(PartitionError::Kind::kUnknownRegionRoot,
                           "region root '" + id + "' is not in the tree");
    cut[*i] = true;
  }
  return partition_from_cut_flags(index, cut, tree);
}

void validate_partition(const AXTree& tree, const RegionPartition& partition) {
  const TreeIndex index(tree);
  std::vector<std::size_t> region_of(index.size(), static_cast<std::size_t>(-1));
  for (std::size_t r = 0; r < partition.regions.size(); ++r) {
    const auto& region = partition.regions[r];
    for (const auto& id : region.members) {
      const auto i = index.find(id);
      if (!i)
        throw PartitionError(PartitionError::Kind::kInvalidPartition,
                             "region member '" + id + "' is not in the tree");
      if (region_of[*i] != static_cast<std::size_t>(-1))
        throw PartitionError(PartitionError::Kind::kInvalidPartition,
                             "node '" + id + "' belongs to two regions");
      region_of[*i] = r;
    }
  }
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (region_of[i] == static_cast<std::size_t>(-1))
      throw PartitionError(PartitionError::Kind::kInvalidPartition,
                           "node '" + index.node(i).id + "' is in no region");
  }
  for (std::size_t r = 0; r < partition.regions.size(); ++r) {
    const auto& region = partition.regions[r];
    if (region.index != r)
      throw PartitionError(PartitionError::Kind::kInvalidPartition,
                           "region at position " + std::to_string(r) + " has index " +
                               std::to_string(region.index));
    const auto root = index.find(region.root_id);
    if (!root || region_of[*root] != r)
      throw PartitionError(PartitionError::Kind::kInvalidPartition,
                           "region root '" + region.root_id + "' is not a member");
    // Connected with root_id on top: every other member's parent is a member.
    const auto root_parent = index.parent(*root);
    if (root_parent != TreeIndex::kNoParent && region_of[root_parent] == r)
      throw PartitionError(PartitionError::Kind::kInvalidPartition,
                           "region " + region.label() + " extends above its root");
    for (const auto& id : region.members) {
      const auto i = *index.find(id);
      if (i == *root) continue;
      const auto p = index.parent(i);
      if (p == TreeIndex::kNoParent || region_of[p] != r)
        throw PartitionError(PartitionError::Kind::kInvalidPartition,
                             "region " + region.label() + " is not connected");
    }
  }
}

Decomposition decompose_with(const AXTree& tree, LevelScorer& scorer, double tau) {
  const TreeIndex index(tree);
  scorer.begin(index);
  Decomposition out;
  std::vector<bool> cut(index.size(), false);
  for (const auto& level : index.levels()) {
    std::vector<IndexedEdge> edges;
    for (auto v : level)
      for (auto c : index.children(v)) edges.push_back({v, c});
    std::vector<double> logits;
    if (!edges.empty()) {
      logits = scorer.score(edges);
      if (logits.size() != edges.size())
        throw ShapeMismatch("scorer returned " + std::to_string(logits.size()) +
                            " logits for " + std::to_string(edges.size()) + " edges");
    }
    std::vector<std::vector<std::size_t>> merged(level.size());
    std::size_t e = 0;
    for (std::size_t k = 0; k < level.size(); ++k) {
      for (auto c : index.children(level[k])) {
        const double p = sigmoid(logits[e++]);
        const bool is_cut = p >= tau;
        cut[c] = is_cut;
        const auto& pid = index.node(level[k]).id;
        const auto& cid = index.node(c).id;
        out.decisions.set(pid, cid, is_cut ? EdgeLabel::kCut : EdgeLabel::kMerge);
        out.probabilities[{pid, cid}] = p;
        if (!is_cut) merged[k].push_back(c);
      }
    }
    scorer.encode(level, merged);
  }
  out.partition = partition_from_cut_flags(index, cut, tree);
  return out;
}

ModelScorer::ModelScorer(const DecompositionModel& model, const RoleVocabulary& vocab)
    : model_(model), vocab_(vocab) {
  model_.validate(vocab_);
}

void ModelScorer::begin(const TreeIndex& index) {
  index_ = &index;
  const auto n = static_cast<Eigen::Index>(index.size());
  const auto table = compute_feature_table(index, vocab_);
  features_.resize(kFeatureDim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = embed(table[static_cast<std::size_t>(i)], model_);
    for (std::size_t k = 0; k < kFeatureDim; ++k) features_(static_cast<Eigen::Index>(k), i) = x[k];
  }
  reps_ = Eigen::MatrixXd::Zero(kRepresentationDim, n);
}

std::vector<double> ModelScorer::score(std::span<const IndexedEdge> edges) {
  const auto& index = *index_;
  std::map<std::size_t, Eigen::VectorXd> sibling_mean;
  for (const auto& edge : edges) {
    if (sibling_mean.count(edge.parent)) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kRepresentationDim);
    const auto kids = index.children(edge.parent);
    for (auto c : kids) mean += reps_.col(static_cast<Eigen::Index>(c));
    mean /= static_cast<double>(kids.size());
    sibling_mean.emplace(edge.parent, std::move(mean));
  }
  Eigen::MatrixXd input(kEdgeClassifierInput, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto col = static_cast<Eigen::Index>(e);
    input.col(col).segment(0, kFeatureDim) = features_.col(static_cast<Eigen::Index>(edges[e].parent));
    input.col(col).segment(kFeatureDim, kRepresentationDim) =
        reps_.col(static_cast<Eigen::Index>(edges[e].child));
    input.col(col).segment(kFeatureDim + kRepresentationDim, kRepresentationDim) =
        sibling_mean.at(edges[e].parent);
  }
  const Eigen::MatrixXd logits = model_.edge_classifier().forward(input);
  return std::vector<double>(logits.data(), logits.data() + logits.size());
}

void ModelScorer::encode(std::span<const std::size_t> nodes,
                         std::span<const std::vector<std::size_t>> merged_children) {
  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(kRegionEncoderInput,
                                                static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    input.col(col).segment(0, kFeatureDim) = features_.col(static_cast<Eigen::Index>(nodes[k]));
    const auto& merged = merged_children[k];
    if (merged.empty()) continue;
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(kRepresentationDim);
    for (auto c : merged) agg += reps_.col(static_cast<Eigen::Index>(c));
    input.col(col).segment(kFeatureDim, kRepresentationDim) = agg / static_cast<double>(merged.size());
  }
  const Eigen::MatrixXd out = model_.region_encoder().forward(input);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    reps_.col(static_cast<Eigen::Index>(nodes[k])) = out.col(static_cast<Eigen::Index>(k));
}

std::vector<double> FunctionScorer::score(std::span<const IndexedEdge> edges) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(fn_(*index_, e.parent, e.child));
  return out;
}

RegionPartition decompose(const AXTree& tree, const DecompositionModel& model,
                          const RoleVocabulary& vocab) {
  return decompose_at(tree, model, model.tau(), vocab).partition;
}

Decomposition decompose_at(const AXTree& tree, const DecompositionModel& model, double tau,
                           const RoleVocabulary& vocab) {
  ModelScorer scorer(model, vocab);
  return decompose_with(tree, scorer, tau);
}

FocalLoss focal_loss(double logit, int label, double alpha, double gamma) {
  if (!std::isfinite(logit)) throw LossError("non-finite logit");
  if (!(alpha > 0.0 && alpha < 1.0)) throw LossError("alpha must lie in (0,1)");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw LossError("gamma must be >= 0");
  if (label != 0 && label != 1) throw LossError("label must be 0 or 1");
  const double p = sigmoid(logit);
  const double q = sigmoid(-logit);
  FocalLoss out;
  if (label == 1) {
    const double w = alpha * std::pow(q, gamma);
    const double nll = softplus(-logit);  // -log p
    out.loss = w * nll;
    out.grad = -w * (gamma * p * nll + q);
  } else {
    const double w = (1.0 - alpha) * std::pow(p, gamma);
    const double nll = softplus(logit);  // -log(1 - p)
    out.loss = w * nll;
    out.grad = w * (gamma * q * nll + p);
  }
  return out;
}

}  // namespace axregion
