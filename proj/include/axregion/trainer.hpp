#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "axregion/axtree.hpp"
#include "axregion/decomposer.hpp"
#include "axregion/features.hpp"
#include "axregion/metrics.hpp"
#include "axregion/model.hpp"
#include "axregion/train_config.hpp"

namespace axregion {

class TrainError : public std::runtime_error {
 public:
  enum class Kind { kEmptyDataset, kLabelMismatch, kEmptyValidation, kTeacherForcing };
  TrainError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LabeledTree {
  AXTree tree;
  EdgeLabelSet labels;
};

// Loss and parameter gradient for one tree under teacher forcing. The
// gradient is accumulated into `grad` when non-null (same shapes as the
// model). Loss is the mean focal loss over the tree's edges; `counts`
// receives confusion counts of thresholded predictions at `tau`.
double teacher_forced_loss(const DecompositionModel& model, const AXTree& tree,
                           const EdgeLabelSet& labels, double alpha, double gamma,
                           DecompositionModel* grad = nullptr, EdgeCounts* counts = nullptr,
                           double tau = 0.5,
                           const RoleVocabulary& vocab = RoleVocabulary::builtin());

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  PrfScores train_edge;
  PrfScores validation_edge;
  double grad_norm = 0.0;  // mean pre-clipping norm
};

struct TrainResult {
  DecompositionModel model;
  std::vector<EpochLog> log;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded tree-level split; validation gets round(n * fraction) trees, at
// least one when n >= 2 and never all of them.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(
    std::size_t n, double validation_fraction, std::uint64_t seed);

TrainResult train_with_log(const std::vector<LabeledTree>& dataset, const TrainConfig& config,
                           const EpochCallback& on_epoch = {},
                           const RoleVocabulary& vocab = RoleVocabulary::builtin());

DecompositionModel train(const std::vector<LabeledTree>& dataset, const TrainConfig& config,
                         const RoleVocabulary& vocab = RoleVocabulary::builtin());

// Micro-averaged edge scores of inference decisions at `tau`.
PrfScores evaluate_edges(const DecompositionModel& model, const std::vector<LabeledTree>& dataset,
                         const std::vector<std::size_t>& subset, double tau,
                         const RoleVocabulary& vocab = RoleVocabulary::builtin());

using ValidationSet = std::vector<std::pair<AXTree, RegionPartition>>;
using PartitionAt = std::function<RegionPartition(const AXTree&, double tau)>;

struct ThresholdSweepRow {
  double tau = 0.0;
  RegionCounts counts;
  PrfScores scores;
};

std::vector<ThresholdSweepRow> threshold_sweep(const PartitionAt& decompose_fn,
                                               const ValidationSet& validation,
                                               const std::vector<double>& taus);
// Tau with the highest pooled region F1; ties go to the larger tau.
double tune_threshold(const PartitionAt& decompose_fn, const ValidationSet& validation,
                      const std::vector<double>& taus);
double tune_threshold(const DecompositionModel& model, const ValidationSet& validation,
                      const std::vector<double>& taus,
                      const RoleVocabulary& vocab = RoleVocabulary::builtin());

}  // namespace axregion
