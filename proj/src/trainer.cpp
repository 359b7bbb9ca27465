#include "axregion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "axregion/rng.hpp"

namespace axregion {

namespace {

struct LevelTrace {
  std::vector<IndexedEdge> edges;
  std::vector<std::vector<std::size_t>> merged;  // per level node
  Mlp::Trace edge_trace;
  Mlp::Trace encoder_trace;
  Eigen::MatrixXd dlogits;
};

std::vector<int> edge_targets(const TreeIndex& index, const EdgeLabelSet& labels) {
  if (labels.size() != index.edge_count())
    throw TrainError(TrainError::Kind::kLabelMismatch,
                     "tree has " + std::to_string(index.edge_count()) + " edges but " +
                         std::to_string(labels.size()) + " labels");
  std::vector<int> y(index.size(), -1);
  for (std::size_t c = 1; c < index.size(); ++c) {
    const auto& pid = index.node(index.parent(c)).id;
    const auto& cid = index.node(c).id;
    const auto label = labels.get(pid, cid);
    if (!label)
      throw TrainError(TrainError::Kind::kLabelMismatch,
                       "edge " + pid + " -> " + cid + " has no label");
    y[c] = *label == EdgeLabel::kCut ? 1 : 0;
  }
  return y;
}

std::vector<std::span<double>> tensors(DecompositionModel& model) {
  std::vector<std::span<double>> out;
  model.for_each_tensor([&](std::string_view, std::size_t, std::size_t, std::span<double> t) {
    out.push_back(t);
  });
  return out;
}

double squared_norm(const std::vector<std::span<double>>& ts) {
  double s = 0.0;
  for (const auto& t : ts)
    for (double v : t) s += v * v;
  return s;
}

class Adam {
 public:
  Adam(const TrainConfig& config) : config_(config) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(DecompositionModel& model, DecompositionModel& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    auto p = tensors(model);
    auto g = tensors(grad);
    auto m = tensors(m_);
    auto v = tensors(v_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (std::size_t i = 0; i < p[k].size(); ++i) {
        const double gi = g[k][i];
        m[k][i] = config_.beta1 * m[k][i] + (1.0 - config_.beta1) * gi;
        v[k][i] = config_.beta2 * v[k][i] + (1.0 - config_.beta2) * gi * gi;
        const double mhat = m[k][i] / bc1;
        const double vhat = v[k][i] / bc2;
        p[k][i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    }
  }

 private:
  const TrainConfig& config_;
  DecompositionModel m_;
  DecompositionModel v_;
  int t_ = 0;
};

}  // namespace

double teacher_forced_loss(const DecompositionModel& model, const AXTree& tree,
                           const EdgeLabelSet& labels, double alpha, double gamma,
                           DecompositionModel* grad, EdgeCounts* counts, double tau,
                           const RoleVocabulary& vocab) {
  const TreeIndex index(tree);
  const auto y = edge_targets(index, labels);
  const auto n = static_cast<Eigen::Index>(index.size());
  const auto table = compute_feature_table(index, vocab);
  Eigen::MatrixXd features(kFeatureDim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = embed(table[static_cast<std::size_t>(i)], model);
    for (std::size_t k = 0; k < kFeatureDim; ++k) features(static_cast<Eigen::Index>(k), i) = x[k];
  }
  Eigen::MatrixXd reps = Eigen::MatrixXd::Zero(kRepresentationDim, n);
  const auto& levels = index.levels();
  std::vector<LevelTrace> traces(levels.size());
  const double edge_total = static_cast<double>(std::max<std::size_t>(index.edge_count(), 1));
  double loss = 0.0;

  for (std::size_t h = 0; h < levels.size(); ++h) {
    auto& tr = traces[h];
    const auto& level = levels[h];
    for (auto v : level)
      for (auto c : index.children(v)) tr.edges.push_back({v, c});

    if (!tr.edges.empty()) {
      Eigen::MatrixXd input(kEdgeClassifierInput, static_cast<Eigen::Index>(tr.edges.size()));
      std::size_t e = 0;
      for (auto v : level) {
        const auto kids = index.children(v);
        if (kids.empty()) continue;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(kRepresentationDim);
        for (auto c : kids) mean += reps.col(static_cast<Eigen::Index>(c));
        mean /= static_cast<double>(kids.size());
        for (auto c : kids) {
          const auto col = static_cast<Eigen::Index>(e++);
          input.col(col).segment(0, kFeatureDim) = features.col(static_cast<Eigen::Index>(v));
          input.col(col).segment(kFeatureDim, kRepresentationDim) =
              reps.col(static_cast<Eigen::Index>(c));
          input.col(col).segment(kFeatureDim + kRepresentationDim, kRepresentationDim) = mean;
        }
      }
      const Eigen::MatrixXd logits = model.edge_classifier().forward(input, tr.edge_trace);
      tr.dlogits.resize(1, logits.cols());
      for (std::size_t k = 0; k < tr.edges.size(); ++k) {
        const double z = logits(0, static_cast<Eigen::Index>(k));
        const int target = y[tr.edges[k].child];
        const auto fl = focal_loss(z, target, alpha, gamma);
        loss += fl.loss / edge_total;
        tr.dlogits(0, static_cast<Eigen::Index>(k)) = fl.grad / edge_total;
        if (counts) {
          const bool pred = sigmoid(z) >= tau;
          if (pred && target == 1) ++counts->true_positive;
          if (pred && target == 0) ++counts->false_positive;
          if (!pred && target == 1) ++counts->false_negative;
        }
      }
    }

    // Merge sets come from the labels alone; predictions above are only scored.
    tr.merged.resize(level.size());
    Eigen::MatrixXd input = Eigen::MatrixXd::Zero(kRegionEncoderInput,
                                                  static_cast<Eigen::Index>(level.size()));
    for (std::size_t k = 0; k < level.size(); ++k) {
      const auto v = level[k];
      for (auto c : index.children(v))
        if (y[c] == 0) tr.merged[k].push_back(c);
      const auto col = static_cast<Eigen::Index>(k);
      input.col(col).segment(0, kFeatureDim) = features.col(static_cast<Eigen::Index>(v));
      if (tr.merged[k].empty()) continue;
      Eigen::VectorXd agg = Eigen::VectorXd::Zero(kRepresentationDim);
      for (auto c : tr.merged[k]) agg += reps.col(static_cast<Eigen::Index>(c));
      input.col(col).segment(kFeatureDim, kRepresentationDim) =
          agg / static_cast<double>(tr.merged[k].size());
    }
    const Eigen::MatrixXd out = model.region_encoder().forward(input, tr.encoder_trace);
    for (std::size_t k = 0; k < level.size(); ++k)
      reps.col(static_cast<Eigen::Index>(level[k])) = out.col(static_cast<Eigen::Index>(k));
  }

  if (!grad) return loss;

  Eigen::MatrixXd d_reps = Eigen::MatrixXd::Zero(kRepresentationDim, n);
  Eigen::MatrixXd d_features = Eigen::MatrixXd::Zero(kFeatureDim, n);
  for (std::size_t h = levels.size(); h-- > 0;) {
    auto& tr = traces[h];
    const auto& level = levels[h];

    Eigen::MatrixXd d_out(kRepresentationDim, static_cast<Eigen::Index>(level.size()));
    for (std::size_t k = 0; k < level.size(); ++k)
      d_out.col(static_cast<Eigen::Index>(k)) = d_reps.col(static_cast<Eigen::Index>(level[k]));
    const Eigen::MatrixXd d_in =
        model.region_encoder().backward(tr.encoder_trace, d_out, grad->region_encoder());
    for (std::size_t k = 0; k < level.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      d_features.col(static_cast<Eigen::Index>(level[k])) += d_in.col(col).segment(0, kFeatureDim);
      const auto& merged = tr.merged[k];
      if (merged.empty()) continue;
      const Eigen::VectorXd share =
          d_in.col(col).segment(kFeatureDim, kRepresentationDim) / static_cast<double>(merged.size());
      for (auto c : merged) d_reps.col(static_cast<Eigen::Index>(c)) += share;
    }

    if (tr.edges.empty()) continue;
    const Eigen::MatrixXd d_edge =
        model.edge_classifier().backward(tr.edge_trace, tr.dlogits, grad->edge_classifier());
    std::size_t e = 0;
    for (auto v : level) {
      const auto kids = index.children(v);
      if (kids.empty()) continue;
      Eigen::VectorXd d_mean = Eigen::VectorXd::Zero(kRepresentationDim);
      for (auto c : kids) {
        const auto col = static_cast<Eigen::Index>(e++);
        d_features.col(static_cast<Eigen::Index>(v)) += d_edge.col(col).segment(0, kFeatureDim);
        d_reps.col(static_cast<Eigen::Index>(c)) +=
            d_edge.col(col).segment(kFeatureDim, kRepresentationDim);
        d_mean += d_edge.col(col).segment(kFeatureDim + kRepresentationDim, kRepresentationDim);
      }
      d_mean /= static_cast<double>(kids.size());
      for (auto c : kids) d_reps.col(static_cast<Eigen::Index>(c)) += d_mean;
    }
  }

  auto& emb = grad->role_embedding();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto role = static_cast<Eigen::Index>(table[static_cast<std::size_t>(i)].role_index);
    emb.row(role) += d_features.col(i).segment(0, kRoleEmbeddingDim).transpose();
  }
  return loss;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(
    std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * validation_fraction));
  if (n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  else n_val = 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

PrfScores evaluate_edges(const DecompositionModel& model, const std::vector<LabeledTree>& dataset,
                         const std::vector<std::size_t>& subset, double tau,
                         const RoleVocabulary& vocab) {
  EdgeCounts counts;
  for (auto i : subset) {
    const auto d = decompose_at(dataset[i].tree, model, tau, vocab);
    counts += edge_counts(d.decisions, dataset[i].labels);
  }
  return counts.scores();
}

TrainResult train_with_log(const std::vector<LabeledTree>& dataset, const TrainConfig& config,
                           const EpochCallback& on_epoch, const RoleVocabulary& vocab) {
  config.validate();
  if (dataset.empty()) throw TrainError(TrainError::Kind::kEmptyDataset, "empty training set");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    try {
      edge_targets(TreeIndex(dataset[i].tree), dataset[i].labels);
    } catch (const TrainError& e) {
      throw TrainError(e.kind(), "tree " + std::to_string(i) + ": " + e.what());
    }
  }

  TrainResult result;
  result.model = DecompositionModel::initialize(config.seed);
  result.model.set_tau(config.train_tau);
  auto& meta = result.model.metadata();
  meta.train_config = config;
  if (config.epochs == 0) return result;

  std::tie(result.train_indices, result.validation_indices) =
      split_dataset(dataset.size(), config.validation_fraction, config.seed);
  const auto& val = result.validation_indices.empty() ? result.train_indices
                                                      : result.validation_indices;

  DecompositionModel& model = result.model;
  DecompositionModel grad;
  Adam adam(config);
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = result.train_indices;

  DecompositionModel best = model;
  double best_f1 = -1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    EpochLog log;
    log.epoch = epoch;
    EdgeCounts train_counts;
    double norm_sum = 0.0;
    for (auto i : order) {
      grad.set_zero();
      log.train_loss += teacher_forced_loss(model, dataset[i].tree, dataset[i].labels,
                                            config.alpha, config.gamma, &grad, &train_counts,
                                            config.train_tau, vocab);
      auto g = tensors(grad);
      const double norm = std::sqrt(squared_norm(g));
      norm_sum += norm;
      if (norm > config.clip_norm) {
        const double scale = config.clip_norm / norm;
        for (auto& t : g)
          for (double& v : t) v *= scale;
      }
      adam.step(model, grad);
    }
    log.train_loss /= static_cast<double>(order.size());
    log.grad_norm = norm_sum / static_cast<double>(order.size());
    log.train_edge = train_counts.scores();
    log.validation_edge = evaluate_edges(model, dataset, val, config.train_tau, vocab);
    const double gap = std::abs(log.train_edge.f1 - log.validation_edge.f1);
    if (log.validation_edge.f1 > best_f1 || (log.validation_edge.f1 == best_f1 && gap < best_gap)) {
      best_f1 = log.validation_edge.f1;
      best_gap = gap;
      best_epoch = epoch;
      best = model;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  model = std::move(best);
  model.metadata().epochs_run = config.epochs;
  model.metadata().best_epoch = best_epoch;
  model.metadata().best_val_edge_f1 = best_f1;
  return result;
}

DecompositionModel train(const std::vector<LabeledTree>& dataset, const TrainConfig& config,
                         const RoleVocabulary& vocab) {
  return train_with_log(dataset, config, {}, vocab).model;
}

std::vector<ThresholdSweepRow> threshold_sweep(const PartitionAt& decompose_fn,
                                               const ValidationSet& validation,
                                               const std::vector<double>& taus) {
  if (validation.empty())
    throw TrainError(TrainError::Kind::kEmptyValidation, "empty validation set");
  if (taus.empty()) throw ConfigError("no candidate taus");
  for (double t : taus)
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("tau " + std::to_string(t) + " outside (0,1)");
  std::vector<ThresholdSweepRow> rows;
  for (double tau : taus) {
    ThresholdSweepRow row;
    row.tau = tau;
    for (const auto& [tree, truth] : validation)
      row.counts += region_prf(decompose_fn(tree, tau), truth).counts;
    row.scores = row.counts.scores();
    rows.push_back(row);
  }
  return rows;
}

double tune_threshold(const PartitionAt& decompose_fn, const ValidationSet& validation,
                      const std::vector<double>& taus) {
  const auto rows = threshold_sweep(decompose_fn, validation, taus);
  const ThresholdSweepRow* best = &rows.front();
  for (const auto& row : rows)
    if (row.scores.f1 > best->scores.f1 || (row.scores.f1 == best->scores.f1 && row.tau > best->tau))
      best = &row;
  return best->tau;
}

double tune_threshold(const DecompositionModel& model, const ValidationSet& validation,
                      const std::vector<double>& taus, const RoleVocabulary& vocab) {
  return tune_threshold(
      [&](const AXTree& tree, double tau) { return decompose_at(tree, model, tau, vocab).partition; },
      validation, taus);
}

}  // namespace axregion
