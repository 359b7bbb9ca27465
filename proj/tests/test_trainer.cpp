#include <gtest/gtest.h>

#include <cmath>

#include "axregion/checkpoint.hpp"
#include "axregion/rng.hpp"
#include "axregion/synthetic.hpp"
#include "axregion/trainer.hpp"

using namespace axregion;

namespace {

// Runs the model but merges children according to the labels, recording
// every logit. Built only from the public inference pieces.
class TeacherForcedScorer : public LevelScorer {
 public:
  TeacherForcedScorer(const DecompositionModel& model, const EdgeLabelSet& labels)
      : inner_(model), labels_(labels) {}
  void begin(const TreeIndex& index) override {
    index_ = &index;
    inner_.begin(index);
  }
  std::vector<double> score(std::span<const IndexedEdge> edges) override {
    auto logits = inner_.score(edges);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto y = *labels_.get(index_->node(edges[e].parent).id, index_->node(edges[e].child).id);
      scored.emplace_back(logits[e], y == EdgeLabel::kCut ? 1 : 0);
    }
    return logits;
  }
  void encode(std::span<const std::size_t> nodes,
              std::span<const std::vector<std::size_t>>) override {
    std::vector<std::vector<std::size_t>> merged(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (auto c : index_->children(nodes[k]))
        if (*labels_.get(index_->node(nodes[k]).id, index_->node(c).id) == EdgeLabel::kMerge)
          merged[k].push_back(c);
    inner_.encode(nodes, merged);
  }
  std::vector<std::pair<double, int>> scored;

 private:
  ModelScorer inner_;
  const EdgeLabelSet& labels_;
  const TreeIndex* index_ = nullptr;
};

double oracle_loss(const DecompositionModel& m, const AXTree& t, const EdgeLabelSet& labels) {
  TeacherForcedScorer scorer(m, labels);
  decompose_with(t, scorer, 0.5);
  double sum = 0;
  for (const auto& [z, y] : scorer.scored) sum += focal_loss(z, y, 0.75, 2.0).loss;
  return sum / static_cast<double>(scorer.scored.size());
}

EdgeLabelSet flipped(const EdgeLabelSet& labels) {
  EdgeLabelSet out;
  for (const auto& [key, label] : labels.labels())
    out.set(key.first, key.second, label == EdgeLabel::kCut ? EdgeLabel::kMerge : EdgeLabel::kCut);
  return out;
}

// Pointer to the k-th scalar parameter in tensor visiting order.
double* parameter(DecompositionModel& m, std::size_t k) {
  double* out = nullptr;
  std::size_t seen = 0;
  m.for_each_tensor([&](std::string_view, std::size_t, std::size_t, std::span<double> data) {
    if (!out && k < seen + data.size()) out = &data[k - seen];
    seen += data.size();
  });
  return out;
}

}  // namespace

TEST(TeacherForcedLoss, MatchesIndependentForward) {
  Rng rng(1);
  const auto m = DecompositionModel::initialize(2);
  for (int i = 0; i < 10; ++i) {
    const auto t = synthetic_page(rng, static_cast<std::size_t>(i));
    const auto labels = role_rule_labels(t);
    EXPECT_NEAR(teacher_forced_loss(m, t, labels, 0.75, 2.0), oracle_loss(m, t, labels), 1e-12);
    // Merged sets follow the labels, not the predictions.
    const auto other = flipped(labels);
    EXPECT_NEAR(teacher_forced_loss(m, t, other, 0.75, 2.0), oracle_loss(m, t, other), 1e-12);
  }
}

TEST(TeacherForcedLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  auto m = DecompositionModel::initialize(4);
  const auto t = synthetic_page(rng, 0);
  // Flip a few labels so both classes carry gradient.
  const auto rule = role_rule_labels(t);
  auto labels = rule;
  std::size_t n = 0;
  for (const auto& [key, label] : rule.labels())
    if (n++ % 4 == 0) labels.set(key.first, key.second, label == EdgeLabel::kCut ? EdgeLabel::kMerge : EdgeLabel::kCut);

  DecompositionModel grad = m;
  grad.set_zero();
  teacher_forced_loss(m, t, labels, 0.75, 2.0, &grad);
  const std::size_t total = m.parameter_count();
  const double h = 1e-6;
  int checked = 0;
  double worst = 0;
  for (int trial = 0; checked < 60 && trial < 2000; ++trial) {
    const std::size_t k = rng.below(total);
    double* p = parameter(m, k);
    const double g = *parameter(grad, k);
    const double saved = *p;
    *p = saved + h;
    const double up = teacher_forced_loss(m, t, labels, 0.75, 2.0);
    *p = saved - h;
    const double down = teacher_forced_loss(m, t, labels, 0.75, 2.0);
    *p = saved;
    const double fd = (up - down) / (2 * h);
    if (std::abs(fd) < 1e-7 && std::abs(g) < 1e-7) continue;  // dead unit
    ++checked;
    worst = std::max(worst, std::abs(g - fd) / std::max(std::abs(fd), std::abs(g)));
  }
  EXPECT_GE(checked, 30);
  EXPECT_LT(worst, 1e-4);
}

TEST(TeacherForcedLoss, LabelMismatch) {
  const auto t = parse_axtree("[1] main\n\t[2] link 'a'\n", "u");
  EdgeLabelSet labels;
  labels.set("1", "9", EdgeLabel::kCut);
  try {
    teacher_forced_loss(DecompositionModel::initialize(1), t, labels, 0.75, 2.0);
    FAIL();
  } catch (const TrainError& e) {
    EXPECT_EQ(e.kind(), TrainError::Kind::kLabelMismatch);
  }
}

TEST(Train, EmptyDatasetAndLabelMismatch) {
  TrainConfig config;
  config.epochs = 1;
  try {
    train({}, config);
    FAIL();
  } catch (const TrainError& e) {
    EXPECT_EQ(e.kind(), TrainError::Kind::kEmptyDataset);
  }
  auto data = synthetic_corpus(3, 1);
  data[1].labels = EdgeLabelSet{};
  try {
    train(data, config);
    FAIL();
  } catch (const TrainError& e) {
    EXPECT_EQ(e.kind(), TrainError::Kind::kLabelMismatch);
  }
}

TEST(Train, ZeroEpochsReturnsInitializedModel) {
  TrainConfig config;
  config.epochs = 0;
  config.seed = 17;
  auto trained = train(synthetic_corpus(5, 2), config);
  auto init = DecompositionModel::initialize(17);
  EXPECT_TRUE(trained.metadata().train_config.has_value());
  trained.metadata() = init.metadata();
  EXPECT_TRUE(trained == init);
}

TEST(Train, SameSeedGivesIdenticalCheckpoints) {
  const auto data = synthetic_corpus(30, 5);
  TrainConfig config;
  config.epochs = 2;
  config.seed = 9;
  const auto a = serialize_checkpoint(train(data, config));
  const auto b = serialize_checkpoint(train(data, config));
  EXPECT_EQ(a, b);
  config.seed = 10;
  EXPECT_NE(a, serialize_checkpoint(train(data, config)));
}

TEST(Train, LossFallsAndBestEpochRecorded) {
  const auto data = synthetic_corpus(60, 6);
  TrainConfig config;
  config.epochs = 4;
  const auto result = train_with_log(data, config);
  ASSERT_EQ(result.log.size(), 4u);
  EXPECT_LT(result.log.back().train_loss, result.log.front().train_loss);
  double best = -1;
  int best_epoch = 0;
  for (const auto& row : result.log)
    if (row.validation_edge.f1 > best) best = row.validation_edge.f1, best_epoch = row.epoch;
  EXPECT_EQ(result.model.metadata().best_val_edge_f1, best);
  EXPECT_EQ(result.model.metadata().best_epoch, best_epoch);
  // The returned model reproduces the logged validation score.
  EXPECT_DOUBLE_EQ(evaluate_edges(result.model, data, result.validation_indices, 0.5).f1, best);
}

TEST(SplitDataset, SizesAndDisjointness) {
  for (std::size_t n : {1u, 2u, 10u, 200u}) {
    const auto [train_idx, val_idx] = split_dataset(n, 0.1, 42);
    EXPECT_EQ(train_idx.size() + val_idx.size(), n);
    std::set<std::size_t> all(train_idx.begin(), train_idx.end());
    all.insert(val_idx.begin(), val_idx.end());
    EXPECT_EQ(all.size(), n);
    EXPECT_FALSE(train_idx.empty());
    if (n >= 2) EXPECT_GE(val_idx.size(), 1u);
    if (n == 200) EXPECT_EQ(val_idx.size(), 20u);
  }
  EXPECT_EQ(split_dataset(50, 0.1, 1), split_dataset(50, 0.1, 1));
}

TEST(TuneThreshold, CalibratedStub) {
  // Cuts score exactly 0.9 and merges 0.1, so any tau in (0.1, 0.9] is perfect.
  const PartitionAt stub = [](const AXTree& tree, double tau) {
    const TreeIndex index(tree);
    const auto truth = role_rule_labels(tree);
    std::vector<std::string> roots;
    for (std::size_t i = 1; i < index.size(); ++i) {
      const bool cut = *truth.get(index.node(index.parent(i)).id, index.node(i).id) == EdgeLabel::kCut;
      if ((cut ? 0.9 : 0.1) >= tau) roots.push_back(index.node(i).id);
    }
    return partition_from_region_roots(tree, roots);
  };
  ValidationSet validation;
  for (const auto& lt : synthetic_corpus(15, 3))
    validation.emplace_back(lt.tree, partition_from_labels(lt.tree, lt.labels));
  const std::vector<double> taus = {0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95};
  const auto rows = threshold_sweep(stub, validation, taus);
  for (const auto& row : rows) {
    if (row.tau > 0.1 && row.tau <= 0.9)
      EXPECT_DOUBLE_EQ(row.scores.f1, 1.0) << row.tau;
    else
      EXPECT_LT(row.scores.f1, 1.0) << row.tau;
  }
  EXPECT_EQ(tune_threshold(stub, validation, taus), 0.9);
  EXPECT_EQ(tune_threshold(stub, validation, {0.3}), 0.3);
}

TEST(TuneThreshold, RuleModelAndErrors) {
  ValidationSet validation;
  for (const auto& lt : synthetic_corpus(10, 4))
    validation.emplace_back(lt.tree, partition_from_labels(lt.tree, lt.labels));
  // The rule model is exact at every tau; the tie goes to the largest.
  EXPECT_EQ(tune_threshold(rule_model(), validation, {0.2, 0.5, 0.8}), 0.8);
  try {
    tune_threshold(rule_model(), ValidationSet{}, {0.5});
    FAIL();
  } catch (const TrainError& e) {
    EXPECT_EQ(e.kind(), TrainError::Kind::kEmptyValidation);
  }
  EXPECT_THROW(tune_threshold(rule_model(), validation, {1.5}), ConfigError);
}

TEST(TrainConfig, TextRoundTrip) {
  TrainConfig c;
  c.epochs = 7;
  c.learning_rate = 3e-4;
  c.taus = {0.4, 0.55};
  EXPECT_EQ(TrainConfig::parse(c.to_text()), c);
  EXPECT_THROW(TrainConfig::parse("epochs = -1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("alpha = 1.5\n"), ConfigError);
}
