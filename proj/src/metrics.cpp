#include "axregion/metrics.hpp"

#include <algorithm>
#include <map>

namespace axregion {

namespace {

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PrfScores EdgeCounts::scores() const {
  const std::size_t predicted = true_positive + false_positive;
  const std::size_t actual = true_positive + false_negative;
  if (predicted == 0 && actual == 0) return {1.0, 1.0, 1.0};
  PrfScores s;
  s.precision = safe_ratio(true_positive, predicted);
  s.recall = safe_ratio(true_positive, actual);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

EdgeCounts edge_counts(const EdgeLabelSet& predictions, const EdgeLabelSet& truth) {
  if (predictions.size() != truth.size())
    throw MetricError(MetricError::Kind::kDomainMismatch,
                      "prediction and truth label different edge sets");
  EdgeCounts c;
  auto p = predictions.labels().begin();
  for (const auto& [key, label] : truth.labels()) {
    if (p->first != key)
      throw MetricError(MetricError::Kind::kDomainMismatch,
                        "edge " + key.first + " -> " + key.second + " missing from predictions");
    const bool pred_cut = p->second == EdgeLabel::kCut;
    const bool true_cut = label == EdgeLabel::kCut;
    if (pred_cut && true_cut) ++c.true_positive;
    if (pred_cut && !true_cut) ++c.false_positive;
    if (!pred_cut && true_cut) ++c.false_negative;
    ++p;
  }
  return c;
}

PrfScores edge_f1(const EdgeLabelSet& predictions, const EdgeLabelSet& truth) {
  return edge_counts(predictions, truth).scores();
}

PrfScores RegionCounts::scores() const {
  PrfScores s;
  s.precision = safe_ratio(matched, predicted);
  s.recall = safe_ratio(matched, truth);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

RegionMatchReport region_prf(const RegionPartition& pred, const RegionPartition& truth,
                             double iou_threshold) {
  std::map<std::string, std::size_t, std::less<>> truth_region;
  for (const auto& r : truth.regions)
    for (const auto& id : r.members) truth_region[id] = r.index;
  std::size_t pred_nodes = 0;
  // intersections[(truth, pred)]
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> overlap;
  for (const auto& r : pred.regions) {
    for (const auto& id : r.members) {
      const auto it = truth_region.find(id);
      if (it == truth_region.end())
        throw MetricError(MetricError::Kind::kNodeSetMismatch,
                          "node '" + id + "' is not covered by the ground truth");
      ++overlap[{it->second, r.index}];
      ++pred_nodes;
    }
  }
  if (pred_nodes != truth_region.size())
    throw MetricError(MetricError::Kind::kNodeSetMismatch,
                      "partitions cover different node sets");

  std::vector<RegionMatch> candidates;
  for (const auto& [key, inter] : overlap) {
    const auto truth_size = truth.regions[key.first].members.size();
    const auto pred_size = pred.regions[key.second].members.size();
    const double iou = static_cast<double>(inter) /
                       static_cast<double>(truth_size + pred_size - inter);
    if (iou >= iou_threshold) candidates.push_back({key.first, key.second, iou});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const RegionMatch& a, const RegionMatch& b) { return a.iou > b.iou; });

  RegionMatchReport report;
  report.iou_threshold = iou_threshold;
  std::vector<bool> truth_used(truth.regions.size(), false);
  std::vector<bool> pred_used(pred.regions.size(), false);
  for (const auto& c : candidates) {
    if (truth_used[c.truth_region] || pred_used[c.pred_region]) continue;
    truth_used[c.truth_region] = pred_used[c.pred_region] = true;
    report.matched.push_back(c);
  }
  report.counts = {report.matched.size(), pred.regions.size(), truth.regions.size()};
  const auto s = report.counts.scores();
  report.precision = s.precision;
  report.recall = s.recall;
  report.f1 = s.f1;
  return report;
}

double lca_depth_ratio(const TreeIndex& index, std::size_t a, std::size_t b) {
  if (index.max_depth() == 0) return 0.0;
  while (index.depth(a) > index.depth(b)) a = index.parent(a);
  while (index.depth(b) > index.depth(a)) b = index.parent(b);
  while (a != b) {
    a = index.parent(a);
    b = index.parent(b);
  }
  return static_cast<double>(index.depth(a)) / static_cast<double>(index.max_depth());
}

double lca_depth_ratio(const AXTree& tree, std::string_view id_a, std::string_view id_b) {
  const TreeIndex index(tree);
  const auto a = index.find(id_a);
  const auto b = index.find(id_b);
  if (!a) throw MetricError(MetricError::Kind::kUnknownId, "unknown id '" + std::string(id_a) + "'");
  if (!b) throw MetricError(MetricError::Kind::kUnknownId, "unknown id '" + std::string(id_b) + "'");
  return lca_depth_ratio(index, *a, *b);
}

std::set<std::string> collect_ids(const AXTree& tree) {
  std::set<std::string> ids;
  std::vector<const AXNode*> stack{&tree.root()};
  while (!stack.empty()) {
    const AXNode* n = stack.back();
    stack.pop_back();
    ids.insert(n->id);
    for (const auto& c : n->children) stack.push_back(&c);
  }
  return ids;
}

double change_ratio(const std::set<std::string>& before_ids,
                    const std::set<std::string>& after_ids) {
  if (before_ids.empty())
    throw MetricError(MetricError::Kind::kEmptyBefore, "change ratio of an empty snapshot");
  std::size_t removed = 0;
  for (const auto& id : before_ids) removed += !after_ids.count(id);
  std::size_t added = 0;
  for (const auto& id : after_ids) added += !before_ids.count(id);
  return static_cast<double>(added + removed) / static_cast<double>(before_ids.size());
}

double change_ratio(const AXTree& before, const AXTree& after) {
  return change_ratio(collect_ids(before), collect_ids(after));
}

std::size_t approximate_token_count(std::string_view text) {
  if (text.empty()) return 0;
  const std::size_t byte_part = (text.size() + 3) / 4;
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (byte_part + words + 1) / 2;
}

std::size_t token_count(std::string_view text, const TokenCounter& counter) {
  return counter(text);
}

}  // namespace axregion
