#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axregion/axtree.hpp"
#include "axregion/decomposer.hpp"

namespace axregion {

class MetricError : public std::runtime_error {
 public:
  enum class Kind { kDomainMismatch, kNodeSetMismatch, kUnknownId, kEmptyBefore };
  MetricError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Confusion counts with cut as the positive class.
struct EdgeCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  EdgeCounts& operator+=(const EdgeCounts& o) {
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    return *this;
  }
  // No positives on either side scores 1; otherwise an empty denominator
  // scores 0.
  PrfScores scores() const;
};

EdgeCounts edge_counts(const EdgeLabelSet& predictions, const EdgeLabelSet& truth);
PrfScores edge_f1(const EdgeLabelSet& predictions, const EdgeLabelSet& truth);

struct RegionMatch {
  std::size_t truth_region = 0;
  std::size_t pred_region = 0;
  double iou = 0.0;
};

// Matched / predicted / ground-truth region counts; sums across pages.
struct RegionCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;

  RegionCounts& operator+=(const RegionCounts& o) {
    matched += o.matched;
    predicted += o.predicted;
    truth += o.truth;
    return *this;
  }
  PrfScores scores() const;
};

struct RegionMatchReport {
  std::vector<RegionMatch> matched;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou_threshold = 0.5;
  RegionCounts counts;
};

// One-to-one matching, greedy by descending IoU; a pair counts when its IoU
// meets the threshold.
RegionMatchReport region_prf(const RegionPartition& pred, const RegionPartition& truth,
                             double iou_threshold = 0.5);

double lca_depth_ratio(const AXTree& tree, std::string_view id_a, std::string_view id_b);
double lca_depth_ratio(const TreeIndex& index, std::size_t a, std::size_t b);

// (|only in after| + |only in before|) / |before|.
double change_ratio(const AXTree& before, const AXTree& after);
double change_ratio(const std::set<std::string>& before_ids,
                    const std::set<std::string>& after_ids);
std::set<std::string> collect_ids(const AXTree& tree);

using TokenCountFn = std::function<std::size_t(std::string_view)>;

// Default approximation: half of ceil(bytes / 4) plus half of the
// whitespace-separated word count, rounded up.
std::size_t approximate_token_count(std::string_view text);

class TokenCounter {
 public:
  TokenCounter() : fn_(approximate_token_count), name_("approx-bytes4-words") {}
  TokenCounter(TokenCountFn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

  std::size_t operator()(std::string_view text) const { return fn_(text); }
  const std::string& name() const { return name_; }

 private:
  TokenCountFn fn_;
  std::string name_;
};

std::size_t token_count(std::string_view text, const TokenCounter& counter = {});

}  // namespace axregion
