#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axregion/axtree.hpp"

namespace axregion {

inline constexpr std::size_t kVocabularySize = 204;
inline constexpr std::size_t kRoleEmbeddingDim = 11;
inline constexpr std::size_t kNumericFeatureCount = 5;
inline constexpr std::size_t kFeatureDim = kRoleEmbeddingDim + kNumericFeatureCount;

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered role list; the last entry is the slot for roles not in the list.
class RoleVocabulary {
 public:
  // One role per line; '#' lines and blank lines ignored. Must yield exactly
  // kVocabularySize distinct entries.
  static RoleVocabulary parse(std::string_view text);
  static RoleVocabulary load(const std::string& path);
  // The vocabulary compiled from data/roles.txt.
  static const RoleVocabulary& builtin();

  std::size_t size() const { return roles_.size(); }
  std::size_t unknown_index() const { return roles_.size() - 1; }
  std::size_t index_of(std::string_view role) const;
  const std::string& role(std::size_t index) const { return roles_.at(index); }
  // FNV-1a over the newline-joined role list; stored in checkpoints.
  std::uint64_t hash() const { return hash_; }

 private:
  explicit RoleVocabulary(std::vector<std::string> roles);

  std::vector<std::string> roles_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t hash_ = 0;
};

struct NodeFeatures {
  std::size_t role_index = 0;
  double depth = 0;
  double subtree_size = 1;
  double num_children = 0;
  double name_presence = 0;
  double child_role_diversity = 0;

  std::array<double, kNumericFeatureCount> numeric() const {
    return {depth, subtree_size, num_children, name_presence, child_role_diversity};
  }
  bool operator==(const NodeFeatures&) const = default;
};

// Features for every node of an indexed tree, in document order.
std::vector<NodeFeatures> compute_feature_table(const TreeIndex& index,
                                                const RoleVocabulary& vocab);

std::map<std::string, NodeFeatures> compute_features(
    const AXTree& tree, const RoleVocabulary& vocab = RoleVocabulary::builtin());

class DecompositionModel;

std::array<double, kFeatureDim> embed(const NodeFeatures& features,
                                      const DecompositionModel& model);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace axregion
