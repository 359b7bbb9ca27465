#include "axregion/features.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "axregion/embedded.hpp"
#include "axregion/model.hpp"

namespace axregion {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RoleVocabulary::RoleVocabulary(std::vector<std::string> roles) : roles_(std::move(roles)) {
  if (roles_.size() != kVocabularySize)
    throw VocabularyError("role vocabulary has " + std::to_string(roles_.size()) +
                          " entries, expected " + std::to_string(kVocabularySize));
  std::string joined;
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    if (!index_.emplace(roles_[i], i).second)
      throw VocabularyError("duplicate role '" + roles_[i] + "' in vocabulary");
    joined += roles_[i];
    joined += '\n';
  }
  hash_ = fnv1a64(joined);
}

RoleVocabulary RoleVocabulary::parse(std::string_view text) {
  std::vector<std::string> roles;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    roles.push_back(line.substr(first, last - first + 1));
  }
  return RoleVocabulary(std::move(roles));
}

RoleVocabulary RoleVocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabularyError("cannot read role vocabulary '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const RoleVocabulary& RoleVocabulary::builtin() {
  static const RoleVocabulary vocab = parse(embedded::role_vocabulary());
  return vocab;
}

std::size_t RoleVocabulary::index_of(std::string_view role) const {
  if (auto it = index_.find(role); it != index_.end() && it->second != unknown_index())
    return it->second;
  return unknown_index();
}

std::vector<NodeFeatures> compute_feature_table(const TreeIndex& index,
                                                const RoleVocabulary& vocab) {
  std::vector<NodeFeatures> table(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const AXNode& node = index.node(i);
    auto& f = table[i];
    f.role_index = vocab.index_of(node.role);
    f.depth = static_cast<double>(index.depth(i));
    f.subtree_size = static_cast<double>(index.subtree_size(i));
    const auto kids = index.children(i);
    f.num_children = static_cast<double>(kids.size());
    f.name_presence = node.name.empty() ? 0.0 : 1.0;
    if (!kids.empty()) {
      std::set<std::string_view> roles;
      for (auto c : kids) roles.insert(index.node(c).role);
      f.child_role_diversity = static_cast<double>(roles.size()) / static_cast<double>(kids.size());
    }
  }
  return table;
}

std::map<std::string, NodeFeatures> compute_features(const AXTree& tree,
                                                     const RoleVocabulary& vocab) {
  const TreeIndex index(tree);
  const auto table = compute_feature_table(index, vocab);
  std::map<std::string, NodeFeatures> out;
  for (std::size_t i = 0; i < index.size(); ++i) out.emplace(index.node(i).id, table[i]);
  return out;
}

std::array<double, kFeatureDim> embed(const NodeFeatures& features,
                                      const DecompositionModel& model) {
  const auto& table = model.role_embedding();
  if (features.role_index >= static_cast<std::size_t>(table.rows()))
    throw ShapeMismatch("role index " + std::to_string(features.role_index) +
                        " outside the embedding table");
  std::array<double, kFeatureDim> out{};
  for (std::size_t k = 0; k < kRoleEmbeddingDim; ++k)
    out[k] = table(static_cast<Eigen::Index>(features.role_index), static_cast<Eigen::Index>(k));
  const auto numeric = features.numeric();
  for (std::size_t k = 0; k < kNumericFeatureCount; ++k) out[kRoleEmbeddingDim + k] = numeric[k];
  return out;
}

}  // namespace axregion
