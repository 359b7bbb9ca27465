#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "axregion/axtree.hpp"
#include "axregion/decomposer.hpp"
#include "axregion/rng.hpp"
#include "axregion/trainer.hpp"

namespace axregion {

struct SyntheticOptions {
  std::size_t min_nodes = 12;
  std::size_t max_nodes = 30;
};

// Page-shaped tree: banner / navigation / main / forms / lists / footer
// under a RootWebArea, with generic wrappers and decoy containers mixed in.
AXTree synthetic_page(Rng& rng, std::size_t page_index, const SyntheticOptions& options = {});

// Unstructured random tree with up to `max_nodes` nodes, roles drawn from
// `roles`. Names are set on roughly half of the nodes.
AXTree random_tree(Rng& rng, std::size_t max_nodes, const std::vector<std::string>& roles);

const std::set<std::string>& default_rule_roles();  // navigation, list, form

// Cut iff the child's role is in `cut_roles`.
EdgeLabelSet role_rule_labels(const AXTree& tree,
                              const std::set<std::string>& cut_roles = default_rule_roles());

// Hand-set weights whose edge logit is +10 when the child's role is in
// `cut_roles` and -10 otherwise, at every tau in (0,1).
DecompositionModel rule_model(const std::set<std::string>& cut_roles = default_rule_roles(),
                              const RoleVocabulary& vocab = RoleVocabulary::builtin());

std::vector<LabeledTree> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                          const SyntheticOptions& options = {});

// Directory corpus: <name>.axtree plus <name>.regions (comma-separated region
// root ids). Files are read in name order.
void write_labeled_corpus(const std::string& dir, const std::vector<LabeledTree>& corpus);
std::vector<LabeledTree> read_labeled_corpus(const std::string& dir);

std::string format_region_roots(const RegionPartition& partition);
std::vector<std::string> parse_region_roots(const std::string& text);

}  // namespace axregion
