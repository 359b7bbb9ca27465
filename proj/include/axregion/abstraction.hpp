#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axregion/axtree.hpp"
#include "axregion/decomposer.hpp"

namespace axregion {

enum class AbstractionBackend { kHeuristic, kLm };
std::string_view backend_name(AbstractionBackend backend);

struct RegionAbstraction {
  std::size_t region_index = 0;
  std::string region_id;  // "R<i>"
  std::string purpose;
  std::string state_summary;
  AbstractionBackend backend = AbstractionBackend::kHeuristic;
  std::int64_t latency_ms = 0;

  bool operator==(const RegionAbstraction&) const = default;
};

class AbstractionError : public std::runtime_error {
 public:
  enum class Kind { kEmptySubtree, kLmTimeout, kLmUnavailable, kLmMalformedReply, kConfig };
  AbstractionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LmEndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_name = "region-abstractor";
  std::string api_key_env_var_name = "AXREGION_LM_API_KEY";
  int timeout_ms = 30000;
  int max_retries = 2;
  int concurrency = 4;

  // JSON object with the field names above; missing fields keep defaults.
  static LmEndpointConfig parse(std::string_view json_text);
  static LmEndpointConfig load(const std::string& path);
  void validate() const;
};

// One prompt in, assistant text out. Throws AbstractionError on timeouts
// and transport failures.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// POST {base_url}/chat/completions with a single user message and
// temperature 0; reads choices[0].message.content.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LmEndpointConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  LmEndpointConfig config_;
  std::string origin_;
  std::string path_prefix_;
};

// Members of `region` as a standalone tree (cut-off descendants dropped).
AXTree region_subtree(const AXTree& tree, const Region& region);

std::string render_abstraction_prompt(const AXTree& subtree);

struct ParsedAbstraction {
  std::string purpose;
  std::string state_summary;
};
// Accepts a bare JSON object or one inside a fenced block / surrounding prose.
ParsedAbstraction parse_abstraction_reply(std::string_view reply);

class Abstractor {
 public:
  virtual ~Abstractor() = default;
  virtual RegionAbstraction abstract_region(const AXTree& subtree) const = 0;
};

// Rule table keyed on the region's dominant roles:
//   all content-free wrappers          -> structural wrapper
//   navigation root or landmark        -> site navigation links
//   search box / search-named input    -> search form
//   other text inputs, form root       -> input form
//   table / grid                       -> data table
//   banner / contentinfo root          -> page header / page footer
//   list of links                      -> link list
//   price-like text                    -> product card
//   heading                            -> "<heading> section"
//   images only                        -> image display
//   several links                      -> link group
//   buttons                            -> action buttons
//   main root                          -> main content
//   anything else                      -> text content
class HeuristicAbstractor : public Abstractor {
 public:
  RegionAbstraction abstract_region(const AXTree& subtree) const override;
};

// Prompts the chat client and falls back to the heuristic (flagged as such)
// when every attempt fails.
class LmAbstractor : public Abstractor {
 public:
  LmAbstractor(ChatClient& client, int max_retries = 2) : client_(client), max_retries_(max_retries) {}
  RegionAbstraction abstract_region(const AXTree& subtree) const override;

 private:
  ChatClient& client_;
  int max_retries_;
  HeuristicAbstractor fallback_;
};

RegionAbstraction abstract_region(const AXTree& subtree, const Abstractor& backend);

// One entry per region in region order; up to `concurrency` regions are
// processed at once. Regions made only of content-free wrappers are labeled
// without consulting the backend.
std::vector<RegionAbstraction> abstract_partition(const RegionPartition& partition,
                                                  const AXTree& tree, const Abstractor& backend,
                                                  std::size_t concurrency = 4);

// Copy of `partition` with purpose/state_summary filled in.
RegionPartition with_abstractions(const RegionPartition& partition,
                                  const std::vector<RegionAbstraction>& abstractions);

}  // namespace axregion
