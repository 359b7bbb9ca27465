#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "axregion/abstraction.hpp"
#include "axregion/metrics.hpp"
#include "axregion/pagedigest.hpp"
#include "axregion/trace.hpp"

namespace axregion {

inline constexpr const char* kReplaySchema = "axregion.replay_report/1";

struct ReplayStep {
  long step = 0;
  std::string url;
  bool new_page = false;
  bool view_all_active = false;  // at render time
  std::size_t region_count = 0;
  std::size_t selected_regions = 0;
  std::size_t added = 0;
  std::size_t removed = 0;
  std::size_t modified = 0;
  std::size_t digest_tokens = 0;
  std::size_t baseline_tokens = 0;
  std::size_t selection_tokens = 0;  // selection prompt input, page entries only
  double reduction_pct = 0.0;
  bool no_reduction = false;  // digest >= baseline
};

struct ReplayTotals {
  std::size_t baseline_tokens = 0;
  std::size_t actor_observation_tokens = 0;  // digests rendered without view_all
  std::size_t view_all_tokens = 0;           // digests rendered under view_all
  std::size_t selection_tokens = 0;
  std::size_t pipeline_tokens = 0;           // sum of the three above
  double actor_observation_share = 0.0;
  double view_all_share = 0.0;
  double selection_share = 0.0;
  double observation_reduction_pct = 0.0;  // digests vs baseline
  double pipeline_reduction_pct = 0.0;     // digests + selection vs baseline
};

struct ReplayReport {
  std::string trace;
  std::string token_counter;
  std::vector<ReplayStep> steps;
  std::size_t pages = 0;
  std::size_t decompose_calls = 0;
  std::size_t view_all_count = 0;
  std::size_t no_reduction_steps = 0;
  ReplayTotals totals;

  std::string to_text() const;
  std::string to_json() const;
};

struct ReplayResult {
  ReplayReport report;
  std::vector<std::string> digests;  // one per step
};

struct ReplayBackends {
  Partitioner& partitioner;
  const Abstractor& abstractor;
  const RegionSelector& selector;
  TokenCounter counter = {};
  std::size_t abstraction_concurrency = 4;
};

// Snapshots are preprocessed before use. A new session opens on the first
// record and whenever the url changes; a view_all() action applies from the
// next rendered step of the same page.
ReplayResult replay(const std::vector<TraceRecord>& trace, ReplayBackends& backends,
                    const std::string& trace_name = "trace");

}  // namespace axregion
