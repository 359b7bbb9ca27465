#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axregion/axtree.hpp"

namespace axregion {

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// One JSON object per line:
//   {"step": 0, "url": "...", "action": "click('12')", "axtree": "<text>",
//    "task": "..."}
// `task` is optional and carries forward; `action` is the action taken after
// observing the snapshot (may be empty). Blank lines are skipped.
struct TraceRecord {
  std::size_t line = 0;
  long step = 0;
  std::string url;
  std::string action;
  std::optional<std::string> task;
  AXTree snapshot;
};

std::vector<TraceRecord> parse_trace(std::string_view text);
std::vector<TraceRecord> load_trace(const std::string& path);
std::string format_trace_record(long step, const std::string& url, const std::string& action,
                                const AXTree& snapshot,
                                const std::optional<std::string>& task = std::nullopt);

bool is_view_all(const std::string& action);
// First quoted argument of an action call, e.g. click('a12') -> a12.
std::optional<std::string> action_target(const std::string& action);

}  // namespace axregion
