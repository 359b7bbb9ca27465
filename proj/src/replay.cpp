#include "axregion/replay.hpp"

#include <cstdio>
#include <optional>

#include <json.hpp>

namespace axregion {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double share(std::size_t part, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(total);
}

double reduction(std::size_t after, std::size_t before) {
  return before == 0 ? 0.0
                     : 100.0 * (static_cast<double>(before) - static_cast<double>(after)) /
                           static_cast<double>(before);
}

}  // namespace

ReplayResult replay(const std::vector<TraceRecord>& trace, ReplayBackends& backends,
                    const std::string& trace_name) {
  ReplayResult result;
  auto& report = result.report;
  report.trace = trace_name;
  report.token_counter = backends.counter.name();
  const std::size_t calls_before = backends.partitioner.calls();

  std::optional<PageSession> session;
  std::vector<std::string> history;
  std::string task;
  for (const auto& record : trace) {
    if (record.task) task = *record.task;
    AXTree snapshot = preprocess(record.snapshot);
    const std::string baseline_text = serialize_axtree(snapshot);

    ReplayStep row;
    row.step = record.step;
    row.url = record.url;
    bool fresh = !session;
    if (session) fresh = std::holds_alternative<NewPage>(session->step(snapshot, record.url));
    if (fresh) {
      session.emplace(PageSession::open(std::move(snapshot), task, history, backends.partitioner,
                                        backends.abstractor, backends.selector,
                                        backends.abstraction_concurrency));
      ++report.pages;
      row.new_page = true;
      row.selection_tokens = backends.counter(session->selection_prompt());
    }
    const auto& delta = session->delta();
    row.view_all_active = session->view_all_active();
    row.region_count = session->partition().regions.size();
    row.selected_regions = row.view_all_active ? row.region_count : session->selected().size();
    row.added = delta.added_ids().size();
    row.removed = delta.removed.size();
    row.modified = delta.modified_ids().size();

    std::string digest = session->render_digest();
    row.digest_tokens = backends.counter(digest);
    row.baseline_tokens = backends.counter(baseline_text);
    row.reduction_pct = reduction(row.digest_tokens, row.baseline_tokens);
    row.no_reduction = row.digest_tokens >= row.baseline_tokens;
    report.no_reduction_steps += row.no_reduction;

    auto& t = report.totals;
    t.baseline_tokens += row.baseline_tokens;
    (row.view_all_active ? t.view_all_tokens : t.actor_observation_tokens) += row.digest_tokens;
    t.selection_tokens += row.selection_tokens;

    if (is_view_all(record.action)) {
      session->view_all();
      ++report.view_all_count;
    }
    if (!record.action.empty()) history.push_back(record.action);
    report.steps.push_back(row);
    result.digests.push_back(std::move(digest));
  }

  auto& t = report.totals;
  t.pipeline_tokens = t.actor_observation_tokens + t.view_all_tokens + t.selection_tokens;
  t.actor_observation_share = share(t.actor_observation_tokens, t.pipeline_tokens);
  t.view_all_share = share(t.view_all_tokens, t.pipeline_tokens);
  t.selection_share = share(t.selection_tokens, t.pipeline_tokens);
  t.observation_reduction_pct =
      reduction(t.actor_observation_tokens + t.view_all_tokens, t.baseline_tokens);
  t.pipeline_reduction_pct = reduction(t.pipeline_tokens, t.baseline_tokens);
  report.decompose_calls = backends.partitioner.calls() - calls_before;
  return result;
}

std::string ReplayReport::to_text() const {
  std::string out;
  out += "# " + std::string(kReplaySchema) + "\n";
  out += "trace: " + trace + "\n";
  out += "token counter: " + token_counter + "\n";
  out += "steps: " + std::to_string(steps.size()) + "  pages: " + std::to_string(pages) +
         "  decompose calls: " + std::to_string(decompose_calls) +
         "  view_all: " + std::to_string(view_all_count) + "\n\n";
  out += "step  page  view_all  regions  selected  +add  -rem  ~mod  digest  baseline  reduction%  selection\n";
  for (const auto& s : steps) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%4ld  %4s  %8s  %7zu  %8zu  %4zu  %4zu  %4zu  %6zu  %8zu  %10s  %9zu%s\n",
                  s.step, s.new_page ? "new" : "same", s.view_all_active ? "yes" : "no",
                  s.region_count, s.selected_regions, s.added, s.removed, s.modified,
                  s.digest_tokens, s.baseline_tokens, fixed(s.reduction_pct).c_str(),
                  s.selection_tokens, s.no_reduction ? "  [no reduction]" : "");
    out += buf;
  }
  out += "\ntotals\n";
  out += "  baseline tokens:          " + std::to_string(totals.baseline_tokens) + "\n";
  out += "  actor observation tokens: " + std::to_string(totals.actor_observation_tokens) + " (" +
         fixed(100.0 * totals.actor_observation_share, 1) + "%)\n";
  out += "  region selection tokens:  " + std::to_string(totals.selection_tokens) + " (" +
         fixed(100.0 * totals.selection_share, 1) + "%)\n";
  out += "  view_all tokens:          " + std::to_string(totals.view_all_tokens) + " (" +
         fixed(100.0 * totals.view_all_share, 1) + "%)\n";
  out += "  observation reduction:    " + fixed(totals.observation_reduction_pct) + "%\n";
  out += "  reduction incl. selection: " + fixed(totals.pipeline_reduction_pct) + "%\n";
  if (no_reduction_steps)
    out += "  steps without reduction:  " + std::to_string(no_reduction_steps) + "\n";
  return out;
}

std::string ReplayReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kReplaySchema;
  j["trace"] = trace;
  j["token_counter"] = token_counter;
  j["pages"] = pages;
  j["decompose_calls"] = decompose_calls;
  j["view_all_count"] = view_all_count;
  j["no_reduction_steps"] = no_reduction_steps;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    nlohmann::ordered_json r;
    r["step"] = s.step;
    r["url"] = s.url;
    r["new_page"] = s.new_page;
    r["view_all_active"] = s.view_all_active;
    r["region_count"] = s.region_count;
    r["selected_regions"] = s.selected_regions;
    r["added"] = s.added;
    r["removed"] = s.removed;
    r["modified"] = s.modified;
    r["digest_tokens"] = s.digest_tokens;
    r["baseline_tokens"] = s.baseline_tokens;
    r["selection_tokens"] = s.selection_tokens;
    r["reduction_pct"] = s.reduction_pct;
    r["no_reduction"] = s.no_reduction;
    rows.push_back(std::move(r));
  }
  j["steps"] = std::move(rows);
  nlohmann::ordered_json t;
  t["baseline_tokens"] = totals.baseline_tokens;
  t["actor_observation_tokens"] = totals.actor_observation_tokens;
  t["view_all_tokens"] = totals.view_all_tokens;
  t["selection_tokens"] = totals.selection_tokens;
  t["pipeline_tokens"] = totals.pipeline_tokens;
  t["actor_observation_share"] = totals.actor_observation_share;
  t["view_all_share"] = totals.view_all_share;
  t["selection_share"] = totals.selection_share;
  t["observation_reduction_pct"] = totals.observation_reduction_pct;
  t["pipeline_reduction_pct"] = totals.pipeline_reduction_pct;
  j["totals"] = std::move(t);
  return j.dump(2) + "\n";
}

}  // namespace axregion
