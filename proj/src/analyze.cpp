#include "axregion/analyze.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "axregion/metrics.hpp"
#include "axregion/rng.hpp"

namespace axregion {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void render_histogram(const std::string& title, const Histogram& h, std::string& out) {
  out += title + " (n=" + std::to_string(h.total) + ")\n";
  for (std::size_t i = 0; i < h.labels.size(); ++i) {
    const double pct = h.total ? 100.0 * static_cast<double>(h.counts[i]) / static_cast<double>(h.total) : 0.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-12s %6zu  %6s%%  ", h.labels[i].c_str(), h.counts[i],
                  fixed(pct, 1).c_str());
    out += buf;
    out += std::string(static_cast<std::size_t>(pct / 2.5 + 0.5), '#');
    out += '\n';
  }
}

nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["total"] = h.total;
  auto bins = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < h.labels.size(); ++i)
    bins.push_back({{"bin", h.labels[i]}, {"count", h.counts[i]}});
  j["bins"] = std::move(bins);
  return j;
}

}  // namespace

Histogram lca_histogram(const std::vector<double>& ratios) {
  Histogram h;
  for (int i = 0; i < 10; ++i)
    h.labels.push_back("[" + fixed(i / 10.0, 1) + "," + fixed((i + 1) / 10.0, 1) + (i == 9 ? "]" : ")"));
  h.counts.assign(10, 0);
  for (double r : ratios) {
    auto bin = static_cast<std::size_t>(std::clamp(r, 0.0, 1.0) * 10.0);
    // Guard against 0.3 * 10 landing just below 3.
    if (bin < 10 && r >= static_cast<double>(bin + 1) / 10.0) ++bin;
    h.counts[std::min<std::size_t>(bin, 9)]++;
  }
  h.total = ratios.size();
  return h;
}

Histogram change_histogram(const std::vector<double>& ratios) {
  Histogram h;
  h.labels = {"0", "(0,0.05)", "[0.05,0.1)", "[0.1,0.3)", "[0.3,0.5)", "[0.5,0.9)", ">=0.9"};
  h.counts.assign(h.labels.size(), 0);
  for (double r : ratios) {
    std::size_t b;
    if (r == 0.0) b = 0;
    else if (r < 0.05) b = 1;
    else if (r < 0.1) b = 2;
    else if (r < 0.3) b = 3;
    else if (r < 0.5) b = 4;
    else if (r < 0.9) b = 5;
    else b = 6;
    ++h.counts[b];
  }
  h.total = ratios.size();
  return h;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AnalyzeReport analyze_trace(const std::vector<TraceRecord>& trace, const AnalyzeOptions& options) {
  if (trace.empty()) throw AnalyzeError("trace has no snapshots");
  AnalyzeReport report;
  report.snapshots = trace.size();
  Rng rng(options.seed);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const auto& a = trace[i];
    const auto& b = trace[i + 1];
    if (a.url != b.url) continue;
    report.change_ratios.push_back(change_ratio(a.snapshot, b.snapshot));

    const auto ta = action_target(a.action);
    const auto tb = action_target(b.action);
    if (!ta || !tb) continue;
    for (const AXTree* snap : {&b.snapshot, &a.snapshot}) {
      const TreeIndex index(*snap);
      const auto ia = index.find(*ta);
      const auto ib = index.find(*tb);
      if (!ia || !ib) continue;
      ++report.action_pairs;
      report.lca_ratios.push_back(lca_depth_ratio(index, *ia, *ib));
      for (std::size_t k = 0; k < options.random_pairs_per_pair && index.size() >= 2; ++k) {
        const auto x = rng.below(index.size());
        auto y = rng.below(index.size() - 1);
        if (y >= x) ++y;
        report.random_lca_ratios.push_back(lca_depth_ratio(index, x, y));
      }
      break;
    }
  }
  report.lca = lca_histogram(report.lca_ratios);
  report.random_lca = lca_histogram(report.random_lca_ratios);
  report.change = change_histogram(report.change_ratios);
  return report;
}

std::string AnalyzeReport::to_text() const {
  std::string out = "# " + std::string(kAnalyzeSchema) + "\n";
  out += "snapshots: " + std::to_string(snapshots) + "  action pairs: " + std::to_string(action_pairs) +
         "  snapshot pairs: " + std::to_string(change_ratios.size()) + "\n";
  out += "median LCA depth ratio: " + fixed(median(lca_ratios), 3) +
         "  random node-pair baseline (approximation): " + fixed(median(random_lca_ratios), 3) + "\n\n";
  render_histogram("LCA depth ratio, consecutive actions", lca, out);
  out += '\n';
  render_histogram("LCA depth ratio, random node pairs", random_lca, out);
  out += '\n';
  render_histogram("change ratio, consecutive snapshots", change, out);
  return out;
}

std::string AnalyzeReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kAnalyzeSchema;
  j["snapshots"] = snapshots;
  j["action_pairs"] = action_pairs;
  j["median_lca_ratio"] = median(lca_ratios);
  j["median_random_lca_ratio"] = median(random_lca_ratios);
  j["lca_ratios"] = lca_ratios;
  j["change_ratios"] = change_ratios;
  j["lca_histogram"] = histogram_json(lca);
  j["random_lca_histogram"] = histogram_json(random_lca);
  j["change_histogram"] = histogram_json(change);
  return j.dump(2) + "\n";
}

}  // namespace axregion
