#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "axregion/trace.hpp"

namespace axregion {

inline constexpr const char* kAnalyzeSchema = "axregion.analyze_report/1";

class AnalyzeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Histogram {
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

// Ten equal bins over [0, 1]; 1.0 falls in the last bin.
Histogram lca_histogram(const std::vector<double>& ratios);
// Buckets: 0, (0,0.05), [0.05,0.1), [0.1,0.3), [0.3,0.5), [0.5,0.9), >=0.9.
Histogram change_histogram(const std::vector<double>& ratios);

double median(std::vector<double> values);

struct AnalyzeOptions {
  std::uint64_t seed = 42;
  // Uniform random node pairs drawn per measured action pair.
  std::size_t random_pairs_per_pair = 10;
};

struct AnalyzeReport {
  std::size_t snapshots = 0;
  std::size_t action_pairs = 0;
  std::vector<double> lca_ratios;
  std::vector<double> random_lca_ratios;
  std::vector<double> change_ratios;
  Histogram lca;
  Histogram random_lca;
  Histogram change;

  std::string to_text() const;
  std::string to_json() const;
};

// LCA depth ratios of consecutive same-url action targets (measured on the
// later snapshot when it holds both targets, else the earlier one), a
// uniform random node-pair baseline, and change ratios of consecutive
// same-url snapshots. Throws AnalyzeError on an empty trace.
AnalyzeReport analyze_trace(const std::vector<TraceRecord>& trace, const AnalyzeOptions& options = {});

}  // namespace axregion
