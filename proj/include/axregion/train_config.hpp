#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace axregion {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decomposition training settings. Text form is `key = value` per line with
// '#' comments; `taus` is a comma-separated list.
struct TrainConfig {
  int epochs = 140;
  double learning_rate = 1e-4;
  double alpha = 0.75;
  double gamma = 2.0;
  double clip_norm = 1.0;
  std::uint64_t seed = 42;
  double validation_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Threshold used for edge-F1 bookkeeping during training.
  double train_tau = 0.5;
  // Candidate thresholds for region-level tuning after training.
  std::vector<double> taus = {0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70};

  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::string& path);
  std::string to_text() const;
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace axregion
