#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axregion/features.hpp"
#include "axregion/train_config.hpp"

namespace axregion {

inline constexpr std::size_t kHiddenDim = 256;
inline constexpr std::size_t kRepresentationDim = 256;
inline constexpr std::size_t kRegionEncoderInput = kFeatureDim + kRepresentationDim;  // 272
inline constexpr std::size_t kEdgeClassifierInput =
    kFeatureDim + 2 * kRepresentationDim;  // 528
// Hidden layers per MLP; each MLP has one more affine map than this.
inline constexpr std::size_t kHiddenLayers = 3;
inline constexpr std::size_t kReferenceParameterCount = 536'000;

class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fully connected network with ReLU after every layer but the last.
// Inputs and outputs are column-per-sample matrices.
class Mlp {
 public:
  struct Trace {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  // Zero-initialised layers with the given widths (input first).
  explicit Mlp(const std::vector<std::size_t>& widths);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Trace& trace) const;
  // Accumulates parameter gradients into `grads` (same shapes) and returns
  // the gradient with respect to the input.
  Eigen::MatrixXd backward(const Trace& trace, const Eigen::MatrixXd& grad_output,
                           Mlp& grads) const;

  void set_zero();

 private:
  std::vector<DenseLayer> layers_;
};

struct ModelMetadata {
  int version = 1;
  std::uint64_t seed = 0;
  std::string init = "he_uniform(relu layers), normal(0,0.02) embedding";
  std::string feature_scaling = "raw";
  std::string loss_reduction = "mean over edges per tree";
  std::optional<TrainConfig> train_config;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_edge_f1 = 0.0;

  bool operator==(const ModelMetadata&) const = default;
};

// Role embedding table, region encoder, and edge classifier.
class DecompositionModel {
 public:
  // All parameters zero; tau 0.5.
  DecompositionModel();

  static DecompositionModel initialize(std::uint64_t seed);

  const Eigen::MatrixXd& role_embedding() const { return role_embedding_; }
  Eigen::MatrixXd& role_embedding() { return role_embedding_; }
  const Mlp& region_encoder() const { return region_encoder_; }
  Mlp& region_encoder() { return region_encoder_; }
  const Mlp& edge_classifier() const { return edge_classifier_; }
  Mlp& edge_classifier() { return edge_classifier_; }

  double tau() const { return tau_; }
  void set_tau(double tau);

  const ModelMetadata& metadata() const { return metadata_; }
  ModelMetadata& metadata() { return metadata_; }

  std::size_t parameter_count() const;
  // Throws ShapeMismatch when any tensor deviates from the fixed architecture
  // or the embedding table does not match the vocabulary.
  void validate(const RoleVocabulary& vocab) const;

  // Visits every tensor in a fixed order: name, shape, column-major storage.
  void for_each_tensor(
      const std::function<void(std::string_view, std::size_t, std::size_t, std::span<double>)>&
          visit);
  void for_each_tensor(
      const std::function<void(std::string_view, std::size_t, std::size_t,
                               std::span<const double>)>& visit) const;

  void set_zero();

  bool operator==(const DecompositionModel& other) const;

 private:
  Eigen::MatrixXd role_embedding_;
  Mlp region_encoder_;
  Mlp edge_classifier_;
  double tau_ = 0.5;
  ModelMetadata metadata_;
};

inline double sigmoid(double logit) {
  if (logit >= 0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

}  // namespace axregion
