#include "axregion/model.hpp"

#include <cmath>

#include "axregion/rng.hpp"

namespace axregion {

namespace {

std::vector<std::size_t> mlp_widths(std::size_t input, std::size_t output) {
  std::vector<std::size_t> widths{input};
  for (std::size_t i = 0; i < kHiddenLayers; ++i) widths.push_back(kHiddenDim);
  widths.push_back(output);
  return widths;
}

void he_uniform(Mlp& mlp, Rng& rng) {
  for (auto& layer : mlp.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
    // Column-major fill order keeps the draw sequence tied to storage order.
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        layer.weight(r, c) = rng.uniform(-limit, limit);
    layer.bias.setZero();
  }
}

template <typename Span, typename Model, typename Visit>
void visit_tensors(Model& model, Visit&& visit) {
  auto emit = [&](std::string name, auto& m) {
    visit(name, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
          Span(m.data(), static_cast<std::size_t>(m.size())));
  };
  emit("role_embedding", model.role_embedding());
  auto mlp = [&](const std::string& prefix, auto& net) {
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      emit(prefix + "." + std::to_string(i) + ".weight", net.layers()[i].weight);
      emit(prefix + "." + std::to_string(i) + ".bias", net.layers()[i].bias);
    }
  };
  mlp("region_encoder", model.region_encoder());
  mlp("edge_classifier", model.edge_classifier());
}

}  // namespace

Mlp::Mlp(const std::vector<std::size_t>& widths) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(widths[i + 1]),
                                         static_cast<Eigen::Index>(widths[i]));
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(widths[i + 1]));
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Trace& trace) const {
  trace.inputs.clear();
  trace.pre.clear();
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    trace.inputs.push_back(x);
    Eigen::MatrixXd z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    trace.pre.push_back(z);
    x = (i + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return x;
}

Eigen::MatrixXd Mlp::backward(const Trace& trace, const Eigen::MatrixXd& grad_output,
                              Mlp& grads) const {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size())
      delta = delta.cwiseProduct((trace.pre[i].array() > 0.0).cast<double>().matrix());
    grads.layers_[i].weight.noalias() += delta * trace.inputs[i].transpose();
    grads.layers_[i].bias += delta.rowwise().sum();
    delta = layers_[i].weight.transpose() * delta;
  }
  return delta;
}

void Mlp::set_zero() {
  for (auto& l : layers_) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

DecompositionModel::DecompositionModel()
    : role_embedding_(Eigen::MatrixXd::Zero(kVocabularySize, kRoleEmbeddingDim)),
      region_encoder_(mlp_widths(kRegionEncoderInput, kRepresentationDim)),
      edge_classifier_(mlp_widths(kEdgeClassifierInput, 1)) {}

DecompositionModel DecompositionModel::initialize(std::uint64_t seed) {
  DecompositionModel model;
  Rng rng(seed);
  for (Eigen::Index c = 0; c < model.role_embedding_.cols(); ++c)
    for (Eigen::Index r = 0; r < model.role_embedding_.rows(); ++r)
      model.role_embedding_(r, c) = rng.normal(0.0, 0.02);
  he_uniform(model.region_encoder_, rng);
  he_uniform(model.edge_classifier_, rng);
  model.metadata_.seed = seed;
  return model;
}

void DecompositionModel::set_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ShapeMismatch("tau must lie in (0,1)");
  tau_ = tau;
}

std::size_t DecompositionModel::parameter_count() const {
  return static_cast<std::size_t>(role_embedding_.size()) + region_encoder_.parameter_count() +
         edge_classifier_.parameter_count();
}

void DecompositionModel::validate(const RoleVocabulary& vocab) const {
  if (static_cast<std::size_t>(role_embedding_.rows()) != vocab.size() ||
      static_cast<std::size_t>(role_embedding_.cols()) != kRoleEmbeddingDim)
    throw ShapeMismatch("role embedding is " + std::to_string(role_embedding_.rows()) + "x" +
                        std::to_string(role_embedding_.cols()) + ", vocabulary has " +
                        std::to_string(vocab.size()) + " roles");
  auto check = [](const Mlp& mlp, std::size_t in, std::size_t out, const char* what) {
    const auto expected = mlp_widths(in, out);
    if (mlp.layers().size() + 1 != expected.size())
      throw ShapeMismatch(std::string(what) + ": wrong layer count");
    for (std::size_t i = 0; i < mlp.layers().size(); ++i) {
      const auto& l = mlp.layers()[i];
      if (static_cast<std::size_t>(l.weight.cols()) != expected[i] ||
          static_cast<std::size_t>(l.weight.rows()) != expected[i + 1] ||
          static_cast<std::size_t>(l.bias.size()) != expected[i + 1])
        throw ShapeMismatch(std::string(what) + ": layer " + std::to_string(i) +
                            " has the wrong shape");
    }
  };
  check(region_encoder_, kRegionEncoderInput, kRepresentationDim, "region encoder");
  check(edge_classifier_, kEdgeClassifierInput, 1, "edge classifier");
  if (!(tau_ > 0.0 && tau_ < 1.0)) throw ShapeMismatch("tau must lie in (0,1)");
}

void DecompositionModel::for_each_tensor(
    const std::function<void(std::string_view, std::size_t, std::size_t, std::span<double>)>&
        visit) {
  visit_tensors<std::span<double>>(*this, visit);
}

void DecompositionModel::for_each_tensor(
    const std::function<void(std::string_view, std::size_t, std::size_t,
                             std::span<const double>)>& visit) const {
  visit_tensors<std::span<const double>>(*this, visit);
}

void DecompositionModel::set_zero() {
  role_embedding_.setZero();
  region_encoder_.set_zero();
  edge_classifier_.set_zero();
}

bool DecompositionModel::operator==(const DecompositionModel& other) const {
  auto same_mlp = [](const Mlp& a, const Mlp& b) {
    if (a.layers().size() != b.layers().size()) return false;
    for (std::size_t i = 0; i < a.layers().size(); ++i) {
      if (a.layers()[i].weight != b.layers()[i].weight) return false;
      if (a.layers()[i].bias != b.layers()[i].bias) return false;
    }
    return true;
  };
  return role_embedding_ == other.role_embedding_ && same_mlp(region_encoder_, other.region_encoder_) &&
         same_mlp(edge_classifier_, other.edge_classifier_) && tau_ == other.tau_ &&
         metadata_ == other.metadata_;
}

}  // namespace axregion
