#include <gtest/gtest.h>

#include <cmath>

#include "axregion/model.hpp"

using namespace axregion;

TEST(DecompositionModel, Shapes) {
  const auto m = DecompositionModel::initialize(1);
  EXPECT_EQ(m.role_embedding().rows(), 204);
  EXPECT_EQ(m.role_embedding().cols(), 11);
  EXPECT_EQ(m.region_encoder().input_dim(), 272u);
  EXPECT_EQ(m.region_encoder().output_dim(), 256u);
  EXPECT_EQ(m.edge_classifier().input_dim(), 528u);
  EXPECT_EQ(m.edge_classifier().output_dim(), 1u);
  for (const auto& layer : m.region_encoder().layers()) EXPECT_LE(layer.weight.rows(), 256);
  EXPECT_NO_THROW(m.validate(RoleVocabulary::builtin()));
}

TEST(DecompositionModel, ParameterCountNear536K) {
  const auto m = DecompositionModel::initialize(1);
  const double n = static_cast<double>(m.parameter_count());
  EXPECT_LT(std::abs(n - 536000.0) / 536000.0, 0.01);
  // Hand count: embedding + encoder (272-256-256-256-256) + classifier (528-256-256-256-1).
  const std::size_t expected = 204 * 11 + (272 * 256 + 256) + 3 * (256 * 256 + 256) +
                               (528 * 256 + 256) + 2 * (256 * 256 + 256) + (256 + 1);
  EXPECT_EQ(m.parameter_count(), expected);
}

TEST(DecompositionModel, TauRange) {
  DecompositionModel m;
  EXPECT_THROW(m.set_tau(0.0), std::exception);
  EXPECT_THROW(m.set_tau(1.0), std::exception);
  m.set_tau(0.3);
  EXPECT_EQ(m.tau(), 0.3);
}

TEST(DecompositionModel, ValidateCatchesBadShape) {
  auto m = DecompositionModel::initialize(1);
  m.edge_classifier().layers()[1].weight.resize(3, 3);
  EXPECT_THROW(m.validate(RoleVocabulary::builtin()), ShapeMismatch);
}

TEST(DecompositionModel, SeededInitIsDeterministic) {
  EXPECT_TRUE(DecompositionModel::initialize(5) == DecompositionModel::initialize(5));
  EXPECT_FALSE(DecompositionModel::initialize(5) == DecompositionModel::initialize(6));
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Mlp mlp({4, 5, 3});
  Eigen::MatrixXd w0(5, 4), w1(3, 5);
  w0.setRandom();
  w1.setRandom();
  mlp.layers()[0].weight = w0;
  mlp.layers()[0].bias = Eigen::VectorXd::Constant(5, 0.1);
  mlp.layers()[1].weight = w1;
  mlp.layers()[1].bias = Eigen::VectorXd::Constant(3, -0.2);
  Eigen::MatrixXd x(4, 2);
  x.setRandom();
  // Scalar objective: sum of outputs weighted by a fixed matrix.
  Eigen::MatrixXd g(3, 2);
  g.setRandom();
  auto objective = [&](const Mlp& m) { return (m.forward(x).array() * g.array()).sum(); };

  Mlp::Trace trace;
  mlp.forward(x, trace);
  Mlp grads({4, 5, 3});
  const Eigen::MatrixXd dx = mlp.backward(trace, g, grads);

  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      Mlp plus = mlp, minus = mlp;
      plus.layers()[0].weight(i, j) += h;
      minus.layers()[0].weight(i, j) -= h;
      const double fd = (objective(plus) - objective(minus)) / (2 * h);
      EXPECT_NEAR(grads.layers()[0].weight(i, j), fd, 1e-6);
    }
  }
  for (int i = 0; i < 3; ++i) {
    Mlp plus = mlp, minus = mlp;
    plus.layers()[1].bias(i) += h;
    minus.layers()[1].bias(i) -= h;
    EXPECT_NEAR(grads.layers()[1].bias(i), (objective(plus) - objective(minus)) / (2 * h), 1e-6);
  }
  for (int j = 0; j < 4; ++j) {
    Eigen::MatrixXd xp = x, xm = x;
    xp(j, 1) += h;
    xm(j, 1) -= h;
    const double fd = ((mlp.forward(xp).array() - mlp.forward(xm).array()) * g.array()).sum() / (2 * h);
    EXPECT_NEAR(dx(j, 1), fd, 1e-6);
  }
}
