#include <gtest/gtest.h>

#include <cmath>

#include "grad_oracle.hpp"
#include "metasurf/errors.hpp"
#include "metasurf/neural.hpp"

using namespace metasurf;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

}  // namespace

TEST(Activations, Relu) {
  EXPECT_EQ(relu(-1.0), 0.0);
  EXPECT_EQ(relu(0.0), 0.0);
  EXPECT_EQ(relu(2.5), 2.5);
}

TEST(Activations, Sigmoid) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  for (double z : {-30.0, -3.2, -0.1, 0.7, 4.0, 25.0}) EXPECT_NEAR(sigmoid(z) + sigmoid(-z), 1.0, 1e-15);
  const double tiny = sigmoid(-50.0);
  EXPECT_GE(tiny, 0.0);
  EXPECT_LE(tiny, 1e-20);
  EXPECT_TRUE(std::isfinite(sigmoid(-700.0)));
  EXPECT_TRUE(std::isfinite(sigmoid(700.0)));
  EXPECT_EQ(sigmoid(700.0), 1.0);
}

TEST(DenseForward, Examples) {
  DenseLayer id{Matrix::Identity(3, 3), Vector::Zero(3), Activation::Identity};
  Vector x(3);
  x << 0.3, -2.0, 5.0;
  EXPECT_EQ(dense_forward(id, x), x);

  DenseLayer zero{Matrix::Zero(3, 3), Vector(3), Activation::Relu};
  zero.biases << -1.0, 0.5, 2.0;
  const Vector y = dense_forward(zero, x);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_EQ(y(1), 0.5);
  EXPECT_EQ(y(2), 2.0);

  DenseLayer two{Matrix(2, 2), Vector(2), Activation::Identity};
  two.weights << 1, 2, 3, 4;
  two.biases << 1, -1;
  const Vector out = dense_forward(two, Vector::Ones(2));
  EXPECT_EQ(out(0), 4.0);
  EXPECT_EQ(out(1), 6.0);

  EXPECT_THROW(dense_forward(two, Vector::Ones(3)), DomainError);
}

TEST(Dropout, IdentityCases) {
  Rng rng(1);
  const Vector x = Vector::LinSpaced(10, -1.0, 1.0);
  auto r = dropout_forward({0.0}, x, Mode::Train, rng);
  EXPECT_EQ(r.values, x);
  r = dropout_forward({0.7}, x, Mode::Infer, rng);
  EXPECT_EQ(r.values, x);
  EXPECT_EQ(r.mask, Vector::Ones(10));
  EXPECT_THROW(dropout_forward({1.0}, x, Mode::Train, rng), DomainError);
}

TEST(Dropout, HalfRateStatistics) {
  Rng rng(7);
  const Vector x = Vector::Constant(100000, 1.5);
  const auto r = dropout_forward({0.5}, x, Mode::Train, rng);
  int zeros = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (r.values(i) == 0.0) {
      ++zeros;
    } else {
      ASSERT_EQ(r.values(i), 3.0);
    }
  }
  EXPECT_NEAR(zeros / 100000.0, 0.5, 0.01);
}

TEST(Dropout, ExpectationMatchesInference) {
  // Mean over trials of the train-mode pre-activation of the next dense layer.
  Rng rng(8);
  const Vector x = random_matrix(32, 1, rng, 0.0, 1.0);
  const Vector w = random_matrix(32, 1, rng);
  const double p = 0.2;
  const double infer = w.dot(x);
  const int trials = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double v = w.dot(dropout_forward({p}, x, Mode::Train, rng).values);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / trials;
  const double var = sum_sq / trials - mean * mean;
  EXPECT_LE(std::abs(mean - infer), 3.0 * std::sqrt(var / trials));
}

TEST(Mse, Examples) {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 0.0};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_EQ(mse(a, b), 0.5);
  std::vector<double> half(48, 0.5), bits(48);
  for (int i = 0; i < 48; ++i) bits[i] = i % 3 == 0;
  EXPECT_EQ(mse(half, bits), 0.25);
  EXPECT_THROW(mse(a, std::vector<double>{1.0}), DomainError);
}

TEST(Backward, RequiresRecordedForward) {
  auto net = Network::build({4, {3}, 2, 0.0}, 1);
  EXPECT_THROW(net.backward(Matrix::Zero(2, 1)), UsageError);
}

TEST(Backward, ZeroResidualGivesZeroGradient) {
  auto net = Network::build({4, {5, 3}, 2, 0.0}, 2);
  Rng rng(3);
  const Matrix x = random_matrix(4, 6, rng);
  const Matrix y = net.forward_train(x, rng);
  for (const auto& g : net.backward(y)) {
    EXPECT_EQ(g.weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.biases.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Backward, SingleIdentityLayerHandDerivation) {
  DenseLayer d{Matrix(2, 2), Vector(2), Activation::Identity};
  d.weights << 0.5, -1.0, 2.0, 0.25;
  d.biases << 0.1, -0.2;
  Network net({d});
  Matrix x(2, 1);
  x << 1.0, 2.0;
  Matrix t(2, 1);
  t << 0.0, 1.0;
  Rng rng(0);
  const Matrix y = net.forward_train(x, rng);
  // y = W x + b = (-1.4, 2.3); dL/dW = (2/m) (y - t) x^T with m = 2.
  ASSERT_NEAR(y(0), -1.4, 1e-12);
  ASSERT_NEAR(y(1), 2.3, 1e-12);
  const auto g = net.backward(t);
  EXPECT_NEAR(g[0].weights(0, 0), -1.4, 1e-12);
  EXPECT_NEAR(g[0].weights(0, 1), -2.8, 1e-12);
  EXPECT_NEAR(g[0].weights(1, 0), 1.3, 1e-12);
  EXPECT_NEAR(g[0].weights(1, 1), 2.6, 1e-12);
  EXPECT_NEAR(g[0].biases(0), -1.4, 1e-12);
  EXPECT_NEAR(g[0].biases(1), 1.3, 1e-12);
}

TEST(Backward, MatchesFiniteDifferencesWithDropout) {
  auto layers = Network::build({24, {8}, 48, 0.3}, 17).layers();
  Rng rng(18);
  metasurf::testing::randomize_biases(layers, rng);
  Network net(layers);
  const Matrix x = random_matrix(24, 3, rng, 0.0, 1.0);
  const Matrix t = random_matrix(48, 3, rng, 0.0, 1.0).array().round().matrix();
  net.forward_train(x, rng);
  const auto grads = net.backward(t);
  const auto res = metasurf::testing::check_gradients(net.layers(), grads, x, t, net.recorded_masks());
  EXPECT_EQ(res.failures, 0u) << "max rel error " << res.max_rel_error;
  EXPECT_GT(res.checked, 24u * 8u);
}

TEST(Backward, MatchesFiniteDifferencesAllActivations) {
  Rng rng(21);
  std::vector<Layer> layers;
  layers.emplace_back(DenseLayer{random_matrix(5, 4, rng), random_matrix(5, 1, rng), Activation::Relu});
  layers.emplace_back(DropoutLayer{0.25});
  layers.emplace_back(DenseLayer{random_matrix(6, 5, rng), random_matrix(6, 1, rng), Activation::Identity});
  layers.emplace_back(DenseLayer{random_matrix(3, 6, rng), random_matrix(3, 1, rng), Activation::Sigmoid});
  Network net(layers);
  const Matrix x = random_matrix(4, 5, rng);
  const Matrix t = random_matrix(3, 5, rng, 0.0, 1.0);
  net.forward_train(x, rng);
  const auto res = metasurf::testing::check_gradients(net.layers(), net.backward(t), x, t, net.recorded_masks());
  EXPECT_EQ(res.failures, 0u) << "max rel error " << res.max_rel_error;
}

TEST(Network, DefaultTopology) {
  const auto net = Network::build(NetworkSpec{}, 1);
  ASSERT_EQ(net.layers().size(), 11u);
  EXPECT_EQ(net.input_width(), 24);
  EXPECT_EQ(net.output_width(), 48);
  for (std::size_t i = 0; i < 11; ++i) {
    EXPECT_EQ(std::holds_alternative<DenseLayer>(net.layers()[i]), i % 2 == 0) << "layer " << i;
  }
  EXPECT_EQ(std::get<DenseLayer>(net.layers().back()).activation, Activation::Sigmoid);
  EXPECT_EQ(std::get<DropoutLayer>(net.layers()[1]).rate, 0.2);
}

TEST(Network, InferenceDeterministicAndBounded) {
  const auto net = Network::build(NetworkSpec{}, 3);
  Rng rng(4);
  const Matrix x = random_matrix(24, 20, rng, 0.0, 1.0);
  const Matrix a = net.infer(x);
  EXPECT_EQ(a, net.infer(x));
  EXPECT_GT(a.minCoeff(), 0.0);
  EXPECT_LT(a.maxCoeff(), 1.0);
  EXPECT_EQ(Network::build(NetworkSpec{}, 3).infer(x), a);
}

TEST(Network, RejectsInconsistentWidths) {
  std::vector<Layer> layers{DenseLayer{Matrix::Zero(3, 2), Vector::Zero(3), Activation::Relu},
                            DenseLayer{Matrix::Zero(2, 4), Vector::Zero(2), Activation::Sigmoid}};
  EXPECT_THROW(Network{layers}, DomainError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto net = Network::build({4, {3}, 2, 0.0}, 5);
  const auto before = net.infer(Matrix(Matrix::Ones(4, 1)));
  auto state = make_adam_state(net);
  Gradients zero;
  for (const auto& l : net.layers())
    if (const auto* d = std::get_if<DenseLayer>(&l))
      zero.push_back({Matrix::Zero(d->out_width(), d->in_width()), Vector::Zero(d->out_width())});
  adam_step(net, zero, state);
  EXPECT_EQ(net.infer(Matrix(Matrix::Ones(4, 1))), before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> theta{1.0, -2.0, 0.5}, g{0.3, -4.0, 1e-3}, m(3, 0.0), v(3, 0.0);
  AdamHyper h;
  adam_update(theta, g, m, v, h, 1);
  EXPECT_NEAR(theta[0], 1.0 - h.learning_rate, 1e-10);
  EXPECT_NEAR(theta[1], -2.0 + h.learning_rate, 1e-10);
  EXPECT_NEAR(theta[2], 0.5 - h.learning_rate, 1e-7);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<double> theta{1.0}, m{0.0}, v{0.0};
  AdamHyper h;
  h.learning_rate = 0.01;
  for (std::uint64_t t = 1; t <= 200; ++t) {
    const std::vector<double> g{2.0 * theta[0]};
    adam_update(theta, g, m, v, h, t);
  }
  EXPECT_LT(std::abs(theta[0]), 0.05);
  EXPECT_GE(v[0], 0.0);
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> theta(3), g(2), m(3), v(3);
  EXPECT_THROW(adam_update(theta, g, m, v, {}, 1), DomainError);
  auto net = Network::build({4, {3}, 2, 0.0}, 5);
  auto state = make_adam_state(net);
  EXPECT_THROW(adam_step(net, Gradients{}, state), DomainError);
}
