#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace metasurf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Sigmoid = 2 };
enum class Mode { Train, Infer };

double relu(double z) noexcept;
double sigmoid(double z) noexcept;

struct DenseLayer {
  Matrix weights;  // [out x in]
  Vector biases;   // [out]
  Activation activation = Activation::Identity;

  Eigen::Index in_width() const { return weights.cols(); }
  Eigen::Index out_width() const { return weights.rows(); }
};

struct DropoutLayer {
  double rate = 0.0;  // in [0, 1)
};

using Layer = std::variant<DenseLayer, DropoutLayer>;

/// y = act(W x + b). Throws DomainError on width mismatch.
Vector dense_forward(const DenseLayer& layer, const Vector& x);

struct DropoutResult {
  Vector values;
  Vector mask;  // 0 for dropped units, 1/(1-p) for survivors
};

/// Inverted dropout. Infer mode is the identity with an all-ones mask.
DropoutResult dropout_forward(const DropoutLayer& layer, const Vector& x, Mode mode, Rng& rng);

/// Mean of squared residuals over all entries.
double mse(std::span<const double> pred, std::span<const double> target);
double mse(const Matrix& pred, const Matrix& target);

struct DenseGradient {
  Matrix weights;
  Vector biases;
};

// One entry per dense layer, in stack order.
using Gradients = std::vector<DenseGradient>;

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Matrix m_weights, v_weights;
  Vector m_biases, v_biases;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<AdamMoments> moments;  // one per dense layer
};

/// One Adam update on a flat parameter block. `step` is the already
/// incremented step counter used for bias correction.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamHyper& hyper, std::uint64_t step);

struct NetworkSpec {
  int input_width = 24;
  std::vector<int> hidden_widths{64, 128, 256, 256, 128};
  int output_width = 48;
  double dropout_rate = 0.2;
};

// Ordered stack of dense and dropout layers.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  /// He-normal init for relu layers, Xavier-normal for the rest; zero biases.
  /// Dense(relu) + Dropout per hidden width, then Dense(sigmoid). A zero
  /// dropout rate still emits the dropout layers.
  static Network build(const NetworkSpec& spec, std::uint64_t seed);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t dense_count() const;
  Eigen::Index input_width() const;
  Eigen::Index output_width() const;
  std::size_t parameter_count() const;

  /// Inference on a batch (one sample per column). Pure.
  Matrix infer(const Matrix& inputs) const;
  Vector infer(const Vector& input) const;

  /// Train-mode forward pass; records activations and dropout masks for backward().
  Matrix forward_train(const Matrix& inputs, Rng& rng);

  /// Gradients of mse(output, targets) w.r.t. every dense parameter, using
  /// the state recorded by the last forward_train(). Throws UsageError if
  /// there is none.
  Gradients backward(const Matrix& targets) const;

  void clear_trace() { trace_.reset(); }

  /// Dropout masks of the last forward_train(), one per dropout layer.
  std::vector<Matrix> recorded_masks() const;

 private:
  struct Trace {
    std::vector<Matrix> inputs;   // input to each layer
    std::vector<Matrix> outputs;  // output of each layer
    std::vector<Matrix> masks;    // dropout masks (empty for dense layers)
  };

  std::vector<Layer> layers_;
  std::optional<Trace> trace_;
};

AdamState make_adam_state(const Network& net, const AdamHyper& hyper = {});

/// Applies one Adam update to every dense layer. Throws DomainError on shape mismatch.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

}  // namespace metasurf
