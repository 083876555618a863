#include "metasurf/neural.hpp"

#include <cmath>
#include <string>

#include "metasurf/errors.hpp"

namespace metasurf {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void apply_activation(Matrix& z, Activation act) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      z = z.unaryExpr([](double v) { return relu(v); });
      break;
    case Activation::Sigmoid:
      z = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
  }
}

// Multiplies dy in place by act'(z), expressed through the activation output y.
void activation_backward(Matrix& dy, const Matrix& y, Activation act) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      dy = dy.cwiseProduct(y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::Sigmoid:
      dy = dy.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
      break;
  }
}

Matrix dense_batch(const DenseLayer& layer, const Matrix& x) {
  if (x.rows() != layer.in_width()) {
    throw DomainError("dense layer expects width " + std::to_string(layer.in_width()) +
                      ", got " + std::to_string(x.rows()));
  }
  Matrix z = layer.weights * x;
  z.colwise() += layer.biases;
  apply_activation(z, layer.activation);
  return z;
}

Matrix dropout_mask(double rate, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      mask(r, c) = uniform01(rng) < rate ? 0.0 : keep_scale;
    }
  }
  return mask;
}

}  // namespace

double relu(double z) noexcept { return z < 0.0 ? 0.0 : z; }

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector dense_forward(const DenseLayer& layer, const Vector& x) {
  return dense_batch(layer, x);
}

DropoutResult dropout_forward(const DropoutLayer& layer, const Vector& x, Mode mode, Rng& rng) {
  if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
    throw DomainError("dropout rate must lie in [0, 1)");
  }
  if (mode == Mode::Infer || layer.rate == 0.0) {
    return {x, Vector::Ones(x.size())};
  }
  Vector mask = dropout_mask(layer.rate, x.size(), 1, rng);
  return {x.cwiseProduct(mask), mask};
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw DomainError("mse: length mismatch");
  if (pred.empty()) throw DomainError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DomainError("mse: shape mismatch");
  }
  if (pred.size() == 0) throw DomainError("mse: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamHyper& hyper, std::uint64_t step) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw DomainError("adam: shape mismatch");
  }
  if (step == 0) throw UsageError("adam: step counter must be incremented before the update");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  Eigen::Index width = -1;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (d->biases.size() != d->out_width()) throw DomainError("bias width mismatch");
      if (width >= 0 && d->in_width() != width) {
        throw DomainError("layer input width " + std::to_string(d->in_width()) +
                          " does not match previous width " + std::to_string(width));
      }
      width = d->out_width();
    } else if (const auto* p = std::get_if<DropoutLayer>(&layer)) {
      if (!(p->rate >= 0.0 && p->rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
    }
  }
}

Network Network::build(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.input_width <= 0 || spec.output_width <= 0) throw DomainError("widths must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto make_dense = [&](int in, int out, Activation act) {
    DenseLayer d;
    d.activation = act;
    const double stddev = act == Activation::Relu ? std::sqrt(2.0 / in) : std::sqrt(2.0 / (in + out));
    d.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) d.weights(r, c) = stddev * normal(rng);
    }
    d.biases = Vector::Zero(out);
    return d;
  };

  std::vector<Layer> layers;
  int width = spec.input_width;
  for (int hidden : spec.hidden_widths) {
    if (hidden <= 0) throw DomainError("hidden widths must be positive");
    layers.emplace_back(make_dense(width, hidden, Activation::Relu));
    layers.emplace_back(DropoutLayer{spec.dropout_rate});
    width = hidden;
  }
  layers.emplace_back(make_dense(width, spec.output_width, Activation::Sigmoid));
  return Network(std::move(layers));
}

std::size_t Network::dense_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += std::holds_alternative<DenseLayer>(layer);
  return n;
}

Eigen::Index Network::input_width() const {
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->in_width();
  }
  return 0;
}

Eigen::Index Network::output_width() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (const auto* d = std::get_if<DenseLayer>(&*it)) return d->out_width();
  }
  return 0;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      n += static_cast<std::size_t>(d->weights.size() + d->biases.size());
    }
  }
  return n;
}

Matrix Network::infer(const Matrix& inputs) const {
  Matrix x = inputs;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) x = dense_batch(*d, x);
  }
  return x;
}

Vector Network::infer(const Vector& input) const { return infer(Matrix(input)); }

Matrix Network::forward_train(const Matrix& inputs, Rng& rng) {
  Trace trace;
  trace.inputs.reserve(layers_.size());
  trace.outputs.reserve(layers_.size());
  trace.masks.reserve(layers_.size());
  Matrix x = inputs;
  for (const auto& layer : layers_) {
    trace.inputs.push_back(x);
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      x = dense_batch(*d, x);
      trace.masks.emplace_back();
    } else {
      const auto& p = std::get<DropoutLayer>(layer);
      Matrix mask = p.rate == 0.0 ? Matrix::Ones(x.rows(), x.cols())
                                  : dropout_mask(p.rate, x.rows(), x.cols(), rng);
      x = x.cwiseProduct(mask);
      trace.masks.push_back(std::move(mask));
    }
    trace.outputs.push_back(x);
  }
  trace_ = std::move(trace);
  return x;
}

Gradients Network::backward(const Matrix& targets) const {
  if (!trace_) throw UsageError("backward() called without a recorded train-mode forward pass");
  const Matrix& out = trace_->outputs.back();
  if (targets.rows() != out.rows() || targets.cols() != out.cols()) {
    throw DomainError("backward: target shape does not match network output");
  }

  Gradients grads(dense_count());
  std::size_t dense_index = grads.size();
  Matrix delta = (2.0 / static_cast<double>(out.size())) * (out - targets);
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      activation_backward(delta, trace_->outputs[i], d->activation);
      auto& g = grads[--dense_index];
      g.weights = delta * trace_->inputs[i].transpose();
      g.biases = delta.rowwise().sum();
      if (i > 0) delta = d->weights.transpose() * delta;
    } else {
      delta = delta.cwiseProduct(trace_->masks[i]);
    }
  }
  return grads;
}

std::vector<Matrix> Network::recorded_masks() const {
  if (!trace_) throw UsageError("no recorded forward pass");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<DropoutLayer>(layers_[i])) out.push_back(trace_->masks[i]);
  }
  return out;
}

AdamState make_adam_state(const Network& net, const AdamHyper& hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      state.moments.push_back({Matrix::Zero(d->out_width(), d->in_width()),
                               Matrix::Zero(d->out_width(), d->in_width()),
                               Vector::Zero(d->out_width()), Vector::Zero(d->out_width())});
    }
  }
  return state;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.size() != net.dense_count() || state.moments.size() != net.dense_count()) {
    throw DomainError("adam: gradient/state count does not match the network");
  }
  ++state.step;
  std::size_t k = 0;
  for (auto& layer : net.layers()) {
    auto* d = std::get_if<DenseLayer>(&layer);
    if (!d) continue;
    const auto& g = grads[k];
    auto& mom = state.moments[k];
    ++k;
    if (g.weights.rows() != d->weights.rows() || g.weights.cols() != d->weights.cols() ||
        g.biases.size() != d->biases.size() || mom.m_weights.size() != d->weights.size() ||
        mom.m_biases.size() != d->biases.size()) {
      throw DomainError("adam: shape mismatch in dense layer " + std::to_string(k - 1));
    }
    adam_update({d->weights.data(), static_cast<std::size_t>(d->weights.size())},
                {g.weights.data(), static_cast<std::size_t>(g.weights.size())},
                {mom.m_weights.data(), static_cast<std::size_t>(mom.m_weights.size())},
                {mom.v_weights.data(), static_cast<std::size_t>(mom.v_weights.size())},
                state.hyper, state.step);
    adam_update({d->biases.data(), static_cast<std::size_t>(d->biases.size())},
                {g.biases.data(), static_cast<std::size_t>(g.biases.size())},
                {mom.m_biases.data(), static_cast<std::size_t>(mom.m_biases.size())},
                {mom.v_biases.data(), static_cast<std::size_t>(mom.v_biases.size())},
                state.hyper, state.step);
  }
}

}  // namespace metasurf
