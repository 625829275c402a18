#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bace/error.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

enum class Activation { Relu, Sigmoid, Linear };
enum class Mode { Train, Eval };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::Linear;
};

struct MlpSpec {
  std::vector<LayerSpec> layers;
  double dropout_rate = 0.0;  // applies to hidden-layer outputs only

  bool empty() const { return layers.empty(); }
  Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }

  void validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ConfigError("dropout_rate must lie in [0, 1)");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].in_dim < 1 || layers[i].out_dim < 1)
        throw ConfigError("layer dimensions must be >= 1");
      if (i + 1 < layers.size() && layers[i].out_dim != layers[i + 1].in_dim)
        throw ConfigError("consecutive layers are dimension-incompatible at layer " +
                          std::to_string(i));
    }
  }
};

// Builds a spec from input dim, hidden widths, and an output layer. Hidden
// layers are relu; the output activation is the caller's choice.
inline MlpSpec make_mlp_spec(Index in_dim, const std::vector<Index>& hidden, Index out_dim,
                             Activation output_activation, double dropout_rate) {
  MlpSpec spec;
  spec.dropout_rate = dropout_rate;
  Index prev = in_dim;
  for (Index width : hidden) {
    spec.layers.push_back({prev, width, Activation::Relu});
    prev = width;
  }
  spec.layers.push_back({prev, out_dim, output_activation});
  spec.validate();
  return spec;
}

template <class Scalar>
struct MlpParams {
  MlpSpec spec;
  std::vector<MatrixX<Scalar>> weights;  // out_dim x in_dim per layer
  std::vector<VectorX<Scalar>> biases;

  bool empty() const { return spec.layers.empty(); }
  Index input_dim() const { return spec.input_dim(); }
  Index output_dim() const { return spec.output_dim(); }
};

// Gradient (or moment) buffers shaped like an MlpParams.
template <class Scalar>
struct MlpGrads {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> biases;

  static MlpGrads zeros_like(const MlpParams<Scalar>& params) {
    MlpGrads g;
    g.weights.reserve(params.weights.size());
    g.biases.reserve(params.biases.size());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      g.weights.push_back(MatrixX<Scalar>::Zero(params.weights[l].rows(), params.weights[l].cols()));
      g.biases.push_back(VectorX<Scalar>::Zero(params.biases[l].size()));
    }
    return g;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  // this += a * other
  void add_scaled(const MlpGrads& other, Scalar a) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += a * other.weights[l];
      biases[l] += a * other.biases[l];
    }
  }
};

// Activation record of one forward pass, consumed by backward().
template <class Scalar>
struct ForwardCache {
  std::vector<VectorX<Scalar>> layer_inputs;  // input seen by each layer
  std::vector<VectorX<Scalar>> preacts;       // W*input + b per layer
  std::vector<VectorX<Scalar>> drop_scales;   // per-layer inverted-dropout scales; empty if none
  VectorX<Scalar> output;
};

namespace detail {

template <class Scalar>
Scalar stable_sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <class Scalar>
void apply_activation(Activation act, const VectorX<Scalar>& pre, VectorX<Scalar>& out) {
  switch (act) {
    case Activation::Relu:
      out = pre.cwiseMax(Scalar(0));
      break;
    case Activation::Sigmoid:
      out = pre.unaryExpr([](Scalar z) { return stable_sigmoid(z); });
      break;
    case Activation::Linear:
      out = pre;
      break;
  }
}

// Derivative of the activation evaluated from the pre-activation.
template <class Scalar>
VectorX<Scalar> activation_grad(Activation act, const VectorX<Scalar>& pre) {
  switch (act) {
    case Activation::Relu:
      return pre.unaryExpr([](Scalar z) { return z > Scalar(0) ? Scalar(1) : Scalar(0); });
    case Activation::Sigmoid:
      return pre.unaryExpr([](Scalar z) {
        Scalar s = stable_sigmoid(z);
        return s * (Scalar(1) - s);
      });
    case Activation::Linear:
      return VectorX<Scalar>::Ones(pre.size());
  }
  return VectorX<Scalar>::Ones(pre.size());
}

}  // namespace detail

// Glorot-style uniform initialization on [-s, s], s = sqrt(6/(in+out)); zero biases.
template <class Scalar = double>
MlpParams<Scalar> init_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  MlpParams<Scalar> params;
  params.spec = spec;
  params.weights.reserve(spec.layers.size());
  params.biases.reserve(spec.layers.size());
  for (const LayerSpec& layer : spec.layers) {
    double s = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
    MatrixX<Scalar> w(layer.out_dim, layer.in_dim);
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-s, s));
    params.weights.push_back(std::move(w));
    params.biases.push_back(VectorX<Scalar>::Zero(layer.out_dim));
  }
  return params;
}

// Forward pass. In Train mode, inverted dropout is applied to hidden-layer
// outputs (never the final layer) and the rng must be supplied; Eval mode is
// deterministic and equals the expectation of the Train-mode map.
template <class Scalar, class Derived>
void forward(const MlpParams<Scalar>& params, const Eigen::MatrixBase<Derived>& input_expr,
             Mode mode, Rng* rng, ForwardCache<Scalar>& cache) {
  const VectorX<Scalar> input = input_expr;
  if (params.empty()) throw ConfigError("forward on an empty network");
  if (input.size() != params.input_dim())
    throw ShapeError("forward input length " + std::to_string(input.size()) +
                     " != expected " + std::to_string(params.input_dim()));
  const std::size_t n_layers = params.spec.layers.size();
  const double p = params.spec.dropout_rate;
  const bool use_dropout = (mode == Mode::Train) && p > 0.0;
  if (use_dropout && rng == nullptr)
    throw ConfigError("train-mode forward with dropout requires an rng");

  cache.layer_inputs.resize(n_layers);
  cache.preacts.resize(n_layers);
  cache.drop_scales.assign(n_layers, VectorX<Scalar>());

  VectorX<Scalar> current = input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    cache.layer_inputs[l] = current;
    cache.preacts[l].noalias() = params.weights[l] * current;
    cache.preacts[l] += params.biases[l];
    detail::apply_activation(params.spec.layers[l].activation, cache.preacts[l], current);
    if (use_dropout && l + 1 < n_layers) {
      VectorX<Scalar> scale(current.size());
      const Scalar keep_scale = Scalar(1.0 / (1.0 - p));
      for (Index i = 0; i < scale.size(); ++i)
        scale[i] = rng->uniform() < p ? Scalar(0) : keep_scale;
      cache.drop_scales[l] = scale;
      current.array() *= scale.array();
    }
  }
  cache.output = std::move(current);
}

template <class Scalar, class Derived>
VectorX<Scalar> forward_eval(const MlpParams<Scalar>& params,
                             const Eigen::MatrixBase<Derived>& input) {
  ForwardCache<Scalar> cache;
  forward(params, input, Mode::Eval, nullptr, cache);
  return cache.output;
}

// Reverse-mode gradients of the forward map with the cached dropout masks
// held fixed. Parameter gradients are accumulated into `grads` (caller zeros
// them); the gradient with respect to the input is returned via `grad_input`.
template <class Scalar, class Derived>
void backward(const MlpParams<Scalar>& params, const ForwardCache<Scalar>& cache,
              const Eigen::MatrixBase<Derived>& grad_output_expr, MlpGrads<Scalar>& grads,
              VectorX<Scalar>& grad_input) {
  const VectorX<Scalar> grad_output = grad_output_expr;
  const std::size_t n_layers = params.spec.layers.size();
  if (cache.layer_inputs.size() != n_layers || cache.preacts.size() != n_layers)
    throw ConfigError("backward called with a cache from a different network");
  if (grad_output.size() != params.output_dim())
    throw ShapeError("grad_output length does not match network output");
  if (grads.weights.size() != n_layers) throw ShapeError("grads not shaped like params");

  VectorX<Scalar> g = grad_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (cache.drop_scales[l].size() > 0) g.array() *= cache.drop_scales[l].array();
    VectorX<Scalar> dz =
        g.cwiseProduct(detail::activation_grad(params.spec.layers[l].activation, cache.preacts[l]));
    grads.weights[l].noalias() += dz * cache.layer_inputs[l].transpose();
    grads.biases[l] += dz;
    g.noalias() = params.weights[l].transpose() * dz;
  }
  grad_input = std::move(g);
}

// dim independent uniform draws on [low, high).
template <class Scalar = double>
VectorX<Scalar> sample_uniform(Rng& rng, Index dim, Scalar low, Scalar high) {
  if (!(low < high)) throw ConfigError("sample_uniform requires low < high");
  VectorX<Scalar> out(dim);
  for (Index i = 0; i < dim; ++i) out[i] = static_cast<Scalar>(rng.uniform(low, high));
  return out;
}

// Central finite differences of `loss_fn` against the supplied analytic
// gradient; returns the max over parameters of |a-f| / max(|a|, |f|, 1e-8).
// loss_fn must be deterministic given the parameters.
template <class Scalar, class LossFn>
Scalar grad_check(LossFn&& loss_fn, const MlpParams<Scalar>& params,
                  const MlpGrads<Scalar>& analytic, Scalar step) {
  MlpParams<Scalar> probe = params;
  Scalar max_rel = 0;
  auto check_one = [&](Scalar& slot, Scalar analytic_g) {
    const Scalar saved = slot;
    slot = saved + step;
    Scalar plus = loss_fn(probe);
    slot = saved - step;
    Scalar minus = loss_fn(probe);
    slot = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw NumericError("grad_check: loss is not finite");
    Scalar fd = (plus - minus) / (2 * step);
    Scalar denom = std::max({std::abs(analytic_g), std::abs(fd), Scalar(1e-8)});
    max_rel = std::max(max_rel, std::abs(analytic_g - fd) / denom);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Index r = 0; r < probe.weights[l].rows(); ++r)
      for (Index c = 0; c < probe.weights[l].cols(); ++c)
        check_one(probe.weights[l](r, c), analytic.weights[l](r, c));
    for (Index i = 0; i < probe.biases[l].size(); ++i)
      check_one(probe.biases[l][i], analytic.biases[l][i]);
  }
  return max_rel;
}

}  // namespace bace
