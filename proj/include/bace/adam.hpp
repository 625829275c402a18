#pragma once

#include <cmath>
#include <string>

#include "bace/error.hpp"
#include "bace/nn.hpp"

namespace bace {

template <class Scalar>
struct AdamState {
  MlpGrads<Scalar> first_moment;
  MlpGrads<Scalar> second_moment;
  long step_count = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  Scalar learning_rate = Scalar(1e-3);

  static AdamState like(const MlpParams<Scalar>& params, Scalar learning_rate) {
    AdamState state;
    state.first_moment = MlpGrads<Scalar>::zeros_like(params);
    state.second_moment = MlpGrads<Scalar>::zeros_like(params);
    state.learning_rate = learning_rate;
    return state;
  }
};

namespace detail {

template <class Scalar, class Block>
void adam_update_block(Block& param, Block& m, Block& v, const Block& g, Scalar beta1,
                       Scalar beta2, Scalar epsilon, Scalar lr, Scalar bias1, Scalar bias2) {
  m = beta1 * m + (Scalar(1) - beta1) * g;
  v = (beta2 * v.array() + (Scalar(1) - beta2) * g.array().square()).matrix();
  auto m_hat = m.array() / bias1;
  auto v_hat = v.array() / bias2;
  param.array() -= lr * m_hat / (v_hat.sqrt() + epsilon);
}

}  // namespace detail

// One Adam step with bias correction. step_count increments by exactly 1.
template <class Scalar>
void adam_step(AdamState<Scalar>& state, MlpParams<Scalar>& params, const MlpGrads<Scalar>& grads) {
  if (grads.weights.size() != params.weights.size())
    throw ShapeError("adam_step: grads not shaped like params");
  state.step_count += 1;
  const Scalar bias1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step_count));
  const Scalar bias2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step_count));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].size() != params.biases[l].size())
      throw ShapeError("adam_step: grads not shaped like params at layer " + std::to_string(l));
    detail::adam_update_block(params.weights[l], state.first_moment.weights[l],
                              state.second_moment.weights[l], grads.weights[l], state.beta1,
                              state.beta2, state.epsilon, state.learning_rate, bias1, bias2);
    detail::adam_update_block(params.biases[l], state.first_moment.biases[l],
                              state.second_moment.biases[l], grads.biases[l], state.beta1,
                              state.beta2, state.epsilon, state.learning_rate, bias1, bias2);
  }
}

}  // namespace bace
