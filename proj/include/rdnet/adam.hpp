#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rdnet/errors.hpp"
#include "rdnet/tensor.hpp"

namespace rdnet {

template <typename S>
struct AdamStateT {
  std::vector<std::vector<S>> first_moment;
  std::vector<std::vector<S>> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using AdamState = AdamStateT<float>;

// Standard bias-corrected Adam update. Every parameter must carry a
// populated gradient buffer; moments are allocated lazily on the first step.
template <typename S>
void adam_step(std::vector<TensorT<S>>& params, AdamStateT<S>& state, double lr) {
  if (state.first_moment.empty()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment[i].assign(std::size_t(params[i].size()), S(0));
      state.second_moment[i].assign(std::size_t(params[i].size()), S(0));
    }
  }
  if (state.first_moment.size() != params.size())
    throw DataError("adam state holds " + std::to_string(state.first_moment.size()) +
                    " moment arrays for " + std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad())
      throw DataError("adam_step: parameter " + std::to_string(i) + " has no gradient");
    if (state.first_moment[i].size() != std::size_t(params[i].size()))
      throw DataError("adam state size mismatch on parameter " + std::to_string(i));
  }

  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& x = params[i].data();
    const auto& g = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      m[j] = S(state.beta1 * double(m[j]) + (1.0 - state.beta1) * double(g[j]));
      v[j] = S(state.beta2 * double(v[j]) + (1.0 - state.beta2) * double(g[j]) * double(g[j]));
      const double mhat = double(m[j]) / bc1;
      const double vhat = double(v[j]) / bc2;
      x[j] = S(double(x[j]) - lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

}  // namespace rdnet
