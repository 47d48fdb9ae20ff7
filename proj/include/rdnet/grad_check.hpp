#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "rdnet/errors.hpp"
#include "rdnet/rng.hpp"
#include "rdnet/tensor.hpp"

namespace rdnet {

struct GradCheckOptions {
  double eps = 1e-3;
  int samples_per_param = 8;  // <=0 checks every entry
  double rel_floor = 1e-6;    // denominator floor in the relative error
  std::uint64_t seed = 17;
};

// Compares reverse-mode gradients of a deterministic scalar computation
// against central finite differences on a sampled subset of parameter
// entries. Returns the worst relative error
//   |a - n| / max(|a|, |n|, rel_floor).
template <typename S>
double grad_check(const std::function<TensorT<S>()>& f, std::vector<TensorT<S>> params,
                  GradCheckOptions opts = {}) {
  TensorT<S> loss = f();
  if (!std::isfinite(double(loss.value())))
    throw NumericalError("grad_check: non-finite loss value");
  for (auto& p : params) p.zero_grad();
  loss.backward();

  std::vector<std::vector<S>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  Rng rng(opts.seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& x = params[pi].data();
    const auto& a = analytic[pi];

    std::vector<std::int64_t> indices;
    if (opts.samples_per_param <= 0 || std::int64_t(x.size()) <= opts.samples_per_param) {
      indices.resize(x.size());
      std::iota(indices.begin(), indices.end(), 0);
    } else {
      // half the samples at the largest analytic entries, half random
      std::vector<std::int64_t> order(x.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::int64_t l, std::int64_t r) {
        return std::abs(double(a[l])) > std::abs(double(a[r]));
      });
      const int top = opts.samples_per_param / 2;
      indices.assign(order.begin(), order.begin() + top);
      while (std::int64_t(indices.size()) < opts.samples_per_param)
        indices.push_back(std::int64_t(rng.next_below(x.size())));
    }

    for (std::int64_t j : indices) {
      const S saved = x[j];
      x[j] = S(double(saved) + opts.eps);
      const double lp = double(f().value());
      x[j] = S(double(saved) - opts.eps);
      const double lm = double(f().value());
      x[j] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericalError("grad_check: non-finite value at parameter " + std::to_string(pi) +
                             " index " + std::to_string(j));
      const double n = (lp - lm) / (2.0 * opts.eps);
      const double av = double(a[j]);
      const double rel =
          std::abs(av - n) / std::max({std::abs(av), std::abs(n), opts.rel_floor});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace rdnet
