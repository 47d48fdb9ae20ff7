#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rdnet/kernels.hpp"
#include "rdnet/rng.hpp"
#include "rdnet/tensor.hpp"

// Differentiable operator set: everything the FEN, the RDN head and the
// losses are built from. Tensors use [C, D, H, W] layout with W fastest.
namespace rdnet::ops {

template <typename S>
TensorT<S> conv3d(const TensorT<S>& input, const TensorT<S>& kernel, const TensorT<S>& bias) {
  using Node = detail::Node<S>;
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (is.size() != 4) throw ShapeError("conv3d input must be [C,D,H,W], got " + shape_str(is));
  if (ks.size() != 5) throw ShapeError("conv3d kernel must be [Cout,Cin,kd,kh,kw], got " + shape_str(ks));
  if (ks[2] % 2 == 0 || ks[3] % 2 == 0 || ks[4] % 2 == 0)
    throw ShapeError("conv3d kernel spatial extents must be odd, got " + shape_str(ks));
  if (is[0] != ks[1])
    throw ShapeError("conv3d channel mismatch: input " + shape_str(is) + " has " +
                     std::to_string(is[0]) + " channels but kernel " + shape_str(ks) +
                     " expects " + std::to_string(ks[1]));
  if (bias.shape() != std::vector<int>{ks[0]})
    throw ShapeError("conv3d bias must be [Cout]=" + std::to_string(ks[0]) + ", got " +
                     shape_str(bias.shape()));

  kernels::Conv3dDims cd{is[0], ks[0], is[1], is[2], is[3], ks[2], ks[3], ks[4]};
  std::vector<S> out(std::size_t(cd.cout) * cd.d * cd.h * cd.w);
  kernels::conv3d_forward(input.data().data(), kernel.data().data(), bias.data().data(),
                          out.data(), cd);

  auto in_n = input.node();
  auto k_n = kernel.node();
  auto b_n = bias.node();
  return TensorT<S>::make(
      {cd.cout, cd.d, cd.h, cd.w}, std::move(out), {input, kernel, bias},
      [in_n, k_n, b_n, cd](Node& self) {
        const S* g = self.grad.data();
        if (in_n->requires_grad) {
          in_n->ensure_grad();
          kernels::conv3d_backward_input(g, k_n->data.data(), in_n->grad.data(), cd);
        }
        if (k_n->requires_grad) {
          k_n->ensure_grad();
          kernels::conv3d_backward_weight(g, in_n->data.data(), k_n->grad.data(), cd);
        }
        if (b_n->requires_grad) {
          b_n->ensure_grad();
          kernels::conv3d_backward_bias(g, b_n->grad.data(), cd);
        }
      });
}

// Max over disjoint windows; gradient routes to the first maximal cell in
// scan order within each window.
template <typename S>
TensorT<S> maxpool3d(const TensorT<S>& input, std::array<int, 3> pool) {
  using Node = detail::Node<S>;
  const auto& is = input.shape();
  if (is.size() != 4) throw ShapeError("maxpool3d input must be [C,D,H,W], got " + shape_str(is));
  const char* axis_name[3] = {"D", "H", "W"};
  for (int a = 0; a < 3; ++a) {
    if (pool[a] < 1) throw ShapeError("maxpool3d pool factors must be >= 1");
    if (is[a + 1] % pool[a] != 0)
      throw ShapeError(std::string("maxpool3d: axis ") + axis_name[a] + " extent " +
                       std::to_string(is[a + 1]) + " not divisible by pool " +
                       std::to_string(pool[a]));
  }
  const int C = is[0], D = is[1], H = is[2], W = is[3];
  const int od = D / pool[0], oh = H / pool[1], ow = W / pool[2];
  std::vector<S> out(std::size_t(C) * od * oh * ow);
  auto argmax = std::make_shared<std::vector<std::int64_t>>(out.size());
  const auto& in = input.data();
  std::int64_t o = 0;
  for (int ch = 0; ch < C; ++ch) {
    for (int z = 0; z < od; ++z) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          S best{};
          std::int64_t besti = -1;
          for (int pz = 0; pz < pool[0]; ++pz) {
            for (int py = 0; py < pool[1]; ++py) {
              for (int px = 0; px < pool[2]; ++px) {
                const std::int64_t idx =
                    ((std::int64_t(ch) * D + (z * pool[0] + pz)) * H + (y * pool[1] + py)) * W +
                    (x * pool[2] + px);
                if (besti < 0 || in[idx] > best) {
                  best = in[idx];
                  besti = idx;
                }
              }
            }
          }
          out[o] = best;
          (*argmax)[o] = besti;
        }
      }
    }
  }
  auto in_n = input.node();
  return TensorT<S>::make({C, od, oh, ow}, std::move(out), {input},
                          [in_n, argmax](Node& self) {
                            if (!in_n->requires_grad) return;
                            in_n->ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              in_n->grad[(*argmax)[i]] += self.grad[i];
                          });
}

// Nearest-neighbor replication; gradient sums each replicated block back to
// its source cell.
template <typename S>
TensorT<S> upsample3d_nearest(const TensorT<S>& input, std::array<int, 3> factor) {
  using Node = detail::Node<S>;
  const auto& is = input.shape();
  if (is.size() != 4) throw ShapeError("upsample3d input must be [C,D,H,W], got " + shape_str(is));
  for (int a = 0; a < 3; ++a)
    if (factor[a] < 1) throw ShapeError("upsample3d factors must be >= 1");
  const int C = is[0], D = is[1], H = is[2], W = is[3];
  const int od = D * factor[0], oh = H * factor[1], ow = W * factor[2];
  std::vector<S> out(std::size_t(C) * od * oh * ow);
  const auto& in = input.data();
  std::int64_t o = 0;
  for (int ch = 0; ch < C; ++ch)
    for (int z = 0; z < od; ++z)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x, ++o)
          out[o] = in[((std::int64_t(ch) * D + z / factor[0]) * H + y / factor[1]) * W + x / factor[2]];

  auto in_n = input.node();
  auto f = factor;
  return TensorT<S>::make({C, od, oh, ow}, std::move(out), {input},
                          [in_n, f, C, D, H, W, od, oh, ow](Node& self) {
                            if (!in_n->requires_grad) return;
                            in_n->ensure_grad();
                            std::int64_t o = 0;
                            for (int ch = 0; ch < C; ++ch)
                              for (int z = 0; z < od; ++z)
                                for (int y = 0; y < oh; ++y)
                                  for (int x = 0; x < ow; ++x, ++o)
                                    in_n->grad[((std::int64_t(ch) * D + z / f[0]) * H + y / f[1]) * W +
                                               x / f[2]] += self.grad[o];
                          });
}

template <typename S>
TensorT<S> relu(const TensorT<S>& input) {
  using Node = detail::Node<S>;
  std::vector<S> out(input.data().begin(), input.data().end());
  for (S& v : out)
    if (v < S(0)) v = S(0);
  auto in_n = input.node();
  return TensorT<S>::make(input.shape(), std::move(out), {input}, [in_n](Node& self) {
    if (!in_n->requires_grad) return;
    in_n->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (in_n->data[i] > S(0)) in_n->grad[i] += self.grad[i];
  });
}

template <typename S>
TensorT<S> sigmoid(const TensorT<S>& input) {
  using Node = detail::Node<S>;
  std::vector<S> out(input.size());
  const auto& in = input.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < input.size(); ++i) out[i] = S(1) / (S(1) + std::exp(-in[i]));
  auto in_n = input.node();
  return TensorT<S>::make(input.shape(), std::move(out), {input}, [in_n](Node& self) {
    if (!in_n->requires_grad) return;
    in_n->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const S o = self.data[i];
      in_n->grad[i] += self.grad[i] * o * (S(1) - o);
    }
  });
}

template <typename S>
TensorT<S> multiply(const TensorT<S>& a, const TensorT<S>& b) {
  using Node = detail::Node<S>;
  if (a.shape() != b.shape())
    throw ShapeError("multiply shape mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<S> out(a.size());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto a_n = a.node();
  auto b_n = b.node();
  return TensorT<S>::make(a.shape(), std::move(out), {a, b}, [a_n, b_n](Node& self) {
    if (a_n->requires_grad) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        a_n->grad[i] += self.grad[i] * b_n->data[i];
    }
    if (b_n->requires_grad) {
      b_n->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        b_n->grad[i] += self.grad[i] * a_n->data[i];
    }
  });
}

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  using Node = detail::Node<S>;
  if (a.shape() != b.shape())
    throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<S> out(a.size());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto a_n = a.node();
  auto b_n = b.node();
  return TensorT<S>::make(a.shape(), std::move(out), {a, b}, [a_n, b_n](Node& self) {
    for (auto& n : {a_n, b_n}) {
      if (!n->requires_grad) continue;
      n->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) n->grad[i] += self.grad[i];
    }
  });
}

// Concatenate along the channel (first) axis; remaining axes must agree.
template <typename S>
TensorT<S> concat_channels(const TensorT<S>& a, const TensorT<S>& b) {
  using Node = detail::Node<S>;
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != bs.size() || as.size() < 1 ||
      !std::equal(as.begin() + 1, as.end(), bs.begin() + 1))
    throw ShapeError("concat_channels shape mismatch: " + shape_str(as) + " vs " + shape_str(bs));
  std::vector<int> os = as;
  os[0] = as[0] + bs[0];
  std::vector<S> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  auto a_n = a.node();
  auto b_n = b.node();
  const std::int64_t na = a.size();
  return TensorT<S>::make(std::move(os), std::move(out), {a, b}, [a_n, b_n, na](Node& self) {
    if (a_n->requires_grad) {
      a_n->ensure_grad();
      for (std::int64_t i = 0; i < na; ++i) a_n->grad[i] += self.grad[i];
    }
    if (b_n->requires_grad) {
      b_n->ensure_grad();
      const std::int64_t nb = std::int64_t(self.grad.size()) - na;
      for (std::int64_t i = 0; i < nb; ++i) b_n->grad[i] += self.grad[na + i];
    }
  });
}

// Contiguous channel window [begin, begin+count).
template <typename S>
TensorT<S> slice_channels(const TensorT<S>& input, int begin, int count) {
  using Node = detail::Node<S>;
  const auto& is = input.shape();
  if (is.empty() || begin < 0 || count < 1 || begin + count > is[0])
    throw ShapeError("slice_channels [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") out of range for " + shape_str(is));
  std::vector<int> os = is;
  os[0] = count;
  const std::int64_t stride = shape_size(is) / is[0];
  std::vector<S> out(input.data().begin() + begin * stride,
                     input.data().begin() + (begin + count) * stride);
  auto in_n = input.node();
  return TensorT<S>::make(std::move(os), std::move(out), {input},
                          [in_n, begin, stride](Node& self) {
                            if (!in_n->requires_grad) return;
                            in_n->ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              in_n->grad[begin * stride + i] += self.grad[i];
                          });
}

// Inverted dropout: zero each cell with probability `rate`, scale survivors
// by 1/(1-rate). Identity in inference mode.
template <typename S>
TensorT<S> dropout(const TensorT<S>& input, double rate, Rng& rng, bool training) {
  using Node = detail::Node<S>;
  if (rate < 0.0 || rate >= 1.0)
    throw DataError("dropout rate must be in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return input;
  auto mask = std::make_shared<std::vector<S>>(input.size());
  const S keep_scale = S(1.0 / (1.0 - rate));
  for (std::int64_t i = 0; i < input.size(); ++i)
    (*mask)[i] = rng.uniform() < rate ? S(0) : keep_scale;
  std::vector<S> out(input.size());
  for (std::int64_t i = 0; i < input.size(); ++i) out[i] = input.data()[i] * (*mask)[i];
  auto in_n = input.node();
  return TensorT<S>::make(input.shape(), std::move(out), {input}, [in_n, mask](Node& self) {
    if (!in_n->requires_grad) return;
    in_n->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      in_n->grad[i] += self.grad[i] * (*mask)[i];
  });
}

// Full reduction to a scalar, 64-bit accumulation.
template <typename S>
TensorT<S> sum(const TensorT<S>& input) {
  using Node = detail::Node<S>;
  double acc = 0.0;
  for (S v : input.data()) acc += double(v);
  auto in_n = input.node();
  return TensorT<S>::make({1}, {S(acc)}, {input}, [in_n](Node& self) {
    if (!in_n->requires_grad) return;
    in_n->ensure_grad();
    for (S& g : in_n->grad) g += self.grad[0];
  });
}

}  // namespace rdnet::ops
