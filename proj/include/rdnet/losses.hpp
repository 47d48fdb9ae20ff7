#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rdnet/network.hpp"
#include "rdnet/ops.hpp"
#include "rdnet/tensor.hpp"

namespace rdnet {

struct LossReport {
  double l_p = 0.0, l_c = 0.0, l_s = 0.0, l_total = 0.0;
};

namespace lossdetail {
inline constexpr double kDenomEps = 1e-8;  // keeps degenerate denominators finite
}

// Dice-style probability loss over all cells and structures:
//   1 - 2*sum(p*p_hat) / (sum(p^2 + p_hat^2) + eps)
// Reaches 1 when the overlap term is zero.
template <typename S>
TensorT<S> loss_p(const TensorT<S>& p, const TensorT<S>& p_hat) {
  using Node = detail::Node<S>;
  if (p.shape() != p_hat.shape())
    throw ShapeError("loss_p shape mismatch: " + shape_str(p.shape()) + " vs " +
                     shape_str(p_hat.shape()));
  double num = 0.0, den = lossdetail::kDenomEps;
  const auto& pd = p.data();
  const auto& hd = p_hat.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    num += 2.0 * double(pd[i]) * double(hd[i]);
    den += double(pd[i]) * double(pd[i]) + double(hd[i]) * double(hd[i]);
  }
  const double loss = 1.0 - num / den;
  auto p_n = p.node();
  auto h_n = p_hat.node();
  return TensorT<S>::make({1}, {S(loss)}, {p, p_hat}, [p_n, h_n, num, den](Node& self) {
    if (!p_n->requires_grad) return;
    p_n->ensure_grad();
    const double g = double(self.grad[0]);
    const double inv = 1.0 / den;
    for (std::size_t i = 0; i < p_n->data.size(); ++i) {
      const double pv = double(p_n->data[i]), hv = double(h_n->data[i]);
      p_n->grad[i] += S(g * 2.0 * inv * (num * inv * pv - hv));
    }
  });
}

// Normalized vector discrepancy shared by L_c and L_s:
//   sum_cells ||v - v_hat|| / (sum_cells (||v|| + ||v_hat||) + eps)
// where each cell and structure contributes the l2-norm of its 3-vector.
// Inputs are [3l, D, H, W] with structure-major channel triples.
template <typename S>
TensorT<S> vector_ratio_loss(const TensorT<S>& v, const TensorT<S>& v_hat, int structures) {
  using Node = detail::Node<S>;
  if (v.shape() != v_hat.shape())
    throw ShapeError("vector loss shape mismatch: " + shape_str(v.shape()) + " vs " +
                     shape_str(v_hat.shape()));
  if (v.shape().empty() || v.shape()[0] != 3 * structures)
    throw ShapeError("vector loss expects " + std::to_string(3 * structures) +
                     " channels, got " + shape_str(v.shape()));
  const std::int64_t cells = v.size() / (3 * structures);
  const auto& vd = v.data();
  const auto& hd = v_hat.data();

  double num = 0.0, den = lossdetail::kDenomEps;
  for (int s = 0; s < structures; ++s) {
    const std::int64_t base = std::int64_t(3) * s * cells;
    for (std::int64_t c = 0; c < cells; ++c) {
      double d2 = 0.0, n2 = 0.0, h2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double vv = double(vd[base + a * cells + c]);
        const double hv = double(hd[base + a * cells + c]);
        d2 += (vv - hv) * (vv - hv);
        n2 += vv * vv;
        h2 += hv * hv;
      }
      num += std::sqrt(d2);
      den += std::sqrt(n2) + std::sqrt(h2);
    }
  }
  const double loss = num / den;
  auto v_n = v.node();
  auto h_n = v_hat.node();
  return TensorT<S>::make(
      {1}, {S(loss)}, {v, v_hat}, [v_n, h_n, structures, cells, num, den](Node& self) {
        if (!v_n->requires_grad) return;
        v_n->ensure_grad();
        const double g = double(self.grad[0]);
        const double inv = 1.0 / den;
        for (int s = 0; s < structures; ++s) {
          const std::int64_t base = std::int64_t(3) * s * cells;
          for (std::int64_t c = 0; c < cells; ++c) {
            double d2 = 0.0, n2 = 0.0;
            for (int a = 0; a < 3; ++a) {
              const double vv = double(v_n->data[base + a * cells + c]);
              const double hv = double(h_n->data[base + a * cells + c]);
              d2 += (vv - hv) * (vv - hv);
              n2 += vv * vv;
            }
            const double d = std::sqrt(d2), n = std::sqrt(n2);
            for (int a = 0; a < 3; ++a) {
              const double vv = double(v_n->data[base + a * cells + c]);
              const double hv = double(h_n->data[base + a * cells + c]);
              double grad = 0.0;
              if (d > 0.0) grad += (vv - hv) / d * inv;
              if (n > 0.0) grad -= num * inv * inv * vv / n;
              v_n->grad[base + a * cells + c] += S(g * grad);
            }
          }
        }
      });
}

template <typename S>
TensorT<S> loss_c(const TensorT<S>& t, const TensorT<S>& t_hat, int structures) {
  return vector_ratio_loss(t, t_hat, structures);
}

template <typename S>
TensorT<S> loss_s(const TensorT<S>& s, const TensorT<S>& s_hat, int structures) {
  return vector_ratio_loss(s, s_hat, structures);
}

template <typename S>
struct LossTermsT {
  TensorT<S> p, c, s, total;
  LossReport report() const {
    LossReport r;
    r.l_p = double(p.value());
    r.l_c = double(c.value());
    r.l_s = double(s.value());
    r.l_total = double(total.value());
    return r;
  }
};

using LossTerms = LossTermsT<float>;

namespace lossdetail {

// Gather one component's channels (p / t / s) across structures into a
// contiguous tensor, preserving the graph.
template <typename S>
TensorT<S> gather_component(const BoxFieldT<S>& f, int offset, int count) {
  TensorT<S> out;
  for (int s = 0; s < f.structures; ++s) {
    auto part = ops::slice_channels(f.data, 7 * s + offset, count);
    out = s == 0 ? part : ops::concat_channels(out, part);
  }
  return out;
}

}  // namespace lossdetail

// L_total = L_p + L_c + L_s over a predicted field and its target.
template <typename S>
LossTermsT<S> loss_total(const BoxFieldT<S>& out, const BoxFieldT<S>& target) {
  if (out.grid != target.grid || out.structures != target.structures)
    throw ShapeError("loss_total: output and target field layouts differ");
  LossTermsT<S> terms;
  terms.p = loss_p(lossdetail::gather_component(out, 0, 1),
                   lossdetail::gather_component(target, 0, 1));
  terms.c = loss_c(lossdetail::gather_component(out, 1, 3),
                   lossdetail::gather_component(target, 1, 3), out.structures);
  terms.s = loss_s(lossdetail::gather_component(out, 4, 3),
                   lossdetail::gather_component(target, 4, 3), out.structures);
  terms.total = ops::add(ops::add(terms.p, terms.c), terms.s);
  return terms;
}

}  // namespace rdnet
