#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rdnet/ops.hpp"
#include "rdnet/rng.hpp"
#include "rdnet/tensor.hpp"

namespace rdnet {

// Pool/up factors are (d,h,w) = (z,y,x) triples, matching the framework
// convention the reported (1,2,2) first pool uses. Dims and rates are
// (x,y,z) like every other coordinate in this codebase.
struct NetworkConfig {
  std::array<int, 3> input_dims{64, 64, 48};  // x, y, z voxels
  int base_channels = 4;
  int levels = 4;
  std::vector<std::array<int, 3>> pool_sizes{{1, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}};
  int up_blocks = 1;
  int feature_channels = 16;  // k, channels at the RDN attachment
  int structures = 1;         // l
  int branch_channels = 32;
  float dropout_rate = 0.2f;
};

// Fine voxels per coarse grid cell, (x,y,z): cumulative pooling divided by
// the up-path upsampling.
inline std::array<int, 3> downsampling_rates(const NetworkConfig& c) {
  std::array<int, 3> pool{1, 1, 1};  // z,y,x
  for (const auto& p : c.pool_sizes)
    for (int a = 0; a < 3; ++a) pool[a] *= p[a];
  std::array<int, 3> up{1, 1, 1};
  for (int j = 0; j < c.up_blocks; ++j)
    for (int a = 0; a < 3; ++a) up[a] *= c.pool_sizes[c.levels - 1 - j][a];
  return {pool[2] / up[2], pool[1] / up[1], pool[0] / up[0]};
}

inline void validate_config(const NetworkConfig& c) {
  if (c.levels < 1 || int(c.pool_sizes.size()) != c.levels)
    throw DataError("network config: expected " + std::to_string(c.levels) +
                    " pool size triples, got " + std::to_string(c.pool_sizes.size()));
  if (c.up_blocks < 0 || c.up_blocks > c.levels)
    throw DataError("network config: up_blocks must be in [0, levels]");
  if (c.base_channels < 1 || c.feature_channels < 1 || c.branch_channels < 1 ||
      c.structures < 1)
    throw DataError("network config: channel and structure counts must be positive");
  if (c.dropout_rate < 0.f || c.dropout_rate >= 1.f)
    throw DataError("network config: dropout_rate must be in [0,1)");

  std::array<int, 3> pool{1, 1, 1};  // z,y,x
  for (const auto& p : c.pool_sizes) {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < 1) throw DataError("network config: pool factors must be >= 1");
      pool[a] *= p[a];
    }
  }
  std::array<int, 3> up{1, 1, 1};
  for (int j = 0; j < c.up_blocks; ++j)
    for (int a = 0; a < 3; ++a) up[a] *= c.pool_sizes[c.levels - 1 - j][a];

  const char* axis_name[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    const int dim = c.input_dims[a];
    const int cum = pool[2 - a];  // pool is z,y,x
    if (dim % cum != 0)
      throw DataError(std::string("network config: input dim ") + axis_name[a] + "=" +
                      std::to_string(dim) + " not divisible by cumulative pooling " +
                      std::to_string(cum));
    if (cum % up[2 - a] != 0)
      throw DataError(std::string("network config: axis ") + axis_name[a] +
                      " downsampling rate " + std::to_string(cum) + "/" +
                      std::to_string(up[2 - a]) + " is not integral");
  }
}

// Coarse RDN grid dims (Mx, My, Mz).
inline std::array<int, 3> grid_dims(const NetworkConfig& c) {
  const auto r = downsampling_rates(c);
  return {c.input_dims[0] / r[0], c.input_dims[1] / r[1], c.input_dims[2] / r[2]};
}

// Per-stage tensor shapes [C,D,H,W], weight-free. Used for dry-run shape
// contract checks.
inline std::vector<std::pair<std::string, std::array<int, 4>>> shape_plan(
    const NetworkConfig& c) {
  validate_config(c);
  std::vector<std::pair<std::string, std::array<int, 4>>> plan;
  int d = c.input_dims[2], h = c.input_dims[1], w = c.input_dims[0];
  plan.push_back({"input", {1, d, h, w}});
  for (int i = 0; i < c.levels; ++i) {
    const int ch = c.base_channels << i;
    plan.push_back({"down" + std::to_string(i), {ch, d, h, w}});
    d /= c.pool_sizes[i][0];
    h /= c.pool_sizes[i][1];
    w /= c.pool_sizes[i][2];
  }
  plan.push_back({"bottleneck", {c.base_channels << c.levels, d, h, w}});
  for (int j = 0; j < c.up_blocks; ++j) {
    const auto& f = c.pool_sizes[c.levels - 1 - j];
    d *= f[0];
    h *= f[1];
    w *= f[2];
    plan.push_back({"up" + std::to_string(j), {c.feature_channels, d, h, w}});
  }
  plan.push_back({"rdn_output", {7 * c.structures, d, h, w}});
  return plan;
}

// Coarse-grid field of box parameters: channels ordered per structure as
// (p, t_x, t_y, t_z, s_x, s_y, s_z). data is [7l, Mz, My, Mx].
template <typename S>
struct BoxFieldT {
  int structures = 1;
  std::array<int, 3> grid{0, 0, 0};   // Mx, My, Mz
  std::array<int, 3> rates{1, 1, 1};  // fine voxels per cell, x,y,z
  TensorT<S> data;

  std::int64_t cells() const { return std::int64_t(grid[0]) * grid[1] * grid[2]; }
  std::int64_t cell_index(int i, int j, int k) const {
    return (std::int64_t(k) * grid[1] + j) * grid[0] + i;
  }
  // channel c of structure s at cell (i,j,k)
  S at(int s, int c, int i, int j, int k) const {
    return data.data()[(7 * s + c) * cells() + cell_index(i, j, k)];
  }
};

using BoxField = BoxFieldT<float>;

// Ordered, uniquely named parameter collection.
template <typename S>
struct ModelParamsT {
  std::vector<std::pair<std::string, TensorT<S>>> named;

  void add(const std::string& name, TensorT<S> t) {
    if (index_.count(name)) throw DataError("duplicate parameter name: " + name);
    index_[name] = named.size();
    named.emplace_back(name, std::move(t));
  }
  TensorT<S>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter: " + name);
    return named[it->second].second;
  }
  const TensorT<S>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter: " + name);
    return named[it->second].second;
  }
  std::vector<TensorT<S>> tensors() const {
    std::vector<TensorT<S>> out;
    out.reserve(named.size());
    for (const auto& [_, t] : named) out.push_back(t);
    return out;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

using ModelParams = ModelParamsT<float>;

namespace netdetail {

// Centered uniform with variance 2/fan_in, which keeps activation scale
// roughly constant through the rectified conv stacks.
template <typename S>
TensorT<S> init_conv_weight(int cout, int cin, std::array<int, 3> k, Rng& rng) {
  const double bound = std::sqrt(6.0 / (double(cin) * k[0] * k[1] * k[2]));
  std::vector<S> w(std::size_t(cout) * cin * k[0] * k[1] * k[2]);
  for (auto& v : w) v = S(rng.uniform(-bound, bound));
  return TensorT<S>::from_data({cout, cin, k[0], k[1], k[2]}, std::move(w), true);
}

template <typename S>
void add_conv(ModelParamsT<S>& params, const std::string& name, int cout, int cin,
              std::array<int, 3> k, Rng& rng) {
  params.add(name + ".weight", init_conv_weight<S>(cout, cin, k, rng));
  params.add(name + ".bias", TensorT<S>::zeros({cout}, true));
}

}  // namespace netdetail

// FEN: per down level [conv3 -> relu -> conv3 -> relu -> dropout -> pool],
// a bottleneck pair, then per up block [upsample -> concat skip -> conv3 ->
// relu -> conv3 -> relu -> dropout]. RDN attaches after the last up block.
template <typename S>
ModelParamsT<S> build_model(const NetworkConfig& c, Rng& rng) {
  validate_config(c);
  ModelParamsT<S> params;
  const std::array<int, 3> k3{3, 3, 3};
  const std::array<int, 3> k1{1, 1, 1};

  int cin = 1;
  for (int i = 0; i < c.levels; ++i) {
    const int ch = c.base_channels << i;
    netdetail::add_conv(params, "down" + std::to_string(i) + ".conv1", ch, cin, k3, rng);
    netdetail::add_conv(params, "down" + std::to_string(i) + ".conv2", ch, ch, k3, rng);
    cin = ch;
  }
  const int cb = c.base_channels << c.levels;
  netdetail::add_conv(params, "bottleneck.conv1", cb, cin, k3, rng);
  netdetail::add_conv(params, "bottleneck.conv2", cb, cb, k3, rng);
  cin = cb;
  for (int j = 0; j < c.up_blocks; ++j) {
    const int skip_ch = c.base_channels << (c.levels - 1 - j);
    netdetail::add_conv(params, "up" + std::to_string(j) + ".conv1", c.feature_channels,
                        cin + skip_ch, k3, rng);
    netdetail::add_conv(params, "up" + std::to_string(j) + ".conv2", c.feature_channels,
                        c.feature_channels, k3, rng);
    cin = c.feature_channels;
  }
  for (const char* axis : {"x", "y", "z"}) {
    netdetail::add_conv(params, std::string("rdn.branch_") + axis + ".conv",
                        c.branch_channels, c.feature_channels, k3, rng);
    // 3l 1x1x1 kernels per branch, 9l in total: (p_a, t_a, s_a) per structure
    netdetail::add_conv(params, std::string("rdn.branch_") + axis + ".head",
                        3 * c.structures, c.branch_channels, k1, rng);
  }
  return params;
}

// Volume -> feature map [k, Mz, My, Mx]. `rng` drives dropout and is only
// consulted when training; inference is deterministic.
template <typename S>
TensorT<S> fen_forward(const ModelParamsT<S>& params, const NetworkConfig& c,
                       const TensorT<S>& volume, bool training, Rng* rng = nullptr) {
  const auto& vs = volume.shape();
  const std::vector<int> want{1, c.input_dims[2], c.input_dims[1], c.input_dims[0]};
  if (vs != want)
    throw ShapeError("fen_forward: volume shape " + shape_str(vs) + " does not match config " +
                     shape_str(want));
  if (training && !rng) throw DataError("fen_forward: training mode requires an rng");

  auto drop = [&](const TensorT<S>& t) {
    return training ? ops::dropout(t, c.dropout_rate, *rng, true) : t;
  };
  auto conv_block = [&](const TensorT<S>& t, const std::string& name) {
    auto a = ops::relu(ops::conv3d(t, params.at(name + ".conv1.weight"), params.at(name + ".conv1.bias")));
    return ops::relu(ops::conv3d(a, params.at(name + ".conv2.weight"), params.at(name + ".conv2.bias")));
  };

  TensorT<S> x = volume;
  std::vector<TensorT<S>> skips;
  for (int i = 0; i < c.levels; ++i) {
    x = drop(conv_block(x, "down" + std::to_string(i)));
    skips.push_back(x);
    x = ops::maxpool3d(x, c.pool_sizes[i]);
  }
  x = drop(conv_block(x, "bottleneck"));
  for (int j = 0; j < c.up_blocks; ++j) {
    x = ops::upsample3d_nearest(x, c.pool_sizes[c.levels - 1 - j]);
    x = ops::concat_channels(x, skips[c.levels - 1 - j]);
    x = drop(conv_block(x, "up" + std::to_string(j)));
  }
  return x;
}

// Feature map -> BoxField. Three sigmoid-activated 3x3x3 branches, one per
// axis; each emits (p_a, t_a, s_a) per structure through 1x1x1 kernels.
// p_a gets a sigmoid, t_a and s_a stay linear, and p = p_x * p_y * p_z.
template <typename S>
BoxFieldT<S> rdn_forward(const ModelParamsT<S>& params, const NetworkConfig& c,
                         const TensorT<S>& features) {
  if (features.shape().size() != 4 || features.shape()[0] != c.feature_channels)
    throw ShapeError("rdn_forward: expected " + std::to_string(c.feature_channels) +
                     " feature channels, got " + shape_str(features.shape()));

  std::array<TensorT<S>, 3> heads;
  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    const std::string base = std::string("rdn.branch_") + axes[a];
    auto branch = ops::sigmoid(
        ops::conv3d(features, params.at(base + ".conv.weight"), params.at(base + ".conv.bias")));
    heads[a] = ops::conv3d(branch, params.at(base + ".head.weight"), params.at(base + ".head.bias"));
  }

  TensorT<S> field;
  for (int s = 0; s < c.structures; ++s) {
    auto pa = [&](int a) { return ops::sigmoid(ops::slice_channels(heads[a], 3 * s, 1)); };
    auto p = ops::multiply(ops::multiply(pa(0), pa(1)), pa(2));
    TensorT<S> chans = p;
    for (int a = 0; a < 3; ++a)
      chans = ops::concat_channels(chans, ops::slice_channels(heads[a], 3 * s + 1, 1));
    for (int a = 0; a < 3; ++a)
      chans = ops::concat_channels(chans, ops::slice_channels(heads[a], 3 * s + 2, 1));
    field = s == 0 ? chans : ops::concat_channels(field, chans);
  }

  BoxFieldT<S> out;
  out.structures = c.structures;
  out.grid = grid_dims(c);
  out.rates = downsampling_rates(c);
  out.data = field;
  return out;
}

template <typename S>
BoxFieldT<S> model_forward(const ModelParamsT<S>& params, const NetworkConfig& c,
                           const TensorT<S>& volume, bool training, Rng* rng = nullptr) {
  return rdn_forward(params, c, fen_forward(params, c, volume, training, rng));
}

}  // namespace rdnet
