#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rdnet/tensor.hpp"

namespace rdnet {

// Dense 3D scalar field with per-axis physical spacing. Storage is x-fastest:
// index = (z * ny + y) * nx + x.
struct Volume {
  std::array<int, 3> dims{0, 0, 0};             // nx, ny, nz
  std::array<float, 3> spacing{1.f, 1.f, 1.f};  // mm per voxel
  std::vector<float> data;

  std::int64_t size() const { return std::int64_t(dims[0]) * dims[1] * dims[2]; }

  float& at(int x, int y, int z) {
    return data[(std::int64_t(z) * dims[1] + y) * dims[0] + x];
  }
  float at(int x, int y, int z) const {
    return data[(std::int64_t(z) * dims[1] + y) * dims[0] + x];
  }

  static Volume zeros(std::array<int, 3> dims, std::array<float, 3> spacing = {1.f, 1.f, 1.f}) {
    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.data.assign(std::size_t(v.size()), 0.f);
    return v;
  }
};

// [1, nz, ny, nx] network input tensor sharing the volume's memory ordering.
inline Tensor volume_to_tensor(const Volume& v) {
  return Tensor::from_data({1, v.dims[2], v.dims[1], v.dims[0]}, v.data);
}

}  // namespace rdnet
