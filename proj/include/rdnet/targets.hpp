#pragma once

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "rdnet/network.hpp"
#include "rdnet/volume.hpp"

namespace rdnet {

// Axis-aligned ground-truth box in fine-voxel coordinates. Fractional
// centers are allowed; contours rarely land on voxel centers.
struct BoxAnnotation {
  int label = 0;
  std::array<float, 3> center{0.f, 0.f, 0.f};  // x, y, z
  std::array<float, 3> size{0.f, 0.f, 0.f};    // w, l, h
};

template <typename S>
using TargetFieldT = BoxFieldT<S>;
using TargetField = BoxField;

// Ground-truth BoxField. Cell (i,j,k) has fine-coordinate center
// ((i+0.5)rx, (j+0.5)ry, (k+0.5)rz). Inside a box the probability target is
// the product of per-axis factors max(0, 1 - 2|offset|/extent), the offset
// target is (cell - center)/r, and the size target is size/r; everything is
// zero outside.
template <typename S = float>
BoxFieldT<S> make_target(const std::vector<BoxAnnotation>& boxes, std::array<int, 3> grid,
                         std::array<int, 3> rates, int structures) {
  std::set<int> seen;
  for (const auto& b : boxes) {
    if (b.label < 0 || b.label >= structures)
      throw DataError("target box label " + std::to_string(b.label) + " outside [0," +
                      std::to_string(structures) + ")");
    if (!seen.insert(b.label).second)
      throw DataError("overlapping boxes for label " + std::to_string(b.label) +
                      ": at most one box per structure");
    for (int a = 0; a < 3; ++a)
      if (!(b.size[a] > 0.f)) throw DataError("target box size must be strictly positive");
  }

  BoxFieldT<S> field;
  field.structures = structures;
  field.grid = grid;
  field.rates = rates;
  field.data = TensorT<S>::zeros(
      {7 * structures, grid[2], grid[1], grid[0]});
  auto& d = field.data.data();
  const std::int64_t cells = field.cells();

  for (const auto& b : boxes) {
    S* base = d.data() + std::int64_t(7 * b.label) * cells;
    for (int k = 0; k < grid[2]; ++k) {
      for (int j = 0; j < grid[1]; ++j) {
        for (int i = 0; i < grid[0]; ++i) {
          const double cell[3] = {(i + 0.5) * rates[0], (j + 0.5) * rates[1],
                                  (k + 0.5) * rates[2]};
          bool inside = true;
          double p = 1.0;
          for (int a = 0; a < 3; ++a) {
            const double off = std::abs(cell[a] - double(b.center[a]));
            if (off > 0.5 * double(b.size[a])) {
              inside = false;
              break;
            }
            p *= std::max(0.0, 1.0 - 2.0 * off / double(b.size[a]));
          }
          if (!inside) continue;
          const std::int64_t ci = field.cell_index(i, j, k);
          base[0 * cells + ci] = S(p);
          for (int a = 0; a < 3; ++a) {
            base[(1 + a) * cells + ci] = S((cell[a] - double(b.center[a])) / rates[a]);
            base[(4 + a) * cells + ci] = S(double(b.size[a]) / rates[a]);
          }
        }
      }
    }
  }
  return field;
}

// Tight bounding box of a binary mask; center is the midpoint of the
// min/max foreground voxel centers.
inline BoxAnnotation box_from_mask(const Volume& mask, int label) {
  std::array<int, 3> lo{mask.dims[0], mask.dims[1], mask.dims[2]};
  std::array<int, 3> hi{-1, -1, -1};
  for (int z = 0; z < mask.dims[2]; ++z)
    for (int y = 0; y < mask.dims[1]; ++y)
      for (int x = 0; x < mask.dims[0]; ++x)
        if (mask.at(x, y, z) != 0.f) {
          const int v[3] = {x, y, z};
          for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
          }
        }
  if (hi[0] < 0) throw DataError("box_from_mask: no structure (empty mask)");
  BoxAnnotation b;
  b.label = label;
  for (int a = 0; a < 3; ++a) {
    b.center[a] = 0.5f * float(lo[a] + hi[a] + 1);  // +0.5 voxel-center correction
    b.size[a] = float(hi[a] - lo[a] + 1);
  }
  return b;
}

}  // namespace rdnet
