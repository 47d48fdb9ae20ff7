#pragma once

#include <array>
#include <vector>

#include "rdnet/rng.hpp"
#include "rdnet/volume.hpp"

namespace rdnet {

// Slice-wise 2D elastic deformation: a 3x3 grid of Gaussian control
// displacements interpolated to a dense per-pixel field, applied identically
// to every axial (x,y) slice.
struct DisplacementField {
  int width = 0, height = 0;                       // slice dims (x, y)
  std::array<std::array<float, 2>, 9> control{};   // 3x3 grid, row-major, (dx,dy)
  std::vector<float> dx, dy;                       // dense per-pixel displacements
};

DisplacementField sample_field(Rng& rng, int width, int height,
                               std::array<float, 2> sigma = {10.f, 10.f});

enum class Interp { Spline, Nearest };

// Backward warp: out(p) = in(p - d(p)), so the field describes where content
// moves to. Images use Catmull-Rom spline sampling, masks nearest-neighbor;
// out-of-bounds samples clamp to the border.
Volume deform_volume(const Volume& v, const DisplacementField& field, Interp interp);

struct AugmentedSample {
  Volume volume;
  std::vector<Volume> masks;
};

// `count` independent deformations with per-sample derived seeds
// (base seed XOR sample index), image warped with spline, masks with nearest.
std::vector<AugmentedSample> augment_dataset(const Volume& volume,
                                             const std::vector<Volume>& masks, Rng& rng,
                                             int count = 25,
                                             std::array<float, 2> sigma = {10.f, 10.f});

}  // namespace rdnet
