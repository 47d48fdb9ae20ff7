#include "rdnet/augment.hpp"

#include <algorithm>
#include <cmath>

#include "rdnet/errors.hpp"

namespace rdnet {

namespace {

// Natural cubic spline through three equally spaced knots y0,y1,y2 at
// s = 0,1,2. Boundary second derivatives are zero; the single interior one is
// M1 = 1.5*(y0 - 2*y1 + y2).
double spline3(double y0, double y1, double y2, double s) {
  const double m1 = 1.5 * (y0 - 2.0 * y1 + y2);
  if (s <= 1.0) {
    const double t = s;  // segment [0,1]
    return y0 * (1.0 - t) + y1 * t + m1 / 6.0 * (t * t * t - t);
  }
  const double t = s - 1.0;  // segment [1,2]
  return y1 * (1.0 - t) + y2 * t + m1 / 6.0 * ((1.0 - t) * (1.0 - t) * (1.0 - t) - (1.0 - t));
}

// Catmull-Rom weights for fractional offset t in [0,1).
void catmull_rom_weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

float sample_slice_spline(const Volume& v, int z, double sx, double sy) {
  const int x0 = int(std::floor(sx));
  const int y0 = int(std::floor(sy));
  double wx[4], wy[4];
  catmull_rom_weights(sx - x0, wx);
  catmull_rom_weights(sy - y0, wy);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    const int y = std::clamp(y0 - 1 + j, 0, v.dims[1] - 1);
    double row = 0.0;
    for (int i = 0; i < 4; ++i) {
      const int x = std::clamp(x0 - 1 + i, 0, v.dims[0] - 1);
      row += wx[i] * double(v.at(x, y, z));
    }
    acc += wy[j] * row;
  }
  return float(acc);
}

float sample_slice_nearest(const Volume& v, int z, double sx, double sy) {
  const int x = std::clamp(int(std::lround(sx)), 0, v.dims[0] - 1);
  const int y = std::clamp(int(std::lround(sy)), 0, v.dims[1] - 1);
  return v.at(x, y, z);
}

}  // namespace

DisplacementField sample_field(Rng& rng, int width, int height, std::array<float, 2> sigma) {
  if (width < 3 || height < 3)
    throw DataError("sample_field: slice dims must be at least 3x3");
  DisplacementField f;
  f.width = width;
  f.height = height;
  for (int cy = 0; cy < 3; ++cy) {
    for (int cx = 0; cx < 3; ++cx) {
      f.control[cy * 3 + cx][0] = float(rng.normal(0.0, sigma[0]));
      f.control[cy * 3 + cx][1] = float(rng.normal(0.0, sigma[1]));
    }
  }
  f.dx.resize(std::size_t(width) * height);
  f.dy.resize(std::size_t(width) * height);
  // Control points sit on a uniform 3x3 lattice including the slice borders;
  // separable natural-cubic interpolation to pixel level.
  for (int comp = 0; comp < 2; ++comp) {
    auto& dense = comp == 0 ? f.dx : f.dy;
    for (int y = 0; y < height; ++y) {
      const double sy = 2.0 * y / (height - 1);
      for (int x = 0; x < width; ++x) {
        const double sx = 2.0 * x / (width - 1);
        double rows[3];
        for (int r = 0; r < 3; ++r)
          rows[r] = spline3(f.control[r * 3 + 0][comp], f.control[r * 3 + 1][comp],
                            f.control[r * 3 + 2][comp], sx);
        dense[std::size_t(y) * width + x] = float(spline3(rows[0], rows[1], rows[2], sy));
      }
    }
  }
  return f;
}

Volume deform_volume(const Volume& v, const DisplacementField& field, Interp interp) {
  if (field.width != v.dims[0] || field.height != v.dims[1])
    throw DataError("deform_volume: field dims (" + std::to_string(field.width) + "," +
                    std::to_string(field.height) + ") do not match slice dims (" +
                    std::to_string(v.dims[0]) + "," + std::to_string(v.dims[1]) + ")");
  Volume out = Volume::zeros(v.dims, v.spacing);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < v.dims[2]; ++z) {
    for (int y = 0; y < v.dims[1]; ++y) {
      for (int x = 0; x < v.dims[0]; ++x) {
        const std::size_t pi = std::size_t(y) * field.width + x;
        const double sx = double(x) - double(field.dx[pi]);
        const double sy = double(y) - double(field.dy[pi]);
        out.at(x, y, z) = interp == Interp::Spline ? sample_slice_spline(v, z, sx, sy)
                                                   : sample_slice_nearest(v, z, sx, sy);
      }
    }
  }
  return out;
}

std::vector<AugmentedSample> augment_dataset(const Volume& volume,
                                             const std::vector<Volume>& masks, Rng& rng,
                                             int count, std::array<float, 2> sigma) {
  for (const auto& m : masks)
    if (m.dims != volume.dims) throw DataError("augment_dataset: mask dims do not match volume");
  std::vector<AugmentedSample> out;
  out.reserve(std::size_t(std::max(count, 0)));
  for (int i = 1; i <= count; ++i) {
    Rng child(rng.seed() ^ std::uint64_t(i));
    auto field = sample_field(child, volume.dims[0], volume.dims[1], sigma);
    AugmentedSample s;
    s.volume = deform_volume(volume, field, Interp::Spline);
    for (const auto& m : masks) s.masks.push_back(deform_volume(m, field, Interp::Nearest));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace rdnet
