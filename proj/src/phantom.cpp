#include "rdnet/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "rdnet/errors.hpp"

namespace rdnet {

namespace {

struct Blob {
  std::array<float, 3> center;
  std::array<float, 3> semi;
};

void paint_ellipsoid(Volume& v, const Blob& b, float intensity) {
  const int x0 = std::max(0, int(std::floor(b.center[0] - b.semi[0])));
  const int x1 = std::min(v.dims[0] - 1, int(std::ceil(b.center[0] + b.semi[0])));
  const int y0 = std::max(0, int(std::floor(b.center[1] - b.semi[1])));
  const int y1 = std::min(v.dims[1] - 1, int(std::ceil(b.center[1] + b.semi[1])));
  const int z0 = std::max(0, int(std::floor(b.center[2] - b.semi[2])));
  const int z1 = std::min(v.dims[2] - 1, int(std::ceil(b.center[2] + b.semi[2])));
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = (x - b.center[0]) / b.semi[0];
        const double dy = (y - b.center[1]) / b.semi[1];
        const double dz = (z - b.center[2]) / b.semi[2];
        if (dx * dx + dy * dy + dz * dz <= 1.0) v.at(x, y, z) = intensity;
      }
}

// Rib-like lateral bars on both sides of a blob.
void paint_appendage(Volume& v, const Blob& b, float intensity) {
  const int cy = int(std::lround(b.center[1]));
  const int cz = int(std::lround(b.center[2]));
  const int reach = 6;
  for (int side = -1; side <= 1; side += 2) {
    const int xa = int(std::lround(b.center[0] + side * b.semi[0]));
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -2; dy <= 2; ++dy)
        for (int step = 0; step <= reach; ++step) {
          const int x = xa + side * step;
          const int y = cy + dy, z = cz + dz;
          if (x < 0 || x >= v.dims[0] || y < 0 || y >= v.dims[1] || z < 0 || z >= v.dims[2])
            continue;
          v.at(x, y, z) = intensity;
        }
  }
}

}  // namespace

PhantomSample gen_phantom(const PhantomConfig& c, Rng& rng) {
  if (c.blob_count < 1 || c.target_ordinal < 1 || c.target_ordinal > c.blob_count)
    throw DataError("phantom config: target ordinal must be in [1, blob_count]");
  const float pitch = 2.f * c.blob_semi_axes[2] + c.gap;
  const float stack = c.blob_count * 2.f * c.blob_semi_axes[2] + (c.blob_count - 1) * c.gap;
  if (stack > float(c.dims[2]))
    throw DataError("phantom config infeasible: blob stack of " + std::to_string(stack) +
                    " voxels overflows z extent " + std::to_string(c.dims[2]));
  if (2.f * c.blob_semi_axes[0] > float(c.dims[0]) || 2.f * c.blob_semi_axes[1] > float(c.dims[1]))
    throw DataError("phantom config infeasible: blob exceeds x/y extent");

  PhantomSample s;
  s.volume = Volume::zeros(c.dims, c.spacing);
  if (c.background_intensity != 0.f)
    std::fill(s.volume.data.begin(), s.volume.data.end(), c.background_intensity);
  s.mask = Volume::zeros(c.dims, c.spacing);

  const float z0 = 0.5f * (float(c.dims[2]) - stack) + c.blob_semi_axes[2];
  Blob target_blob{};
  for (int i = 0; i < c.blob_count; ++i) {
    Blob b;
    b.center = {0.5f * c.dims[0] + float(rng.uniform(-c.center_jitter, c.center_jitter)),
                0.5f * c.dims[1] + float(rng.uniform(-c.center_jitter, c.center_jitter)),
                z0 + i * pitch};
    for (int a = 0; a < 3; ++a)
      b.semi[a] = c.blob_semi_axes[a] + float(rng.uniform(-c.size_jitter, c.size_jitter));
    paint_ellipsoid(s.volume, b, c.blob_intensity);
    const int ordinal = i + 1;
    if (ordinal > c.target_ordinal) paint_appendage(s.volume, b, c.feature_intensity);
    if (ordinal == c.target_ordinal) target_blob = b;
  }
  paint_ellipsoid(s.mask, target_blob, 1.f);
  s.annotation = box_from_mask(s.mask, 0);
  return s;
}

Volume apply_noise(const Volume& v, const NoiseModel& m, Rng& rng) {
  Volume out = v;
  if (m.kind == NoiseModel::Kind::HighNoise && m.shading_amplitude > 0.f) {
    // smooth radial bias field in the axial plane
    const double cx = 0.5 * (v.dims[0] - 1), cy = 0.5 * (v.dims[1] - 1);
    const double rmax2 = cx * cx + cy * cy;
    for (int z = 0; z < v.dims[2]; ++z)
      for (int y = 0; y < v.dims[1]; ++y)
        for (int x = 0; x < v.dims[0]; ++x) {
          const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
          out.at(x, y, z) *= float(1.0 + m.shading_amplitude * (0.5 - r2));
        }
  }
  if (m.gaussian_sigma > 0.f)
    for (auto& val : out.data) val += float(rng.normal(0.0, m.gaussian_sigma));
  if (m.kind == NoiseModel::Kind::HighNoise && m.streak_count > 0 && m.streak_amplitude > 0.f) {
    // sparse high-intensity lines along x, as cone-beam style streaks
    for (int i = 0; i < m.streak_count; ++i) {
      const int y = int(rng.next_below(std::uint64_t(v.dims[1])));
      const int z = int(rng.next_below(std::uint64_t(v.dims[2])));
      const float amp = m.streak_amplitude * (rng.uniform() < 0.5 ? -1.f : 1.f);
      for (int x = 0; x < v.dims[0]; ++x) out.at(x, y, z) += amp;
    }
  }
  return out;
}

}  // namespace rdnet
