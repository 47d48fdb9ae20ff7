#pragma once

#include <array>

#include "rdnet/rng.hpp"
#include "rdnet/targets.hpp"
#include "rdnet/volume.hpp"

namespace rdnet {

// Synthetic stand-in for the clinical data: a column of near-identical
// ellipsoidal blobs stacked along z, one of which (the target ordinal,
// counted from the inferior z=0 end) must be told apart purely from context.
// Blobs superior to the target carry rib-like lateral appendages, mimicking
// the thoracic/lumbar transition.
struct PhantomConfig {
  std::array<int, 3> dims{64, 64, 48};
  std::array<float, 3> spacing{1.f, 1.f, 2.f};
  int blob_count = 6;
  std::array<float, 3> blob_semi_axes{12.f, 10.f, 3.f};  // x,y,z voxels
  float gap = 2.f;                                       // inter-blob gap along z
  int target_ordinal = 3;                                // 1-based from the inferior end
  float background_intensity = 0.f;
  float blob_intensity = 1.f;
  float feature_intensity = 0.8f;  // appendage intensity
  float center_jitter = 1.f;       // voxels, x/y only
  float size_jitter = 0.5f;        // voxels, per semi-axis
};

struct NoiseModel {
  enum class Kind { LowNoise, HighNoise };
  Kind kind = Kind::LowNoise;
  float gaussian_sigma = 0.f;
  float shading_amplitude = 0.f;  // slow multiplicative radial bias, high-noise only
  float streak_amplitude = 0.f;   // sparse high-intensity line artifacts
  int streak_count = 0;

  static NoiseModel ct_like() { return {Kind::LowNoise, 0.05f, 0.f, 0.f, 0}; }
  static NoiseModel cbct_like() { return {Kind::HighNoise, 0.2f, 0.3f, 0.6f, 30}; }
};

struct PhantomSample {
  Volume volume;
  Volume mask;  // target structure only
  BoxAnnotation annotation;
};

PhantomSample gen_phantom(const PhantomConfig& config, Rng& rng);

Volume apply_noise(const Volume& v, const NoiseModel& model, Rng& rng);

}  // namespace rdnet
