#pragma once

#include <array>
#include <string>
#include <vector>

#include "rdnet/detector.hpp"
#include "rdnet/network.hpp"
#include "rdnet/phantom.hpp"
#include "rdnet/targets.hpp"
#include "rdnet/volume.hpp"

namespace rdnet {

struct TrainConfig {
  double learning_rate = 1e-4;
  int max_steps = 2000;
  int batch_size = 1;  // fixed at 1
  std::uint64_t seed = 0;
  int checkpoint_every = 500;
  int patience = 200;       // steps without improvement before early stop; 0 disables
  double min_delta = 1e-4;  // improvement threshold on L_total
};

struct AugmentConfig {
  int count = 25;
  float sigma = 10.f;
};

struct EvalConfig {
  float threshold = 0.1f;
};

struct NoiseConfig {
  float low_sigma = 0.05f;
  float high_sigma = 0.2f;
  float high_shading = 0.3f;
  float high_streak_amplitude = 0.6f;
  int high_streak_count = 30;

  NoiseModel low() const { return {NoiseModel::Kind::LowNoise, low_sigma, 0.f, 0.f, 0}; }
  NoiseModel high() const {
    return {NoiseModel::Kind::HighNoise, high_sigma, high_shading, high_streak_amplitude,
            high_streak_count};
  }
};

// Whole-pipeline settings, parsed fail-closed: unknown keys are rejected.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  AugmentConfig augment;
  PhantomConfig phantom;
  NoiseConfig noise;
  EvalConfig evaluate;
};

namespace io {

// Versioned text header followed by raw little-endian float32 voxels,
// x fastest. Round-trips bitwise.
Volume read_volume(const std::string& path);
void write_volume(const std::string& path, const Volume& v);

// One box per line: label cx cy cz w l h (voxel units); '#' comments.
std::vector<BoxAnnotation> read_annotations(const std::string& path);
void write_annotations(const std::string& path, const std::vector<BoxAnnotation>& boxes);

// One 'vox' and one 'mm' record per detection.
void write_detections(const std::string& path, const std::vector<Detection>& dets);
std::vector<Detection> read_detections(const std::string& path);

struct CropResult {
  Volume volume;
  std::array<int, 3> shift;  // new_coord = old_coord + shift
};

// Center crop when larger, symmetric zero-pad when smaller.
CropResult crop_or_pad(const Volume& v, std::array<int, 3> target_dims);
std::vector<BoxAnnotation> shift_annotations(std::vector<BoxAnnotation> boxes,
                                             std::array<int, 3> shift);

void save_checkpoint(const std::string& path, const NetworkConfig& config,
                     const ModelParams& params);
struct Checkpoint {
  NetworkConfig config;
  ModelParams params;
};
Checkpoint load_checkpoint(const std::string& path);

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

}  // namespace io
}  // namespace rdnet
