#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rdnet/io.hpp"
#include "rdnet/losses.hpp"
#include "rdnet/network.hpp"
#include "rdnet/targets.hpp"

namespace rdnet {

struct TrainSample {
  Tensor volume;  // [1, D, H, W], matching the network config
  std::vector<BoxAnnotation> boxes;
};

struct TrainResult {
  std::vector<LossReport> history;
  int steps_run = 0;
  bool early_stopped = false;
};

// End-to-end joint FEN+RDN training: per step pick the next sample (shuffled
// per epoch, seeded), forward, L_total, backward, Adam. Deterministic for a
// fixed (dataset, config, seed). A non-finite loss aborts with the last
// cadence checkpoint retained on disk.
TrainResult train(ModelParams& params, const NetworkConfig& net,
                  const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                  std::ostream* loss_log = nullptr, const std::string& checkpoint_path = "");

}  // namespace rdnet
