#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rdnet/network.hpp"
#include "rdnet/targets.hpp"

namespace rdnet {

struct Detection {
  int label = 0;
  float probability = 0.f;
  std::array<float, 3> center_vox{}, center_mm{};
  std::array<float, 3> size_vox{}, size_mm{};
  std::array<int, 3> cell{};  // winning grid cell (i,j,k)
};

// One detection per structure: argmax of the p channel (first cell in scan
// order on exact ties), dropped when below `threshold`. The center decodes as
// cell_center - t*r; negative predicted sizes clamp to 0.
std::vector<Detection> decode(const BoxField& field, float threshold = 0.1f,
                              std::array<float, 3> spacing = {1.f, 1.f, 1.f});

struct ErrorStats {
  std::array<double, 3> mean_axis{}, std_axis{};  // signed mm errors: LR, AP, SI
  double mean_total = 0.0, std_total = 0.0;
  int failures = 0;   // volumes with no detection, excluded from the averages
  int evaluated = 0;  // volumes contributing distances
};

struct EvalCase {
  std::optional<Detection> detection;
  BoxAnnotation truth;
  std::array<float, 3> spacing{1.f, 1.f, 1.f};
};

// Signed per-axis center errors (predicted - truth, mm) with sample (n-1)
// standard deviations, plus Euclidean distance statistics.
ErrorStats evaluate(const std::vector<EvalCase>& cases);

// Table with (mu, sigma) rows and LR / AP / SI / Total columns.
std::string format_error_table(const ErrorStats& stats);

}  // namespace rdnet
