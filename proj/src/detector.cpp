#include "rdnet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdnet/errors.hpp"

namespace rdnet {

std::vector<Detection> decode(const BoxField& field, float threshold,
                              std::array<float, 3> spacing) {
  const auto& d = field.data.data();
  for (float v : d)
    if (!std::isfinite(v)) throw NumericalError("decode: non-finite value in box field");

  const std::int64_t cells = field.cells();
  std::vector<Detection> out;
  for (int s = 0; s < field.structures; ++s) {
    const float* p = d.data() + std::int64_t(7 * s) * cells;
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < cells; ++c)
      if (p[c] > p[best]) best = c;
    if (p[best] < threshold) continue;

    Detection det;
    det.label = s;
    det.probability = p[best];
    const int i = int(best % field.grid[0]);
    const int j = int((best / field.grid[0]) % field.grid[1]);
    const int k = int(best / (std::int64_t(field.grid[0]) * field.grid[1]));
    det.cell = {i, j, k};
    const int cell_idx[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) {
      const float t = p[(1 + a) * cells + best];
      const float sz = p[(4 + a) * cells + best];
      det.center_vox[a] = float((cell_idx[a] + 0.5) * field.rates[a] - double(t) * field.rates[a]);
      det.size_vox[a] = std::max(0.f, sz) * float(field.rates[a]);
      det.center_mm[a] = det.center_vox[a] * spacing[a];
      det.size_mm[a] = det.size_vox[a] * spacing[a];
    }
    out.push_back(det);
  }
  return out;
}

ErrorStats evaluate(const std::vector<EvalCase>& cases) {
  if (cases.empty()) throw DataError("evaluate: empty test set");
  ErrorStats st;
  std::vector<std::array<double, 3>> axis_errors;
  std::vector<double> totals;
  for (const auto& c : cases) {
    if (!c.detection) {
      ++st.failures;
      continue;
    }
    std::array<double, 3> e{};
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      e[a] = double(c.detection->center_vox[a] - c.truth.center[a]) * c.spacing[a];
      d2 += e[a] * e[a];
    }
    axis_errors.push_back(e);
    totals.push_back(std::sqrt(d2));
  }
  st.evaluated = int(totals.size());
  if (st.evaluated == 0) return st;

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    // sample (n-1) estimator; a single sample gets std 0
    const double std = v.size() > 1 ? std::sqrt(var / double(v.size() - 1)) : 0.0;
    return std::pair{mean, std};
  };

  for (int a = 0; a < 3; ++a) {
    std::vector<double> col(axis_errors.size());
    for (std::size_t i = 0; i < axis_errors.size(); ++i) col[i] = axis_errors[i][a];
    std::tie(st.mean_axis[a], st.std_axis[a]) = mean_std(col);
  }
  std::tie(st.mean_total, st.std_total) = mean_std(totals);
  return st;
}

std::string format_error_table(const ErrorStats& st) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "        Left-Right  Anterior-Posterior  Superior-Inferior  Total-Distance (mm)\n";
  if (st.evaluated > 0) {
    os << "mu      " << st.mean_axis[0] << "        " << st.mean_axis[1] << "                "
       << st.mean_axis[2] << "               " << st.mean_total << "\n";
    os << "sigma   " << st.std_axis[0] << "        " << st.std_axis[1] << "                "
       << st.std_axis[2] << "               " << st.std_total << "\n";
  }
  os << "evaluated " << st.evaluated << ", failures " << st.failures << "\n";
  return os.str();
}

}  // namespace rdnet
