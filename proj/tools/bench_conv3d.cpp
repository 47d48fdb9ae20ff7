// Compares the OpenMP conv3d kernel against the serial six-loop reference on
// training-shaped problems.
#include <chrono>
#include <cstdio>
#include <vector>

#include "rdnet/kernels.hpp"
#include "rdnet/rng.hpp"

using namespace rdnet;

namespace {

double time_once(void (*fn)(const float*, const float*, const float*, float*,
                            const kernels::Conv3dDims&),
                 const std::vector<float>& in, const std::vector<float>& ker,
                 const std::vector<float>& bias, std::vector<float>& out,
                 const kernels::Conv3dDims& d) {
  const auto t0 = std::chrono::steady_clock::now();
  fn(in.data(), ker.data(), bias.data(), out.data(), d);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void bench(const kernels::Conv3dDims& d, int reps) {
  Rng rng(7);
  std::vector<float> in(std::size_t(d.cin) * d.d * d.h * d.w);
  std::vector<float> ker(std::size_t(d.cout) * d.cin * d.kd * d.kh * d.kw);
  std::vector<float> bias(std::size_t(d.cout));
  for (auto& v : in) v = float(rng.uniform(-1, 1));
  for (auto& v : ker) v = float(rng.uniform(-1, 1));
  std::vector<float> out(std::size_t(d.cout) * d.d * d.h * d.w);

  const double macs = double(d.cout) * d.cin * d.d * d.h * d.w * d.kd * d.kh * d.kw;
  double t_omp = 1e30, t_ref = 1e30;
  for (int r = 0; r < reps; ++r) {
    t_omp = std::min(t_omp, time_once(kernels::conv3d_forward<float>, in, ker, bias, out, d));
    t_ref = std::min(
        t_ref, time_once(kernels::conv3d_forward_reference<float>, in, ker, bias, out, d));
  }
  std::printf("%2dx%2d ch, %3dx%3dx%3d: omp %7.1f ms (%6.2f GMAC/s)  ref %7.1f ms (%6.2f GMAC/s)  speedup %.2fx\n",
              d.cin, d.cout, d.w, d.h, d.d, t_omp * 1e3, macs / t_omp * 1e-9, t_ref * 1e3,
              macs / t_ref * 1e-9, t_ref / t_omp);
}

}  // namespace

int main() {
  bench({1, 4, 48, 64, 64, 3, 3, 3}, 3);
  bench({4, 4, 48, 64, 64, 3, 3, 3}, 3);
  bench({8, 8, 48, 32, 32, 3, 3, 3}, 3);
  bench({16, 32, 12, 8, 8, 3, 3, 3}, 5);
  return 0;
}
