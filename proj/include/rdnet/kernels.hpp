#pragma once

#include <algorithm>
#include <cstdint>

// Compute kernels for the conv3d operator: an OpenMP-parallel axpy-structured
// implementation plus a naive serial reference kept as the test oracle and
// benchmark baseline. All kernels implement same-padded, stride-1
// cross-correlation on [C, D, H, W] row-major buffers.
namespace rdnet::kernels {

struct Conv3dDims {
  int cin, cout;
  int d, h, w;     // spatial extents, preserved by same padding
  int kd, kh, kw;  // odd kernel extents
};

// out[co] = bias[co] + sum_ci cross_correlate(in[ci], ker[co][ci])
// Parallel over output channels; each cell is written by exactly one thread,
// so results are identical for any thread count.
template <typename S>
void conv3d_forward(const S* in, const S* ker, const S* bias, S* out, const Conv3dDims& c) {
  const int pd = c.kd / 2, ph = c.kh / 2, pw = c.kw / 2;
  const std::int64_t plane = std::int64_t(c.d) * c.h * c.w;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < c.cout; ++co) {
    S* o = out + co * plane;
    std::fill(o, o + plane, bias ? bias[co] : S(0));
    for (int ci = 0; ci < c.cin; ++ci) {
      const S* ib = in + ci * plane;
      for (int kz = 0; kz < c.kd; ++kz) {
        const int dz = kz - pd;
        for (int ky = 0; ky < c.kh; ++ky) {
          const int dy = ky - ph;
          for (int kx = 0; kx < c.kw; ++kx) {
            const int dx = kx - pw;
            const S wv = ker[(((std::int64_t(co) * c.cin + ci) * c.kd + kz) * c.kh + ky) * c.kw + kx];
            const int z0 = std::max(0, -dz), z1 = std::min(c.d, c.d - dz);
            const int y0 = std::max(0, -dy), y1 = std::min(c.h, c.h - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(c.w, c.w - dx);
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                S* orow = o + (std::int64_t(z) * c.h + y) * c.w;
                const S* irow = ib + (std::int64_t(z + dz) * c.h + (y + dy)) * c.w + dx;
                for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
              }
            }
          }
        }
      }
    }
  }
}

// Naive six-nested-loop reference, serial, double accumulation per cell.
template <typename S>
void conv3d_forward_reference(const S* in, const S* ker, const S* bias, S* out,
                              const Conv3dDims& c) {
  const int pd = c.kd / 2, ph = c.kh / 2, pw = c.kw / 2;
  const std::int64_t plane = std::int64_t(c.d) * c.h * c.w;
  for (int co = 0; co < c.cout; ++co) {
    for (int z = 0; z < c.d; ++z) {
      for (int y = 0; y < c.h; ++y) {
        for (int x = 0; x < c.w; ++x) {
          double acc = bias ? double(bias[co]) : 0.0;
          for (int ci = 0; ci < c.cin; ++ci) {
            for (int kz = 0; kz < c.kd; ++kz) {
              for (int ky = 0; ky < c.kh; ++ky) {
                for (int kx = 0; kx < c.kw; ++kx) {
                  const int iz = z + kz - pd, iy = y + ky - ph, ix = x + kx - pw;
                  if (iz < 0 || iz >= c.d || iy < 0 || iy >= c.h || ix < 0 || ix >= c.w) continue;
                  acc += double(ker[(((std::int64_t(co) * c.cin + ci) * c.kd + kz) * c.kh + ky) * c.kw + kx]) *
                         double(in[ci * plane + (std::int64_t(iz) * c.h + iy) * c.w + ix]);
                }
              }
            }
          }
          out[co * plane + (std::int64_t(z) * c.h + y) * c.w + x] = S(acc);
        }
      }
    }
  }
}

// gin[ci][q] += sum_co sum_o ker[co][ci][o] * gout[co][q - o + pad]
// Gather form, parallel over input channels.
template <typename S>
void conv3d_backward_input(const S* gout, const S* ker, S* gin, const Conv3dDims& c) {
  const int pd = c.kd / 2, ph = c.kh / 2, pw = c.kw / 2;
  const std::int64_t plane = std::int64_t(c.d) * c.h * c.w;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < c.cin; ++ci) {
    S* gi = gin + ci * plane;
    for (int co = 0; co < c.cout; ++co) {
      const S* go = gout + co * plane;
      for (int kz = 0; kz < c.kd; ++kz) {
        const int dz = pd - kz;  // flipped offset
        for (int ky = 0; ky < c.kh; ++ky) {
          const int dy = ph - ky;
          for (int kx = 0; kx < c.kw; ++kx) {
            const int dx = pw - kx;
            const S wv = ker[(((std::int64_t(co) * c.cin + ci) * c.kd + kz) * c.kh + ky) * c.kw + kx];
            const int z0 = std::max(0, -dz), z1 = std::min(c.d, c.d - dz);
            const int y0 = std::max(0, -dy), y1 = std::min(c.h, c.h - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(c.w, c.w - dx);
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                S* grow = gi + (std::int64_t(z) * c.h + y) * c.w;
                const S* gorow = go + (std::int64_t(z + dz) * c.h + (y + dy)) * c.w + dx;
                for (int x = x0; x < x1; ++x) grow[x] += wv * gorow[x];
              }
            }
          }
        }
      }
    }
  }
}

// gker[co][ci][o] += sum_p gout[co][p] * in[ci][p + o - pad]
// Parallel over output channels; 64-bit accumulation per weight.
template <typename S>
void conv3d_backward_weight(const S* gout, const S* in, S* gker, const Conv3dDims& c) {
  const int pd = c.kd / 2, ph = c.kh / 2, pw = c.kw / 2;
  const std::int64_t plane = std::int64_t(c.d) * c.h * c.w;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < c.cout; ++co) {
    const S* go = gout + co * plane;
    for (int ci = 0; ci < c.cin; ++ci) {
      const S* ib = in + ci * plane;
      for (int kz = 0; kz < c.kd; ++kz) {
        const int dz = kz - pd;
        for (int ky = 0; ky < c.kh; ++ky) {
          const int dy = ky - ph;
          for (int kx = 0; kx < c.kw; ++kx) {
            const int dx = kx - pw;
            const int z0 = std::max(0, -dz), z1 = std::min(c.d, c.d - dz);
            const int y0 = std::max(0, -dy), y1 = std::min(c.h, c.h - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(c.w, c.w - dx);
            double acc = 0.0;
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                const S* gorow = go + (std::int64_t(z) * c.h + y) * c.w;
                const S* irow = ib + (std::int64_t(z + dz) * c.h + (y + dy)) * c.w + dx;
                double racc = 0.0;
                for (int x = x0; x < x1; ++x) racc += double(gorow[x]) * double(irow[x]);
                acc += racc;
              }
            }
            gker[(((std::int64_t(co) * c.cin + ci) * c.kd + kz) * c.kh + ky) * c.kw + kx] += S(acc);
          }
        }
      }
    }
  }
}

template <typename S>
void conv3d_backward_bias(const S* gout, S* gbias, const Conv3dDims& c) {
  const std::int64_t plane = std::int64_t(c.d) * c.h * c.w;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < c.cout; ++co) {
    const S* go = gout + co * plane;
    double acc = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) acc += double(go[i]);
    gbias[co] += S(acc);
  }
}

}  // namespace rdnet::kernels
