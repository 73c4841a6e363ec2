#include "deqpocs/conv.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/rng.hpp"

#include <algorithm>
#include <cmath>

namespace deqpocs {

namespace {

void check_input(ComplexTensor const &x, ConvKernel const &k)
{
  if (k.cin() != x.channels()) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(k.cin()) + " input channels, tensor has " +
                     std::to_string(x.channels()));
  }
}

void check_output(ComplexTensor const &y, ConvKernel const &k)
{
  if (k.cout() != y.channels()) {
    throw ShapeError("conv2d adjoint: kernel produces " + std::to_string(k.cout()) + " channels, tensor has " +
                     std::to_string(y.channels()));
  }
}

} // namespace

ComplexTensor conv2d_complex(ComplexTensor const &x, ConvKernel const &k)
{
  check_input(x, k);
  int const H = x.height();
  int const W = x.width();
  int const Ci = k.cin();
  int const Co = k.cout();
  int const kh = k.kh();
  int const kw = k.kw();
  int const ph = kh / 2;
  int const pw = kw / 2;

  ComplexTensor y(H, W, Co);
  double const *X = x.real_data();
  double const *K = k.real_data();
  double *Y = y.real_data();

#pragma omp parallel for schedule(static)
  for (int h = 0; h < H; h++) {
    double *yrow = Y + static_cast<std::size_t>(h) * W * Co * 2;
    for (int a = 0; a < kh; a++) {
      int const hs = h + a - ph;
      if (hs < 0 || hs >= H) {
        continue;
      }
      for (int b = 0; b < kw; b++) {
        int const dw = b - pw;
        int const w0 = std::max(0, -dw);
        int const w1 = std::min(W, W - dw);
        double const *kab = K + static_cast<std::size_t>(a * kw + b) * Ci * Co * 2;
        for (int w = w0; w < w1; w++) {
          double const *xp = X + (static_cast<std::size_t>(hs) * W + w + dw) * Ci * 2;
          double *yp = yrow + static_cast<std::size_t>(w) * Co * 2;
          for (int i = 0; i < Ci; i++) {
            double const xr = xp[2 * i];
            double const xi = xp[2 * i + 1];
            double const *kp = kab + static_cast<std::size_t>(i) * Co * 2;
            for (int o = 0; o < Co; o++) {
              double const kr = kp[2 * o];
              double const ki = kp[2 * o + 1];
              yp[2 * o] += xr * kr - xi * ki;
              yp[2 * o + 1] += xr * ki + xi * kr;
            }
          }
        }
      }
    }
  }
  return y;
}

ComplexTensor conv2d_adjoint(ComplexTensor const &y, ConvKernel const &k)
{
  check_output(y, k);
  int const H = y.height();
  int const W = y.width();
  int const Ci = k.cin();
  int const Co = k.cout();
  int const kh = k.kh();
  int const kw = k.kw();
  int const ph = kh / 2;
  int const pw = kw / 2;

  ComplexTensor x(H, W, Ci);
  double const *Yb = y.real_data();
  double const *K = k.real_data();
  double *X = x.real_data();

#pragma omp parallel for schedule(static)
  for (int qh = 0; qh < H; qh++) {
    for (int a = 0; a < kh; a++) {
      int const h = qh - (a - ph);
      if (h < 0 || h >= H) {
        continue;
      }
      for (int b = 0; b < kw; b++) {
        int const dw = b - pw;
        int const q0 = std::max(0, dw);
        int const q1 = std::min(W, W + dw);
        double const *kab = K + static_cast<std::size_t>(a * kw + b) * Ci * Co * 2;
        for (int qw = q0; qw < q1; qw++) {
          double const *yp = Yb + (static_cast<std::size_t>(h) * W + qw - dw) * Co * 2;
          double *xp = X + (static_cast<std::size_t>(qh) * W + qw) * Ci * 2;
          for (int i = 0; i < Ci; i++) {
            double const *kp = kab + static_cast<std::size_t>(i) * Co * 2;
            double sr = 0.0;
            double si = 0.0;
            for (int o = 0; o < Co; o++) {
              double const kr = kp[2 * o];
              double const ki = kp[2 * o + 1];
              double const yr = yp[2 * o];
              double const yi = yp[2 * o + 1];
              sr += kr * yr + ki * yi;
              si += kr * yi - ki * yr;
            }
            xp[2 * i] += sr;
            xp[2 * i + 1] += si;
          }
        }
      }
    }
  }
  return x;
}

ConvKernel conv2d_kernel_grad(ComplexTensor const &x, ComplexTensor const &ybar, int kh, int kw)
{
  if (x.grid() != ybar.grid()) {
    throw ShapeError("conv2d_kernel_grad: input and cotangent grids differ");
  }
  int const H = x.height();
  int const W = x.width();
  int const Ci = x.channels();
  int const Co = ybar.channels();
  int const ph = kh / 2;
  int const pw = kw / 2;

  ConvKernel g(kh, kw, Ci, Co);
  double const *X = x.real_data();
  double const *Yb = ybar.real_data();
  double *G = reinterpret_cast<double *>(g.taps().data());

#pragma omp parallel for schedule(static)
  for (int tap = 0; tap < kh * kw; tap++) {
    int const a = tap / kw;
    int const b = tap % kw;
    int const dh = a - ph;
    int const dw = b - pw;
    int const h0 = std::max(0, -dh);
    int const h1 = std::min(H, H - dh);
    int const w0 = std::max(0, -dw);
    int const w1 = std::min(W, W - dw);
    double *gt = G + static_cast<std::size_t>(tap) * Ci * Co * 2;
    for (int h = h0; h < h1; h++) {
      for (int w = w0; w < w1; w++) {
        double const *xp = X + (static_cast<std::size_t>(h + dh) * W + w + dw) * Ci * 2;
        double const *yp = Yb + (static_cast<std::size_t>(h) * W + w) * Co * 2;
        for (int i = 0; i < Ci; i++) {
          double const xr = xp[2 * i];
          double const xi = xp[2 * i + 1];
          double *gp = gt + static_cast<std::size_t>(i) * Co * 2;
          for (int o = 0; o < Co; o++) {
            double const yr = yp[2 * o];
            double const yi = yp[2 * o + 1];
            gp[2 * o] += xr * yr + xi * yi;
            gp[2 * o + 1] += xr * yi - xi * yr;
          }
        }
      }
    }
  }
  return g;
}

namespace reference {

ComplexTensor conv2d_complex(ComplexTensor const &x, ConvKernel const &k)
{
  check_input(x, k);
  int const H = x.height();
  int const W = x.width();
  ComplexTensor y(H, W, k.cout());
  for (int h = 0; h < H; h++) {
    for (int w = 0; w < W; w++) {
      for (int o = 0; o < k.cout(); o++) {
        Cx acc{};
        for (int a = 0; a < k.kh(); a++) {
          for (int b = 0; b < k.kw(); b++) {
            int const hs = h + a - k.kh() / 2;
            int const ws = w + b - k.kw() / 2;
            if (hs < 0 || hs >= H || ws < 0 || ws >= W) {
              continue;
            }
            for (int i = 0; i < k.cin(); i++) {
              acc += k(a, b, i, o) * x(hs, ws, i);
            }
          }
        }
        y(h, w, o) = acc;
      }
    }
  }
  return y;
}

ComplexTensor conv2d_adjoint(ComplexTensor const &y, ConvKernel const &k)
{
  check_output(y, k);
  int const H = y.height();
  int const W = y.width();
  ComplexTensor x(H, W, k.cin());
  for (int h = 0; h < H; h++) {
    for (int w = 0; w < W; w++) {
      for (int a = 0; a < k.kh(); a++) {
        for (int b = 0; b < k.kw(); b++) {
          int const hs = h + a - k.kh() / 2;
          int const ws = w + b - k.kw() / 2;
          if (hs < 0 || hs >= H || ws < 0 || ws >= W) {
            continue;
          }
          for (int i = 0; i < k.cin(); i++) {
            for (int o = 0; o < k.cout(); o++) {
              x(hs, ws, i) += std::conj(k(a, b, i, o)) * y(h, w, o);
            }
          }
        }
      }
    }
  }
  return x;
}

ConvKernel conv2d_kernel_grad(ComplexTensor const &x, ComplexTensor const &ybar, int kh, int kw)
{
  int const H = x.height();
  int const W = x.width();
  ConvKernel g(kh, kw, x.channels(), ybar.channels());
  for (int h = 0; h < H; h++) {
    for (int w = 0; w < W; w++) {
      for (int a = 0; a < kh; a++) {
        for (int b = 0; b < kw; b++) {
          int const hs = h + a - kh / 2;
          int const ws = w + b - kw / 2;
          if (hs < 0 || hs >= H || ws < 0 || ws >= W) {
            continue;
          }
          for (int i = 0; i < x.channels(); i++) {
            for (int o = 0; o < ybar.channels(); o++) {
              g(a, b, i, o) += std::conj(x(hs, ws, i)) * ybar(h, w, o);
            }
          }
        }
      }
    }
  }
  return g;
}

} // namespace reference

PowerIteration::PowerIteration(ConvKernel const &k, GridShape grid, std::uint64_t seed)
  : v_(grid.height, grid.width, k.cin())
{
  Rng rng(seed);
  for (auto &v : v_.data()) {
    double const re = rng.normal();
    v = Cx(re, rng.normal());
  }
  v_ *= 1.0 / norm(v_);
}

double PowerIteration::run(ConvKernel const &k, int iters)
{
  if (v_.empty()) {
    throw ConfigError("power iteration used before initialisation");
  }
  if (iters < 1) {
    throw ConfigError("power iteration needs at least one iteration");
  }
  for (int it = 0; it < iters; it++) {
    ComplexTensor w = conv2d_adjoint(conv2d_complex(v_, k), k);
    double const n = norm(w);
    if (n == 0.0) {
      return 0.0;
    }
    w *= 1.0 / n;
    v_ = std::move(w);
  }
  return norm(conv2d_complex(v_, k));
}

double spectral_norm_power_iter(ConvKernel const &k, GridShape grid, int iters, std::uint64_t seed)
{
  if (grid.height < 1 || grid.width < 1) {
    throw ShapeError("spectral_norm_power_iter: invalid grid");
  }
  PowerIteration p(k, grid, seed);
  return p.run(k, iters);
}

} // namespace deqpocs
