#pragma once

#include "tensor.hpp"

#include <cstdint>

namespace deqpocs {

/*
 * Zero-padded "same" complex convolution (cross-correlation convention):
 *
 *   y(h, w, o) = sum_{a, b, i} k(a, b, i, o) * x(h + a - kh/2, w + b - kw/2, i)
 *
 * with x taken as zero outside the grid. The OpenMP kernels parallelise over
 * output rows; every output is accumulated by a single thread in a fixed
 * order, so results do not depend on the thread count.
 */
ComplexTensor conv2d_complex(ComplexTensor const &x, ConvKernel const &k);

// Adjoint of conv2d_complex(., k) on inputs of grid `grid`.
ComplexTensor conv2d_adjoint(ComplexTensor const &y, ConvKernel const &k);

// Gradient of Re<ybar, conv2d_complex(x, k)> with respect to the taps of k,
// i.e. kbar(a, b, i, o) = sum_p conj(x(p + d(a, b), i)) * ybar(p, o).
ConvKernel conv2d_kernel_grad(ComplexTensor const &x, ComplexTensor const &ybar, int kh, int kw);

// Serial reference implementations, kept for testing the parallel kernels.
namespace reference {
ComplexTensor conv2d_complex(ComplexTensor const &x, ConvKernel const &k);
ComplexTensor conv2d_adjoint(ComplexTensor const &y, ConvKernel const &k);
ConvKernel conv2d_kernel_grad(ComplexTensor const &x, ComplexTensor const &ybar, int kh, int kw);
} // namespace reference

/*
 * Power iteration on k^H k for the operator conv2d_complex(., k) acting on
 * `grid`-sized inputs. The estimate ||A v|| with v the current unit vector is
 * nondecreasing in the number of iterations.
 */
class PowerIteration
{
public:
  PowerIteration() = default;
  PowerIteration(ConvKernel const &k, GridShape grid, std::uint64_t seed);

  // Runs `iters` warm-started iterations against k, returns the estimate.
  double run(ConvKernel const &k, int iters);
  ComplexTensor const &vector() const { return v_; }
  bool initialised() const { return !v_.empty(); }

private:
  ComplexTensor v_;
};

double spectral_norm_power_iter(ConvKernel const &k, GridShape grid, int iters = 50, std::uint64_t seed = 0);

} // namespace deqpocs
