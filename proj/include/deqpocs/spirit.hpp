#pragma once

#include "fixed_point.hpp"
#include "forward_model.hpp"
#include "tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace deqpocs {

// Linear prediction kernels: kernel(a, b, n, i) is the tap w_{i,n} applied to
// coil n when predicting coil i. The self centre tap w_{i,i}(c) is zero.
struct SpiritKernels
{
  ConvKernel kernel;
  double lambda = 0.0;
  int size() const { return kernel.kh(); }
  int coils() const { return kernel.cin(); }
};

// Fully sampled ACS block of a measurement (rows x cols x Nc).
ComplexTensor extract_acs(ComplexTensor const &y, SamplingMask const &mask);

/*
 * Per target coil, ridge least squares over interior ACS points:
 *   min_w sum_p |x_i(p) - sum_n (x_n * w_{i,n})(p)|^2 + lambda ||w||^2
 * with the self centre tap removed from the unknowns. lambda is
 * `lambda_rel` times the mean diagonal of the normal matrix.
 */
SpiritKernels calibrate_kernels(ComplexTensor const &acs, int ksize = 5, double lambda_rel = 1e-2);

ComplexTensor spirit_apply(SpiritKernels const &kernels, ComplexTensor const &x);

double spirit_operator_norm(SpiritKernels const &kernels, GridShape grid, int iters = 50);

// POCS x <- P_C(G x) from x0 = y with a divergence watchdog.
FixedPointResult spirit_pocs_recon(SpiritKernels const &kernels, Measurement const &meas, int max_iter = 100, double tol = 1e-5);

// SP01: "SP01" | u32 k | u32 Nc | CT01 payload (k x k x Nc*Nc)
void write_sp01(std::ostream &os, SpiritKernels const &kernels);
SpiritKernels read_sp01(std::istream &is);
void save_sp01(std::filesystem::path const &path, SpiritKernels const &kernels);
SpiritKernels load_sp01(std::filesystem::path const &path);

} // namespace deqpocs
