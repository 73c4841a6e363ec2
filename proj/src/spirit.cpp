#include "deqpocs/spirit.hpp"

#include "deqpocs/conv.hpp"
#include "deqpocs/errors.hpp"
#include "deqpocs/io.hpp"

#include <Eigen/Dense>

#include <sstream>

namespace deqpocs {

ComplexTensor extract_acs(ComplexTensor const &y, SamplingMask const &mask)
{
  if (y.grid() != mask.grid()) {
    throw ShapeError("extract_acs: measurement and mask grids differ");
  }
  int const rows = mask.acs_rows();
  int const cols = mask.acs_cols();
  if (!is_calibrated(mask.kind()) || rows < 1 || cols < 1) {
    throw ConfigError("extract_acs: mask carries no calibration region");
  }
  int const r0 = mask.acs_row0();
  int const c0 = mask.acs_col0();
  ComplexTensor acs(rows, cols, y.channels());
  for (int h = 0; h < rows; h++) {
    for (int w = 0; w < cols; w++) {
      for (int c = 0; c < y.channels(); c++) {
        acs(h, w, c) = y(r0 + h, c0 + w, c);
      }
    }
  }
  return acs;
}

SpiritKernels calibrate_kernels(ComplexTensor const &acs, int ksize, double lambda_rel)
{
  if (ksize < 1 || ksize % 2 == 0) {
    throw ConfigError("SPIRiT kernel size must be odd and positive");
  }
  if (acs.height() < ksize || acs.width() < ksize) {
    throw ConfigError("ACS region " + std::to_string(acs.height()) + "x" + std::to_string(acs.width()) +
                      " is smaller than the " + std::to_string(ksize) + "x" + std::to_string(ksize) + " kernel");
  }
  if (!(lambda_rel >= 0.0)) {
    throw ConfigError("SPIRiT ridge must be >= 0");
  }
  require_finite(acs, "ACS data");

  int const nc = acs.channels();
  int const half = ksize / 2;
  int const nvar = ksize * ksize * nc;
  int const rows = (acs.height() - 2 * half) * (acs.width() - 2 * half);

  // Design matrix: one row per interior point, columns ordered (a, b, n).
  Eigen::MatrixXcd A(rows, nvar);
  Eigen::MatrixXcd targets(rows, nc);
  int r = 0;
  for (int h = half; h < acs.height() - half; h++) {
    for (int w = half; w < acs.width() - half; w++) {
      for (int a = 0; a < ksize; a++) {
        for (int b = 0; b < ksize; b++) {
          for (int n = 0; n < nc; n++) {
            A(r, (a * ksize + b) * nc + n) = acs(h + a - half, w + b - half, n);
          }
        }
      }
      for (int i = 0; i < nc; i++) {
        targets(r, i) = acs(h, w, i);
      }
      r++;
    }
  }
  Eigen::MatrixXcd const gram = A.adjoint() * A;
  Eigen::MatrixXcd const rhs = A.adjoint() * targets;
  double const mean_diag = gram.diagonal().real().mean();
  double const lambda = mean_diag > 0.0 ? lambda_rel * mean_diag : lambda_rel;

  SpiritKernels out;
  out.kernel = ConvKernel(ksize, ksize, nc, nc);
  out.lambda = lambda;
  int const centre = (half * ksize + half) * nc;
  for (int i = 0; i < nc; i++) {
    int const skip = centre + i;
    std::vector<int> keep;
    keep.reserve(nvar - 1);
    for (int j = 0; j < nvar; j++) {
      if (j != skip) {
        keep.push_back(j);
      }
    }
    int const m = static_cast<int>(keep.size());
    Eigen::MatrixXcd N(m, m);
    Eigen::VectorXcd b(m);
    for (int p = 0; p < m; p++) {
      for (int q = 0; q < m; q++) {
        N(p, q) = gram(keep[p], keep[q]);
      }
      N(p, p) += lambda;
      b(p) = rhs(keep[p], i);
    }
    Eigen::VectorXcd const x = lambda > 0.0 ? Eigen::VectorXcd(N.ldlt().solve(b))
                                            : Eigen::VectorXcd(N.completeOrthogonalDecomposition().solve(b));
    for (int p = 0; p < m; p++) {
      int const j = keep[p];
      int const n = j % nc;
      int const ab = j / nc;
      out.kernel(ab / ksize, ab % ksize, n, i) = x(p);
    }
  }
  return out;
}

ComplexTensor spirit_apply(SpiritKernels const &kernels, ComplexTensor const &x)
{
  return conv2d_complex(x, kernels.kernel);
}

double spirit_operator_norm(SpiritKernels const &kernels, GridShape grid, int iters)
{
  return spectral_norm_power_iter(kernels.kernel, grid, iters, 0);
}

FixedPointResult spirit_pocs_recon(SpiritKernels const &kernels, Measurement const &meas, int max_iter, double tol)
{
  if (meas.y.channels() != kernels.coils()) {
    throw ShapeError("SPIRiT kernels and measurement disagree on coil count");
  }
  SolverSettings settings = SolverSettings::picard(tol, max_iter);
  settings.divergence_window = 10;
  SamplingMask const &mask = meas.mask;
  ComplexTensor const &y = meas.y;
  Operator const T = [&](ComplexTensor const &x) { return project_data_consistency(spirit_apply(kernels, x), mask, y); };
  return picard_solve(T, y, settings);
}

void write_sp01(std::ostream &os, SpiritKernels const &kernels)
{
  le::put_magic(os, "SP01");
  le::put_u32(os, static_cast<std::uint32_t>(kernels.size()));
  le::put_u32(os, static_cast<std::uint32_t>(kernels.coils()));
  write_kernel_ct01(os, kernels.kernel);
}

SpiritKernels read_sp01(std::istream &is)
{
  le::expect_magic(is, "SP01");
  std::uint32_t const k = le::get_u32(is);
  std::uint32_t const nc = le::get_u32(is);
  if (k == 0 || k % 2 == 0 || k > 255 || nc == 0 || nc > 1024) {
    throw IoError("SP01: invalid kernel header");
  }
  SpiritKernels out;
  out.kernel = read_kernel_ct01(is, static_cast<int>(nc), static_cast<int>(nc));
  if (out.kernel.kh() != static_cast<int>(k) || out.kernel.kw() != static_cast<int>(k)) {
    throw IoError("SP01: kernel payload does not match header");
  }
  return out;
}

void save_sp01(std::filesystem::path const &path, SpiritKernels const &kernels)
{
  std::ostringstream os;
  write_sp01(os, kernels);
  write_file(path, os.str());
}

SpiritKernels load_sp01(std::filesystem::path const &path)
{
  std::istringstream is(read_file(path));
  return read_sp01(is);
}

} // namespace deqpocs
