#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace deqpocs {

enum class MaskKind : std::uint8_t
{
  Calibrated1D = 0,
  Calibrated2D = 1,
  Free1D = 2,
  Free2D = 3,
};

std::string_view to_string(MaskKind kind);
MaskKind parse_mask_kind(std::string_view name); // "1d-cal", "2d-cal", "1d-free", "2d-free"
bool is_calibrated(MaskKind kind);
bool is_1d(MaskKind kind);

// Auto-calibration region: `cols` fully sampled central columns for 1-D kinds
// (rows unused, 0), a `rows` x `cols` central block for 2-D kinds. Empty for
// free kinds.
struct AcsSpec
{
  int rows = 0;
  int cols = 0;
  static AcsSpec lines(int n) { return {0, n}; }
  static AcsSpec region(int r, int c) { return {r, c}; }
  bool empty() const { return rows == 0 && cols == 0; }
  bool operator==(AcsSpec const &) const = default;
};

// ACS scaled from the 16-line / 64x64 reference at 384x384.
AcsSpec default_acs(MaskKind kind, int height, int width);

/*
 * Sampling set Omega shared by every coil. 1-D kinds select whole columns
 * (the readout runs along rows and is fully sampled).
 */
class SamplingMask
{
public:
  SamplingMask() = default;
  SamplingMask(int height, int width, std::vector<std::uint8_t> grid, MaskKind kind, double accel, AcsSpec acs);

  int height() const { return height_; }
  int width() const { return width_; }
  GridShape grid() const { return {height_, width_}; }
  MaskKind kind() const { return kind_; }
  double accel() const { return accel_; }
  AcsSpec acs() const { return acs_; }

  bool operator()(int h, int w) const { return grid_[static_cast<std::size_t>(h) * width_ + w] != 0; }
  std::span<std::uint8_t const> cells() const { return grid_; }
  std::size_t count() const;
  double fraction() const;

  // Bounds of the ACS block [row0, row0 + rows) x [col0, col0 + cols).
  int acs_row0() const;
  int acs_col0() const;
  int acs_rows() const;
  int acs_cols() const;

  bool operator==(SamplingMask const &) const = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> grid_;
  MaskKind kind_ = MaskKind::Free2D;
  double accel_ = 1.0;
  AcsSpec acs_{};
};

SamplingMask make_mask(MaskKind kind, int height, int width, double accel, AcsSpec acs, std::uint64_t seed);

struct Measurement
{
  ComplexTensor y; // zero off Omega
  SamplingMask mask;
  double delta = 0.0; // Frobenius norm of the injected noise
};

Measurement apply_sampling(ComplexTensor const &full, SamplingMask const &mask);

// Complex Gaussian noise on Omega, rescaled to Frobenius norm delta_rel * ||y||.
Measurement add_noise(Measurement const &y, double delta_rel, std::uint64_t seed);

// P_C(x) = (I - M) x + y: measured values on Omega, x elsewhere.
ComplexTensor project_data_consistency(ComplexTensor const &x, SamplingMask const &mask, ComplexTensor const &y);

// (I - M) v in place: zero the sampled locations.
void zero_sampled(ComplexTensor &v, SamplingMask const &mask);

/*
 * MK01 container:
 *   "MK01" | u32 H | u32 W | H*W bytes (0/1) | u8 kind | f32 R | u16 acs.rows | u16 acs.cols
 * For 1-D kinds acs.rows is 0 and acs.cols carries the line count.
 */
void write_mk01(std::ostream &os, SamplingMask const &mask);
SamplingMask read_mk01(std::istream &is);
void save_mk01(std::filesystem::path const &path, SamplingMask const &mask);
SamplingMask load_mk01(std::filesystem::path const &path);

} // namespace deqpocs
