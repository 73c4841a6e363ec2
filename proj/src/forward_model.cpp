#include "deqpocs/forward_model.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/io.hpp"
#include "deqpocs/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace deqpocs {

std::string_view to_string(MaskKind kind)
{
  switch (kind) {
  case MaskKind::Calibrated1D: return "1d-cal";
  case MaskKind::Calibrated2D: return "2d-cal";
  case MaskKind::Free1D: return "1d-free";
  case MaskKind::Free2D: return "2d-free";
  }
  return "?";
}

MaskKind parse_mask_kind(std::string_view name)
{
  for (auto k : {MaskKind::Calibrated1D, MaskKind::Calibrated2D, MaskKind::Free1D, MaskKind::Free2D}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ConfigError("unknown mask kind '" + std::string(name) + "' (expected 1d-cal, 2d-cal, 1d-free, 2d-free)");
}

bool is_calibrated(MaskKind kind) { return kind == MaskKind::Calibrated1D || kind == MaskKind::Calibrated2D; }
bool is_1d(MaskKind kind) { return kind == MaskKind::Calibrated1D || kind == MaskKind::Free1D; }

namespace {
int round_up_even(int n) { return n + (n % 2); }
} // namespace

AcsSpec default_acs(MaskKind kind, int height, int width)
{
  switch (kind) {
  case MaskKind::Calibrated1D: {
    int const lines = static_cast<int>(std::ceil(16.0 * width / 384.0));
    return AcsSpec::lines(std::min(width, round_up_even(lines)));
  }
  case MaskKind::Calibrated2D: {
    int const r = round_up_even(static_cast<int>(std::ceil(height / 6.0)));
    int const c = round_up_even(static_cast<int>(std::ceil(width / 6.0)));
    return AcsSpec::region(std::min(height, r), std::min(width, c));
  }
  default: return {};
  }
}

SamplingMask::SamplingMask(
  int height, int width, std::vector<std::uint8_t> grid, MaskKind kind, double accel, AcsSpec acs)
  : height_(height)
  , width_(width)
  , grid_(std::move(grid))
  , kind_(kind)
  , accel_(accel)
  , acs_(acs)
{
  if (height < 1 || width < 1 || grid_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("sampling mask: grid size does not match dimensions");
  }
  for (auto &c : grid_) {
    c = c ? 1 : 0;
  }
}

std::size_t SamplingMask::count() const { return std::accumulate(grid_.begin(), grid_.end(), std::size_t{0}); }

double SamplingMask::fraction() const { return static_cast<double>(count()) / static_cast<double>(grid_.size()); }

int SamplingMask::acs_rows() const
{
  if (acs_.empty()) {
    return 0;
  }
  return is_1d(kind_) ? height_ : acs_.rows;
}

int SamplingMask::acs_cols() const { return acs_.cols; }
int SamplingMask::acs_row0() const { return is_1d(kind_) ? 0 : height_ / 2 - acs_.rows / 2; }
int SamplingMask::acs_col0() const { return width_ / 2 - acs_.cols / 2; }

namespace {

// Pick `count` distinct entries of `candidates` uniformly (partial Fisher-Yates).
std::vector<int> choose(std::vector<int> candidates, std::size_t count, Rng &rng)
{
  for (std::size_t i = 0; i < count; i++) {
    std::size_t const j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  return candidates;
}

} // namespace

SamplingMask make_mask(MaskKind kind, int height, int width, double accel, AcsSpec acs, std::uint64_t seed)
{
  if (height < 1 || width < 1) {
    throw ConfigError("mask dimensions must be positive");
  }
  if (!std::isfinite(accel) || accel < 1.0) {
    throw ConfigError("acceleration must be >= 1");
  }
  if (is_calibrated(kind)) {
    if (acs.empty()) {
      acs = default_acs(kind, height, width);
    }
    if (is_1d(kind)) {
      acs.rows = 0;
    }
    if (acs.cols < 1 || acs.cols > width || (!is_1d(kind) && (acs.rows < 1 || acs.rows > height))) {
      throw ConfigError("ACS region does not fit in the grid");
    }
  } else if (!acs.empty()) {
    throw ConfigError("calibration-free masks take no ACS region");
  }

  std::vector<std::uint8_t> grid(static_cast<std::size_t>(height) * width, 0);
  Rng rng(seed);

  if (is_1d(kind)) {
    auto const budget = static_cast<std::size_t>(std::max(1L, std::lround(width / accel)));
    int const c0 = width / 2 - acs.cols / 2;
    std::vector<int> candidates;
    std::size_t forced = 0;
    std::vector<std::uint8_t> column(width, 0);
    for (int c = 0; c < width; c++) {
      if (acs.cols > 0 && c >= c0 && c < c0 + acs.cols) {
        column[c] = 1;
        forced++;
      } else {
        candidates.push_back(c);
      }
    }
    if (forced > budget) {
      throw ConfigError("ACS lines exceed the sampling budget 1/R");
    }
    for (int c : choose(std::move(candidates), budget - forced, rng)) {
      column[c] = 1;
    }
    for (int h = 0; h < height; h++) {
      for (int w = 0; w < width; w++) {
        grid[static_cast<std::size_t>(h) * width + w] = column[w];
      }
    }
  } else {
    auto const total = static_cast<double>(height) * width;
    auto const budget = static_cast<std::size_t>(std::max(1L, std::lround(total / accel)));
    int const r0 = height / 2 - acs.rows / 2;
    int const c0 = width / 2 - acs.cols / 2;
    std::vector<int> candidates;
    std::size_t forced = 0;
    for (int h = 0; h < height; h++) {
      for (int w = 0; w < width; w++) {
        int const idx = h * width + w;
        if (!acs.empty() && h >= r0 && h < r0 + acs.rows && w >= c0 && w < c0 + acs.cols) {
          grid[idx] = 1;
          forced++;
        } else {
          candidates.push_back(idx);
        }
      }
    }
    if (forced > budget) {
      throw ConfigError("ACS region exceeds the sampling budget 1/R");
    }
    for (int idx : choose(std::move(candidates), budget - forced, rng)) {
      grid[idx] = 1;
    }
  }
  return SamplingMask(height, width, std::move(grid), kind, accel, acs);
}

namespace {
void check_grid(ComplexTensor const &x, SamplingMask const &mask, std::string_view what)
{
  if (x.grid() != mask.grid()) {
    throw ShapeError(std::string(what) + ": tensor grid does not match mask");
  }
}
} // namespace

Measurement apply_sampling(ComplexTensor const &full, SamplingMask const &mask)
{
  check_grid(full, mask, "apply_sampling");
  Measurement m{ComplexTensor(full.shape()), mask, 0.0};
  int const C = full.channels();
  for (int h = 0; h < full.height(); h++) {
    for (int w = 0; w < full.width(); w++) {
      if (mask(h, w)) {
        for (int c = 0; c < C; c++) {
          m.y(h, w, c) = full(h, w, c);
        }
      }
    }
  }
  return m;
}

Measurement add_noise(Measurement const &y, double delta_rel, std::uint64_t seed)
{
  if (!std::isfinite(delta_rel) || delta_rel < 0.0) {
    throw ConfigError("noise level must be a nonnegative number");
  }
  Measurement out = y;
  if (delta_rel == 0.0) {
    return out;
  }
  ComplexTensor noise(y.y.shape());
  Rng rng(seed);
  int const C = noise.channels();
  for (int h = 0; h < noise.height(); h++) {
    for (int w = 0; w < noise.width(); w++) {
      if (y.mask(h, w)) {
        for (int c = 0; c < C; c++) {
          double const re = rng.normal();
          noise(h, w, c) = Cx(re, rng.normal());
        }
      }
    }
  }
  double const target = delta_rel * norm(y.y);
  double const n = norm(noise);
  if (n == 0.0 || target == 0.0) {
    return out;
  }
  noise *= target / n;
  out.y += noise;
  out.delta = norm(noise);
  return out;
}

ComplexTensor project_data_consistency(ComplexTensor const &x, SamplingMask const &mask, ComplexTensor const &y)
{
  require_same_shape(x, y, "project_data_consistency");
  check_grid(x, mask, "project_data_consistency");
  ComplexTensor out = x;
  int const C = x.channels();
  for (int h = 0; h < x.height(); h++) {
    for (int w = 0; w < x.width(); w++) {
      if (mask(h, w)) {
        for (int c = 0; c < C; c++) {
          out(h, w, c) = y(h, w, c);
        }
      }
    }
  }
  return out;
}

void zero_sampled(ComplexTensor &v, SamplingMask const &mask)
{
  check_grid(v, mask, "zero_sampled");
  int const C = v.channels();
  for (int h = 0; h < v.height(); h++) {
    for (int w = 0; w < v.width(); w++) {
      if (mask(h, w)) {
        for (int c = 0; c < C; c++) {
          v(h, w, c) = Cx{};
        }
      }
    }
  }
}

void write_mk01(std::ostream &os, SamplingMask const &mask)
{
  le::put_magic(os, "MK01");
  le::put_u32(os, static_cast<std::uint32_t>(mask.height()));
  le::put_u32(os, static_cast<std::uint32_t>(mask.width()));
  for (auto c : mask.cells()) {
    os.put(static_cast<char>(c));
  }
  os.put(static_cast<char>(mask.kind()));
  le::put_f32(os, static_cast<float>(mask.accel()));
  le::put_u16(os, static_cast<std::uint16_t>(mask.acs().rows));
  le::put_u16(os, static_cast<std::uint16_t>(mask.acs().cols));
}

SamplingMask read_mk01(std::istream &is)
{
  le::expect_magic(is, "MK01");
  std::uint32_t const h = le::get_u32(is);
  std::uint32_t const w = le::get_u32(is);
  if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16)) {
    throw IoError("MK01: invalid dimensions");
  }
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w);
  if (!is.read(reinterpret_cast<char *>(grid.data()), static_cast<std::streamsize>(grid.size()))) {
    throw IoError("MK01: truncated grid");
  }
  int const kind = is.get();
  if (kind < 0 || kind > 3) {
    throw IoError("MK01: invalid mask kind");
  }
  double const accel = le::get_f32(is);
  AcsSpec acs;
  acs.rows = le::get_u16(is);
  acs.cols = le::get_u16(is);
  return SamplingMask(static_cast<int>(h), static_cast<int>(w), std::move(grid), static_cast<MaskKind>(kind), accel, acs);
}

void save_mk01(std::filesystem::path const &path, SamplingMask const &mask)
{
  std::ostringstream os;
  write_mk01(os, mask);
  write_file(path, os.str());
}

SamplingMask load_mk01(std::filesystem::path const &path)
{
  std::istringstream is(read_file(path));
  return read_mk01(is);
}

} // namespace deqpocs
