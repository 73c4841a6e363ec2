#include "deqpocs/phantom.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/fft.hpp"
#include "deqpocs/io.hpp"
#include "deqpocs/metrics.hpp"
#include "deqpocs/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace deqpocs {

std::vector<Ellipse> random_ellipses(std::uint64_t seed)
{
  Rng rng(seed);
  int const count = 6 + static_cast<int>(rng.below(5));
  std::vector<Ellipse> out;
  out.reserve(count);
  // outer "skull" first, then interior structures
  Ellipse outer;
  outer.cx = rng.uniform(-0.1, 0.1);
  outer.cy = rng.uniform(-0.1, 0.1);
  outer.a = rng.uniform(0.6, 0.85);
  outer.b = rng.uniform(0.6, 0.85);
  outer.angle = rng.uniform(0.0, std::numbers::pi);
  outer.intensity = rng.uniform(0.5, 1.0);
  out.push_back(outer);
  for (int i = 1; i < count; i++) {
    Ellipse e;
    e.cx = rng.uniform(-0.45, 0.45);
    e.cy = rng.uniform(-0.45, 0.45);
    e.a = rng.uniform(0.05, 0.35);
    e.b = rng.uniform(0.05, 0.35);
    e.angle = rng.uniform(0.0, std::numbers::pi);
    e.intensity = rng.uniform(0.0, 1.0);
    out.push_back(e);
  }
  return out;
}

RealImage render_phantom(int height, int width, std::span<Ellipse const> ellipses)
{
  if (height < 8 || width < 8) {
    throw ConfigError("phantom grid must be at least 8x8");
  }
  RealImage img(height, width);
  for (int h = 0; h < height; h++) {
    double const y = (2.0 * h + 1.0) / height - 1.0;
    for (int w = 0; w < width; w++) {
      double const x = (2.0 * w + 1.0) / width - 1.0;
      double v = 0.0;
      for (auto const &e : ellipses) {
        double const dx = x - e.cx;
        double const dy = y - e.cy;
        double const c = std::cos(e.angle);
        double const s = std::sin(e.angle);
        double const u = (dx * c + dy * s) / e.a;
        double const t = (-dx * s + dy * c) / e.b;
        if (u * u + t * t <= 1.0) {
          v += e.intensity;
        }
      }
      img(h, w) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

RealImage generate_phantom(int height, int width, std::uint64_t seed)
{
  auto const ellipses = random_ellipses(seed);
  return render_phantom(height, width, ellipses);
}

CoilMaps generate_coil_maps(int height, int width, int coils, std::uint64_t seed)
{
  if (coils < 1) {
    throw ConfigError("coil count must be >= 1");
  }
  if (height < 1 || width < 1) {
    throw ConfigError("coil map grid must be non-empty");
  }
  constexpr double kRadius = 1.3;
  constexpr double kWidth = 0.9;
  Rng rng(seed);
  struct Profile
  {
    double px, py;
    Cx p0, p1, p2;
  };
  std::vector<Profile> prof(coils);
  for (int c = 0; c < coils; c++) {
    double const theta = 2.0 * std::numbers::pi * c / coils;
    Profile &p = prof[c];
    p.px = kRadius * std::cos(theta);
    p.py = kRadius * std::sin(theta);
    p.p0 = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
    // |p1| + |p2| <= 0.6 keeps the polynomial away from zero on [-1, 1]^2
    p.p1 = std::polar(rng.uniform(0.0, 0.3), rng.uniform(0.0, 2.0 * std::numbers::pi));
    p.p2 = std::polar(rng.uniform(0.0, 0.3), rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  CoilMaps out{ComplexTensor(height, width, coils)};
  for (int h = 0; h < height; h++) {
    double const y = (2.0 * h + 1.0) / height - 1.0;
    for (int w = 0; w < width; w++) {
      double const x = (2.0 * w + 1.0) / width - 1.0;
      double total = 0.0;
      for (int c = 0; c < coils; c++) {
        Profile const &p = prof[c];
        double const d2 = (x - p.px) * (x - p.px) + (y - p.py) * (y - p.py);
        Cx const s = std::exp(-d2 / (2.0 * kWidth * kWidth)) * p.p0 * (1.0 + p.p1 * x + p.p2 * y);
        out.maps(h, w, c) = s;
        total += std::norm(s);
      }
      double const inv = 1.0 / std::sqrt(total);
      for (int c = 0; c < coils; c++) {
        out.maps(h, w, c) *= inv;
      }
    }
  }
  return out;
}

Sample make_sample(int height, int width, int coils, std::uint64_t phantom_seed, std::uint64_t coil_seed)
{
  RealImage const phantom = generate_phantom(height, width, phantom_seed);
  CoilMaps const maps = generate_coil_maps(height, width, coils, coil_seed);
  ComplexTensor images(height, width, coils);
  for (int h = 0; h < height; h++) {
    for (int w = 0; w < width; w++) {
      for (int c = 0; c < coils; c++) {
        images(h, w, c) = phantom(h, w) * maps.maps(h, w, c);
      }
    }
  }
  Sample s;
  s.reference = ssos(images);
  s.full = fft2_centered(images);
  s.phantom_seed = phantom_seed;
  s.coil_seed = coil_seed;
  return s;
}

namespace {

AcsSpec acs_for(MaskSpec const &m) { return m.acs.value_or(AcsSpec{}); }

} // namespace

std::vector<DatasetEntry> make_dataset(DatasetSpec const &spec)
{
  if (spec.count < 1) {
    throw ConfigError("dataset count must be >= 1");
  }
  if (!(spec.noise >= 0.0)) {
    throw ConfigError("noise level must be >= 0");
  }
  std::vector<DatasetEntry> out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; i++) {
    std::uint64_t const base = 4 * static_cast<std::uint64_t>(i);
    DatasetEntry e;
    e.sample = make_sample(
      spec.height, spec.width, spec.coils, derive_seed(spec.seed, base), derive_seed(spec.seed, base + 1));
    e.mask_seed = derive_seed(spec.seed, base + 2);
    e.noise_seed = derive_seed(spec.seed, base + 3);
    SamplingMask const mask =
      make_mask(spec.mask.kind, spec.height, spec.width, spec.mask.accel, acs_for(spec.mask), e.mask_seed);
    e.meas = apply_sampling(e.sample.full, mask);
    if (spec.noise > 0.0) {
      e.meas = add_noise(e.meas, spec.noise, e.noise_seed);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string sample_stem(int index) { return fmt::format("sample_{:04d}", index); }

void save_dataset(std::filesystem::path const &dir, DatasetSpec const &spec, std::span<DatasetEntry const> entries)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
  }
  AcsSpec const acs = entries.empty() ? acs_for(spec.mask) : entries.front().meas.mask.acs();
  std::string manifest;
  manifest += "format=deqpocs-dataset\n";
  manifest += fmt::format("count={}\n", entries.size());
  manifest += fmt::format("height={}\nwidth={}\ncoils={}\n", spec.height, spec.width, spec.coils);
  manifest += fmt::format("mask={}\naccel={:.17g}\n", to_string(spec.mask.kind), spec.mask.accel);
  manifest += fmt::format("acs_rows={}\nacs_cols={}\n", acs.rows, acs.cols);
  manifest += fmt::format("noise={:.17g}\nseed={}\n", spec.noise, spec.seed);
  manifest += "prng=xoshiro256** (splitmix64 seeding)\n";
  for (std::size_t i = 0; i < entries.size(); i++) {
    DatasetEntry const &e = entries[i];
    std::string const stem = sample_stem(static_cast<int>(i));
    save_ct01(dir / (stem + "_full.ct01"), e.sample.full);
    save_ct01(dir / (stem + "_meas.ct01"), e.meas.y);
    save_mk01(dir / (stem + "_mask.mk01"), e.meas.mask);
    manifest += fmt::format(
      "{}.phantom_seed={}\n{}.coil_seed={}\n{}.mask_seed={}\n{}.noise_seed={}\n{}.delta={:.17g}\n",
      stem, e.sample.phantom_seed, stem, e.sample.coil_seed, stem, e.mask_seed, stem, e.noise_seed, stem, e.meas.delta);
  }
  write_file(dir / "manifest.txt", manifest);
}

LoadedDataset load_dataset(std::filesystem::path const &dir)
{
  std::map<std::string, std::string> kv;
  {
    std::istringstream is(read_file(dir / "manifest.txt"));
    std::string line;
    while (std::getline(is, line)) {
      auto const eq = line.find('=');
      if (eq != std::string::npos) {
        kv[line.substr(0, eq)] = line.substr(eq + 1);
      }
    }
  }
  auto get = [&](std::string const &key) -> std::string const & {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw IoError("dataset manifest " + (dir / "manifest.txt").string() + " lacks key '" + key + "'");
    }
    return it->second;
  };
  auto get_u64 = [&](std::string const &key) { return std::stoull(get(key)); };

  LoadedDataset out;
  DatasetSpec &spec = out.spec;
  try {
    spec.count = std::stoi(get("count"));
    spec.height = std::stoi(get("height"));
    spec.width = std::stoi(get("width"));
    spec.coils = std::stoi(get("coils"));
    spec.mask.kind = parse_mask_kind(get("mask"));
    spec.mask.accel = std::stod(get("accel"));
    spec.mask.acs = AcsSpec{std::stoi(get("acs_rows")), std::stoi(get("acs_cols"))};
    spec.noise = std::stod(get("noise"));
    spec.seed = get_u64("seed");
  } catch (std::logic_error const &e) {
    throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }

  for (int i = 0; i < spec.count; i++) {
    std::string const stem = sample_stem(i);
    DatasetEntry e;
    e.sample.full = load_ct01(dir / (stem + "_full.ct01"));
    e.sample.reference = ssos_image(e.sample.full);
    e.meas.y = load_ct01(dir / (stem + "_meas.ct01"));
    e.meas.mask = load_mk01(dir / (stem + "_mask.mk01"));
    if (e.meas.y.shape() != e.sample.full.shape() || e.meas.y.grid() != e.meas.mask.grid()) {
      throw IoError("dataset sample " + stem + " has inconsistent shapes");
    }
    try {
      e.sample.phantom_seed = get_u64(stem + ".phantom_seed");
      e.sample.coil_seed = get_u64(stem + ".coil_seed");
      e.mask_seed = get_u64(stem + ".mask_seed");
      e.noise_seed = get_u64(stem + ".noise_seed");
      e.meas.delta = std::stod(get(stem + ".delta"));
    } catch (std::logic_error const &e2) {
      throw IoError("malformed dataset manifest entry for " + stem + ": " + e2.what());
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

} // namespace deqpocs
