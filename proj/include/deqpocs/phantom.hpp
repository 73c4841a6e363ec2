#pragma once

#include "forward_model.hpp"
#include "tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deqpocs {

// Ellipse in normalised coordinates [-1, 1]^2, rotated by `angle` radians.
struct Ellipse
{
  double cx = 0.0;
  double cy = 0.0;
  double a = 0.5; // semi-axis along x before rotation
  double b = 0.5;
  double angle = 0.0;
  double intensity = 1.0;
};

std::vector<Ellipse> random_ellipses(std::uint64_t seed);
RealImage render_phantom(int height, int width, std::span<Ellipse const> ellipses);
RealImage generate_phantom(int height, int width, std::uint64_t seed);

// Smooth complex coil sensitivities with pixelwise sum_c |s_c|^2 = 1.
struct CoilMaps
{
  ComplexTensor maps;
};

CoilMaps generate_coil_maps(int height, int width, int coils, std::uint64_t seed);

struct Sample
{
  ComplexTensor full; // fft2_centered(phantom * maps)
  RealImage reference;
  std::uint64_t phantom_seed = 0;
  std::uint64_t coil_seed = 0;
};

Sample make_sample(int height, int width, int coils, std::uint64_t phantom_seed, std::uint64_t coil_seed);

struct MaskSpec
{
  MaskKind kind = MaskKind::Calibrated1D;
  double accel = 4.0;
  std::optional<AcsSpec> acs; // default_acs() when unset
};

struct DatasetSpec
{
  int count = 8;
  int height = 32;
  int width = 32;
  int coils = 4;
  MaskSpec mask;
  double noise = 0.0; // relative noise level delta_rel
  std::uint64_t seed = 0;
};

struct DatasetEntry
{
  Sample sample;
  Measurement meas;
  std::uint64_t mask_seed = 0;
  std::uint64_t noise_seed = 0;
};

std::vector<DatasetEntry> make_dataset(DatasetSpec const &spec);

/*
 * Directory layout: sample_%04d_full.ct01, sample_%04d_meas.ct01,
 * sample_%04d_mask.mk01 and a key=value `manifest.txt` listing the spec and
 * the per-sample seeds.
 */
void save_dataset(std::filesystem::path const &dir, DatasetSpec const &spec, std::span<DatasetEntry const> entries);

struct LoadedDataset
{
  DatasetSpec spec;
  std::vector<DatasetEntry> entries;
};

LoadedDataset load_dataset(std::filesystem::path const &dir);

std::string sample_stem(int index);

} // namespace deqpocs
