#pragma once

#include "conv.hpp"
#include "tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace deqpocs {

enum class Variant : std::uint8_t
{
  KSpace = 0,
  Hybrid = 1,
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

inline constexpr int kLayers = 5;
inline constexpr double kResidualCap = 0.99; // block output (0.99 - alpha) a + alpha b
inline constexpr double kLeakySlope = 0.2;
inline constexpr double kNormSlack = 1e-3;   // kernels scaled to sigma * (1 + slack) <= 1

/*
 * Five-layer residual CNN branch, widths Nc -> F -> F -> F -> F -> Nc,
 * leaky-ReLU between layers, last layer linear. `sigma` holds the certified
 * per-kernel operator-norm bound from the latest normalisation.
 */
struct Branch
{
  std::array<ConvKernel, kLayers> kernels;
  std::array<double, kLayers> sigma{};
  std::array<PowerIteration, kLayers> power;
};

struct Block
{
  Branch kspace;
  Branch image; // hybrid only, runs on ifft2_centered(input)
  double alpha = 0.5;
  double ck = 1.0;
  double ci = 0.0;
};

struct ConsistencyNetParams
{
  Variant variant = Variant::KSpace;
  int features = 0;
  int coils = 0;
  int ksize = 3;
  GridShape cert_grid{}; // grid on which kernel norms are certified
  std::vector<Block> blocks;

  bool hybrid() const { return variant == Variant::Hybrid; }
  std::size_t tap_count() const;          // complex kernel taps
  std::size_t real_param_count() const;   // length of flatten()
};

struct LipschitzCertificate
{
  double L = 0.0;
  std::vector<double> kernel_bounds; // block-major, k-space branch then image branch
  std::string_view method = "power-iteration";
  double slack = 1.0 + kNormSlack;
};

ConsistencyNetParams init_params(
  Variant variant, int blocks, int features, int coils, std::uint64_t seed, GridShape grid = {32, 32});

ComplexTensor forward(ConsistencyNetParams const &params, ComplexTensor const &x);

// Activations retained by forward_tape for reverse-mode products.
struct BranchTape
{
  std::array<ComplexTensor, kLayers> inputs; // input of each conv layer
  std::array<ComplexTensor, kLayers - 1> pre; // pre-activations of layers 1..4
  ComplexTensor out;                           // last conv output b
};

struct BlockTape
{
  ComplexTensor input;
  BranchTape kspace;
  BranchTape image;
  ComplexTensor out_k;
  ComplexTensor out_img; // k-space domain
};

struct Tape
{
  std::vector<BlockTape> blocks;
  ComplexTensor output;
};

Tape forward_tape(ConsistencyNetParams const &params, ComplexTensor const &x);

// Gradients in the real-pair convention: a complex entry carries
// (d/d re, d/d im). `params` is laid out like flatten().
struct NetGradient
{
  std::vector<double> params;
  ComplexTensor x;
};

NetGradient backward(
  ConsistencyNetParams const &params, Tape const &tape, ComplexTensor const &cotangent, bool want_params = true);
NetGradient vjp(ConsistencyNetParams const &params, ComplexTensor const &x, ComplexTensor const &cotangent);

LipschitzCertificate certified_lipschitz(ConsistencyNetParams const &params);

// Rescale each kernel by 1 / max(1, sigma (1 + slack)) using `iters`
// warm-started power iterations, clamp alpha to [0, 0.99] and project
// (ck, ci) onto the simplex.
void normalize_in_place(ConsistencyNetParams &params, int iters = 5);
ConsistencyNetParams normalize_params(ConsistencyNetParams params);

// Recompute every kernel bound from a fresh power iteration (seed 0) on
// `grid` without rescaling anything.
void recertify(ConsistencyNetParams &params, GridShape grid, int iters = 50);

// Real parameterisation: per block the k-space kernels, the image kernels
// (hybrid), alpha, then ck and ci (hybrid). Complex taps as (re, im).
std::vector<double> flatten(ConsistencyNetParams const &params);
void unflatten(ConsistencyNetParams &params, std::span<double const> values);

/*
 * CK01 checkpoint:
 *   "CK01" | u8 variant | u32 B | u32 F | u32 Nc
 *   | kernels in block/layer order (k-space branch, then image branch for
 *     hybrid), each a CT01 payload
 *   | per block f32 alpha, f32 ck, f32 ci
 *   | f32 L
 */
void write_ck01(std::ostream &os, ConsistencyNetParams const &params);
void save_checkpoint(std::filesystem::path const &path, ConsistencyNetParams const &params);

struct LoadedCheckpoint
{
  ConsistencyNetParams params;
  double stored_L = 0.0;
  double recomputed_L = 0.0;
};

// Reads a checkpoint and recertifies it on `grid`. Throws ConfigError when
// the stored or recomputed certificate is not a contraction.
LoadedCheckpoint read_ck01(std::istream &is, GridShape grid);
LoadedCheckpoint load_checkpoint(std::filesystem::path const &path, GridShape grid);

} // namespace deqpocs
