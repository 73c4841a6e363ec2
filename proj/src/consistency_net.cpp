#include "deqpocs/consistency_net.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/fft.hpp"
#include "deqpocs/io.hpp"
#include "deqpocs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace deqpocs {

std::string_view to_string(Variant v) { return v == Variant::Hybrid ? "hybrid" : "kspace"; }

Variant parse_variant(std::string_view name)
{
  if (name == "kspace") {
    return Variant::KSpace;
  }
  if (name == "hybrid") {
    return Variant::Hybrid;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected kspace or hybrid)");
}

namespace {

std::array<int, kLayers + 1> widths(int coils, int features) { return {coils, features, features, features, features, coils}; }

template <typename F>
void for_each_branch(ConsistencyNetParams &params, F &&f)
{
  for (auto &blk : params.blocks) {
    f(blk.kspace);
    if (params.hybrid()) {
      f(blk.image);
    }
  }
}

template <typename F>
void for_each_branch(ConsistencyNetParams const &params, F &&f)
{
  for (auto const &blk : params.blocks) {
    f(blk.kspace);
    if (params.hybrid()) {
      f(blk.image);
    }
  }
}

std::size_t branch_reals(ConsistencyNetParams const &params)
{
  auto const w = widths(params.coils, params.features);
  std::size_t n = 0;
  for (int l = 0; l < kLayers; l++) {
    n += static_cast<std::size_t>(params.ksize) * params.ksize * w[l] * w[l + 1];
  }
  return 2 * n;
}

std::size_t block_reals(ConsistencyNetParams const &params)
{
  return params.hybrid() ? 2 * branch_reals(params) + 3 : branch_reals(params) + 1;
}

ConvKernel random_kernel(int k, int cin, int cout, double stddev, Rng &rng)
{
  ConvKernel kern(k, k, cin, cout);
  for (auto &t : kern.taps()) {
    double const re = stddev * rng.normal();
    t = Cx(re, stddev * rng.normal());
  }
  return kern;
}

void leaky_relu(ComplexTensor &x)
{
  double *p = x.real_data();
  std::size_t const n = 2 * x.size();
  for (std::size_t i = 0; i < n; i++) {
    p[i] = p[i] > 0.0 ? p[i] : kLeakySlope * p[i];
  }
}

// g *= leaky_relu'(pre), component-wise on (re, im)
void leaky_relu_backward(ComplexTensor &g, ComplexTensor const &pre)
{
  double *pg = g.real_data();
  double const *pz = pre.real_data();
  std::size_t const n = 2 * g.size();
  for (std::size_t i = 0; i < n; i++) {
    if (!(pz[i] > 0.0)) {
      pg[i] *= kLeakySlope;
    }
  }
}

ComplexTensor branch_forward(Branch const &br, double alpha, ComplexTensor const &a, BranchTape *tape)
{
  ComplexTensor h = a;
  for (int l = 0; l < kLayers; l++) {
    ComplexTensor z = conv2d_complex(h, br.kernels[l]);
    if (tape) {
      tape->inputs[l] = std::move(h);
    }
    if (l < kLayers - 1) {
      if (tape) {
        tape->pre[l] = z;
      }
      leaky_relu(z);
    }
    h = std::move(z);
  }
  ComplexTensor out = (kResidualCap - alpha) * a;
  axpy(alpha, h, out);
  if (tape) {
    tape->out = std::move(h);
  }
  return out;
}

// Returns the input cotangent; accumulates kernel and alpha gradients.
ComplexTensor branch_backward(
  Branch const &br,
  double alpha,
  BranchTape const &tape,
  ComplexTensor const &gout,
  bool want_params,
  double *kernel_grads,
  double &alpha_grad)
{
  ComplexTensor const &a = tape.inputs[0];
  if (want_params) {
    alpha_grad += real_inner(gout, tape.out) - real_inner(gout, a);
  }
  ComplexTensor ga = (kResidualCap - alpha) * gout;
  ComplexTensor gb = alpha * gout;

  std::array<std::size_t, kLayers> offsets{};
  std::size_t off = 0;
  for (int l = 0; l < kLayers; l++) {
    offsets[l] = off;
    off += 2 * br.kernels[l].size();
  }

  for (int l = kLayers - 1; l >= 0; l--) {
    ConvKernel const &k = br.kernels[l];
    if (want_params) {
      ConvKernel const kg = conv2d_kernel_grad(tape.inputs[l], gb, k.kh(), k.kw());
      double const *src = kg.real_data();
      std::copy(src, src + 2 * kg.size(), kernel_grads + offsets[l]);
    }
    ComplexTensor gh = conv2d_adjoint(gb, k);
    if (l == 0) {
      ga += gh;
    } else {
      leaky_relu_backward(gh, tape.pre[l - 1]);
      gb = std::move(gh);
    }
  }
  return ga;
}

ComplexTensor run_forward(ConsistencyNetParams const &params, ComplexTensor const &x, Tape *tape)
{
  if (x.channels() != params.coils) {
    throw ShapeError("consistency net expects " + std::to_string(params.coils) + " coils, input has " +
                     std::to_string(x.channels()));
  }
  if (tape) {
    tape->blocks.assign(params.blocks.size(), {});
  }
  ComplexTensor a = x;
  for (std::size_t bi = 0; bi < params.blocks.size(); bi++) {
    Block const &blk = params.blocks[bi];
    BlockTape *bt = tape ? &tape->blocks[bi] : nullptr;
    ComplexTensor out_k = branch_forward(blk.kspace, blk.alpha, a, bt ? &bt->kspace : nullptr);
    ComplexTensor out;
    if (params.hybrid() && (blk.ci != 0.0 || bt)) {
      ComplexTensor out_img = fft2_centered(branch_forward(blk.image, blk.alpha, ifft2_centered(a), bt ? &bt->image : nullptr));
      out = blk.ck * out_k;
      axpy(blk.ci, out_img, out);
      if (bt) {
        bt->out_img = std::move(out_img);
      }
    } else if (params.hybrid()) {
      out = blk.ck * out_k;
    } else {
      out = std::move(out_k);
    }
    if (bt) {
      bt->input = std::move(a);
      if (params.hybrid()) {
        bt->out_k = std::move(out_k);
      }
    }
    a = std::move(out);
  }
  if (tape) {
    tape->output = a;
  }
  return a;
}

double branch_bound(Branch const &br, double alpha)
{
  double prod = 1.0;
  for (double s : br.sigma) {
    prod *= s;
  }
  return (kResidualCap - alpha) + alpha * prod;
}

void project_mixing(Block &blk, bool hybrid)
{
  blk.alpha = std::clamp(blk.alpha, 0.0, kResidualCap);
  if (!hybrid) {
    blk.ck = 1.0;
    blk.ci = 0.0;
    return;
  }
  // Euclidean projection of (ck, ci) onto {ck + ci = 1, ck, ci >= 0}
  double const shift = (1.0 - blk.ck - blk.ci) / 2.0;
  double ck = blk.ck + shift;
  double ci = blk.ci + shift;
  if (ck < 0.0) {
    ck = 0.0;
    ci = 1.0;
  } else if (ci < 0.0) {
    ck = 1.0;
    ci = 0.0;
  }
  blk.ck = ck;
  blk.ci = ci;
}

} // namespace

std::size_t ConsistencyNetParams::tap_count() const
{
  std::size_t n = 0;
  for_each_branch(*this, [&](Branch const &br) {
    for (auto const &k : br.kernels) {
      n += k.size();
    }
  });
  return n;
}

std::size_t ConsistencyNetParams::real_param_count() const { return blocks.size() * block_reals(*this); }

ConsistencyNetParams init_params(Variant variant, int blocks, int features, int coils, std::uint64_t seed, GridShape grid)
{
  if (blocks < 1 || features < 1 || coils < 1) {
    throw ConfigError("init_params: blocks, features and coils must be >= 1");
  }
  if (grid.height < 1 || grid.width < 1) {
    throw ConfigError("init_params: invalid certification grid");
  }
  constexpr double kInitStd = 0.05;
  ConsistencyNetParams p;
  p.variant = variant;
  p.features = features;
  p.coils = coils;
  p.cert_grid = grid;
  auto const w = widths(coils, features);
  Rng rng(seed);
  p.blocks.resize(blocks);
  for (auto &blk : p.blocks) {
    for (int l = 0; l < kLayers; l++) {
      blk.kspace.kernels[l] = random_kernel(p.ksize, w[l], w[l + 1], kInitStd, rng);
    }
    if (p.hybrid()) {
      for (int l = 0; l < kLayers; l++) {
        blk.image.kernels[l] = random_kernel(p.ksize, w[l], w[l + 1], kInitStd, rng);
      }
      blk.ck = 0.5;
      blk.ci = 0.5;
    }
    blk.alpha = 0.5;
  }
  recertify(p, grid, 50);
  normalize_in_place(p);
  return p;
}

ComplexTensor forward(ConsistencyNetParams const &params, ComplexTensor const &x) { return run_forward(params, x, nullptr); }

Tape forward_tape(ConsistencyNetParams const &params, ComplexTensor const &x)
{
  Tape tape;
  run_forward(params, x, &tape);
  return tape;
}

NetGradient backward(ConsistencyNetParams const &params, Tape const &tape, ComplexTensor const &cotangent, bool want_params)
{
  if (tape.blocks.size() != params.blocks.size()) {
    throw ShapeError("backward: tape does not match parameters");
  }
  require_same_shape(cotangent, tape.output, "vjp cotangent");
  NetGradient grad;
  if (want_params) {
    grad.params.assign(params.real_param_count(), 0.0);
  }
  std::size_t const per_block = block_reals(params);
  std::size_t const per_branch = branch_reals(params);
  double scratch_alpha = 0.0;

  ComplexTensor g = cotangent;
  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    Block const &blk = params.blocks[bi];
    BlockTape const &bt = tape.blocks[bi];
    double *base = want_params ? grad.params.data() + bi * per_block : nullptr;
    double &alpha_grad = want_params ? base[params.hybrid() ? 2 * per_branch : per_branch] : scratch_alpha;

    if (!params.hybrid()) {
      g = branch_backward(blk.kspace, blk.alpha, bt.kspace, g, want_params, base, alpha_grad);
      continue;
    }
    if (want_params) {
      base[2 * per_branch + 1] = real_inner(g, bt.out_k);
      base[2 * per_branch + 2] = real_inner(g, bt.out_img);
    }
    ComplexTensor const g_img = ifft2_centered(blk.ci * g);
    ComplexTensor ga = branch_backward(blk.kspace, blk.alpha, bt.kspace, blk.ck * g, want_params, base, alpha_grad);
    ComplexTensor const ga_img = branch_backward(
      blk.image, blk.alpha, bt.image, g_img, want_params, base ? base + per_branch : nullptr, alpha_grad);
    ga += fft2_centered(ga_img);
    g = std::move(ga);
  }
  grad.x = std::move(g);
  return grad;
}

NetGradient vjp(ConsistencyNetParams const &params, ComplexTensor const &x, ComplexTensor const &cotangent)
{
  return backward(params, forward_tape(params, x), cotangent, true);
}

LipschitzCertificate certified_lipschitz(ConsistencyNetParams const &params)
{
  LipschitzCertificate cert;
  double L = 1.0;
  for (auto const &blk : params.blocks) {
    double bound = blk.ck * branch_bound(blk.kspace, blk.alpha);
    cert.kernel_bounds.insert(cert.kernel_bounds.end(), blk.kspace.sigma.begin(), blk.kspace.sigma.end());
    if (params.hybrid()) {
      bound += blk.ci * branch_bound(blk.image, blk.alpha);
      cert.kernel_bounds.insert(cert.kernel_bounds.end(), blk.image.sigma.begin(), blk.image.sigma.end());
    }
    L *= bound;
  }
  cert.L = L;
  return cert;
}

void normalize_in_place(ConsistencyNetParams &params, int iters)
{
  for_each_branch(params, [&](Branch &br) {
    for (int l = 0; l < kLayers; l++) {
      ConvKernel &k = br.kernels[l];
      if (!br.power[l].initialised()) {
        br.power[l] = PowerIteration(k, params.cert_grid, 0);
      }
      double sigma = br.power[l].run(k, iters);
      double const scale = sigma * (1.0 + kNormSlack);
      if (scale > 1.0) {
        k *= 1.0 / scale;
        sigma /= scale;
      }
      br.sigma[l] = sigma;
    }
  });
  for (auto &blk : params.blocks) {
    project_mixing(blk, params.hybrid());
  }
}

ConsistencyNetParams normalize_params(ConsistencyNetParams params)
{
  normalize_in_place(params);
  return params;
}

void recertify(ConsistencyNetParams &params, GridShape grid, int iters)
{
  params.cert_grid = grid;
  for_each_branch(params, [&](Branch &br) {
    for (int l = 0; l < kLayers; l++) {
      br.power[l] = PowerIteration(br.kernels[l], grid, 0);
      br.sigma[l] = br.power[l].run(br.kernels[l], iters);
    }
  });
}

std::vector<double> flatten(ConsistencyNetParams const &params)
{
  std::vector<double> out;
  out.reserve(params.real_param_count());
  auto push_branch = [&](Branch const &br) {
    for (auto const &k : br.kernels) {
      out.insert(out.end(), k.real_data(), k.real_data() + 2 * k.size());
    }
  };
  for (auto const &blk : params.blocks) {
    push_branch(blk.kspace);
    if (params.hybrid()) {
      push_branch(blk.image);
    }
    out.push_back(blk.alpha);
    if (params.hybrid()) {
      out.push_back(blk.ck);
      out.push_back(blk.ci);
    }
  }
  return out;
}

void unflatten(ConsistencyNetParams &params, std::span<double const> values)
{
  if (values.size() != params.real_param_count()) {
    throw ShapeError("unflatten: parameter vector has the wrong length");
  }
  std::size_t pos = 0;
  auto pull_branch = [&](Branch &br) {
    for (auto &k : br.kernels) {
      auto *dst = reinterpret_cast<double *>(k.taps().data());
      std::copy(values.begin() + pos, values.begin() + pos + 2 * k.size(), dst);
      pos += 2 * k.size();
    }
  };
  for (auto &blk : params.blocks) {
    pull_branch(blk.kspace);
    if (params.hybrid()) {
      pull_branch(blk.image);
    }
    blk.alpha = values[pos++];
    if (params.hybrid()) {
      blk.ck = values[pos++];
      blk.ci = values[pos++];
    }
  }
}

void write_ck01(std::ostream &os, ConsistencyNetParams const &params)
{
  le::put_magic(os, "CK01");
  os.put(static_cast<char>(params.variant));
  le::put_u32(os, static_cast<std::uint32_t>(params.blocks.size()));
  le::put_u32(os, static_cast<std::uint32_t>(params.features));
  le::put_u32(os, static_cast<std::uint32_t>(params.coils));
  for_each_branch(params, [&](Branch const &br) {
    for (auto const &k : br.kernels) {
      write_kernel_ct01(os, k);
    }
  });
  for (auto const &blk : params.blocks) {
    le::put_f32(os, static_cast<float>(blk.alpha));
    le::put_f32(os, static_cast<float>(blk.ck));
    le::put_f32(os, static_cast<float>(blk.ci));
  }
  le::put_f32(os, static_cast<float>(certified_lipschitz(params).L));
}

void save_checkpoint(std::filesystem::path const &path, ConsistencyNetParams const &params)
{
  std::ostringstream os;
  write_ck01(os, params);
  write_file(path, os.str());
}

LoadedCheckpoint read_ck01(std::istream &is, GridShape grid)
{
  le::expect_magic(is, "CK01");
  int const variant = is.get();
  if (variant != 0 && variant != 1) {
    throw IoError("CK01: invalid variant byte");
  }
  std::uint32_t const B = le::get_u32(is);
  std::uint32_t const F = le::get_u32(is);
  std::uint32_t const Nc = le::get_u32(is);
  if (B == 0 || F == 0 || Nc == 0 || B > 4096 || F > 4096 || Nc > 4096) {
    throw IoError("CK01: invalid network dimensions");
  }
  LoadedCheckpoint out;
  ConsistencyNetParams &p = out.params;
  p.variant = static_cast<Variant>(variant);
  p.features = static_cast<int>(F);
  p.coils = static_cast<int>(Nc);
  p.blocks.resize(B);
  auto const w = widths(p.coils, p.features);
  for_each_branch(p, [&](Branch &br) {
    for (int l = 0; l < kLayers; l++) {
      br.kernels[l] = read_kernel_ct01(is, w[l], w[l + 1]);
    }
  });
  p.ksize = p.blocks.front().kspace.kernels.front().kh();
  for (auto &blk : p.blocks) {
    blk.alpha = le::get_f32(is);
    blk.ck = le::get_f32(is);
    blk.ci = le::get_f32(is);
    project_mixing(blk, p.hybrid());
  }
  out.stored_L = le::get_f32(is);

  recertify(p, grid);
  auto const cert = certified_lipschitz(p);
  out.recomputed_L = cert.L;
  double const worst = *std::max_element(cert.kernel_bounds.begin(), cert.kernel_bounds.end());
  if (!(out.stored_L < 1.0) || !(cert.L <= kResidualCap + 1e-9) || !(worst <= 1.0 + 1e-6)) {
    std::ostringstream msg;
    msg << "checkpoint certificate invalid: stored L = " << out.stored_L << ", recomputed L = " << cert.L
        << ", largest kernel norm = " << worst << " (need L <= 0.99 and every kernel norm <= 1)";
    throw ConfigError(msg.str());
  }
  return out;
}

LoadedCheckpoint load_checkpoint(std::filesystem::path const &path, GridShape grid)
{
  std::istringstream is(read_file(path));
  return read_ck01(is, grid);
}

} // namespace deqpocs
