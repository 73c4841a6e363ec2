#include "oracles.hpp"

#include "deqpocs/consistency_net.hpp"
#include "deqpocs/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace deqpocs;

namespace {

void zero_alpha(ConsistencyNetParams &p)
{
  for (auto &b : p.blocks) {
    b.alpha = 0.0;
  }
}

std::vector<double> random_direction(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> d(n);
  for (auto &v : d) {
    v = rng.normal();
  }
  // unit length so the step stays well inside one leaky-relu linear region
  double len = 0.0;
  for (double v : d) {
    len += v * v;
  }
  for (auto &v : d) {
    v /= std::sqrt(len);
  }
  return d;
}

ConsistencyNetParams shifted(ConsistencyNetParams p, std::vector<double> const &dir, double h)
{
  std::vector<double> v = flatten(p);
  for (std::size_t i = 0; i < v.size(); i++) {
    v[i] += h * dir[i];
  }
  unflatten(p, v);
  return p;
}

double dot(std::vector<double> const &a, std::vector<double> const &b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) {
    s += a[i] * b[i];
  }
  return s;
}

} // namespace

TEST_CASE("parameter count follows the layer widths")
{
  auto const p = init_params(Variant::KSpace, 10, 32, 4, 1, {8, 8});
  std::size_t const per_block = 9 * (4 * 32 + 32 * 32 * 3 + 32 * 4);
  CHECK(p.tap_count() == 10 * per_block);
  CHECK(p.real_param_count() == 10 * (2 * per_block + 1));
  auto const h = init_params(Variant::Hybrid, 2, 4, 2, 1, {8, 8});
  CHECK(h.tap_count() == 2 * 2 * 9 * (2 * 4 + 4 * 4 * 3 + 4 * 2));
  CHECK(h.real_param_count() == 2 * (2 * h.tap_count() / 2 + 3));
  CHECK_THROWS_AS(init_params(Variant::KSpace, 0, 4, 2, 1), ConfigError);
}

TEST_CASE("initialisation is deterministic and certified")
{
  auto const a = init_params(Variant::KSpace, 3, 8, 2, 42, {16, 16});
  auto const b = init_params(Variant::KSpace, 3, 8, 2, 42, {16, 16});
  CHECK(flatten(a) == flatten(b));
  auto const c = init_params(Variant::KSpace, 3, 8, 2, 43, {16, 16});
  CHECK(flatten(a) != flatten(c));
  for (auto variant : {Variant::KSpace, Variant::Hybrid}) {
    for (int f : {4, 16, 32}) {
      auto const p = init_params(variant, 2, f, 4, 7, {16, 16});
      auto const cert = certified_lipschitz(p);
      CHECK(cert.L <= 0.99);
      for (double s : cert.kernel_bounds) {
        CHECK(s <= 1.0 + 1e-6);
      }
      for (auto const &blk : p.blocks) {
        CHECK(blk.alpha == 0.5);
      }
    }
  }
}

TEST_CASE("alpha = 0 reduces the network to a scaling")
{
  auto p = init_params(Variant::KSpace, 3, 4, 2, 1, {8, 8});
  zero_alpha(p);
  ComplexTensor const x = oracle::random_tensor(8, 8, 2, 2);
  CHECK(oracle::rel_err(forward(p, x), std::pow(0.99, 3) * x) < 1e-14);

  auto const cert1 = certified_lipschitz([] {
    auto q = init_params(Variant::KSpace, 1, 4, 2, 1, {8, 8});
    zero_alpha(q);
    return q;
  }());
  CHECK(cert1.L == doctest::Approx(0.99).epsilon(1e-15));
  auto q2 = init_params(Variant::KSpace, 2, 4, 2, 1, {8, 8});
  zero_alpha(q2);
  CHECK(certified_lipschitz(q2).L == doctest::Approx(0.9801).epsilon(1e-15));
}

TEST_CASE("zero input gives zero output")
{
  auto const p = init_params(Variant::Hybrid, 2, 4, 2, 1, {8, 8});
  CHECK(norm(forward(p, ComplexTensor(8, 8, 2))) == 0.0);
  CHECK_THROWS_AS(forward(p, ComplexTensor(8, 8, 3)), ShapeError);
}

TEST_CASE("network differences stay within 0.99 on random pairs")
{
  for (auto variant : {Variant::KSpace, Variant::Hybrid}) {
    auto const p = init_params(variant, 2, 8, 2, 5, {16, 16});
    for (int t = 0; t < 100; t++) {
      ComplexTensor const a = oracle::random_tensor(16, 16, 2, 100 + 2 * t);
      ComplexTensor const b = oracle::random_tensor(16, 16, 2, 101 + 2 * t, 0.1 + 0.02 * t);
      CHECK(distance(forward(p, a), forward(p, b)) <= 0.99 * distance(a, b));
    }
  }
}

TEST_CASE("empirical Lipschitz ratio never exceeds the certificate")
{
  // scale kernels up so the certificate is not trivially loose
  auto p = init_params(Variant::KSpace, 3, 4, 2, 9, {8, 8});
  for (auto &blk : p.blocks) {
    blk.alpha = 0.9;
    for (auto &k : blk.kspace.kernels) {
      k *= 50.0;
    }
  }
  normalize_in_place(p, 50);
  double const L = certified_lipschitz(p).L;
  CHECK(L <= 0.99);
  double worst = 0.0;
  for (int t = 0; t < 1000; t++) {
    ComplexTensor const a = oracle::random_tensor(8, 8, 2, 5000 + 2 * t);
    ComplexTensor b = a;
    b += oracle::random_tensor(8, 8, 2, 5001 + 2 * t, t % 2 ? 1e-3 : 1.0);
    worst = std::max(worst, distance(forward(p, a), forward(p, b)) / distance(a, b));
  }
  CHECK(worst <= L);
}

TEST_CASE("normalisation rescales only kernels above the cap")
{
  auto p = init_params(Variant::KSpace, 1, 2, 1, 3, {8, 8});
  // a scalar-like kernel with known norm
  for (auto &k : p.blocks[0].kspace.kernels) {
    k = ConvKernel(1, 1, k.cin(), k.cout());
    k(0, 0, 0, 0) = 0.5;
  }
  p.blocks[0].kspace.kernels[2](0, 0, 0, 0) = 3.0;
  p.blocks[0].alpha = 1.7;
  for (auto &pw : p.blocks[0].kspace.power) {
    pw = PowerIteration();
  }
  normalize_in_place(p);
  CHECK(p.blocks[0].kspace.kernels[0](0, 0, 0, 0) == Cx(0.5));
  CHECK(p.blocks[0].kspace.sigma[0] == doctest::Approx(0.5));
  CHECK(std::abs(p.blocks[0].kspace.kernels[2](0, 0, 0, 0)) == doctest::Approx(1.0 / 1.001).epsilon(1e-9));
  CHECK(p.blocks[0].alpha == 0.99);
  CHECK(certified_lipschitz(p).L <= 0.99);

  auto h = init_params(Variant::Hybrid, 1, 2, 1, 3, {8, 8});
  h.blocks[0].ck = 1.4;
  h.blocks[0].ci = 0.2;
  normalize_in_place(h);
  CHECK(h.blocks[0].ck == 1.0);
  CHECK(h.blocks[0].ci == 0.0);
  h.blocks[0].ck = 0.7;
  h.blocks[0].ci = 0.5;
  normalize_in_place(h);
  CHECK(h.blocks[0].ck == doctest::Approx(0.6));
  CHECK(h.blocks[0].ci == doctest::Approx(0.4));
}

TEST_CASE("hybrid with ci = 0 equals the k-space variant exactly")
{
  auto k = init_params(Variant::KSpace, 2, 4, 2, 11, {8, 8});
  auto h = init_params(Variant::Hybrid, 2, 4, 2, 12, {8, 8});
  for (std::size_t b = 0; b < 2; b++) {
    h.blocks[b].kspace = k.blocks[b].kspace;
    h.blocks[b].alpha = k.blocks[b].alpha;
    h.blocks[b].ck = 1.0;
    h.blocks[b].ci = 0.0;
  }
  ComplexTensor const x = oracle::random_tensor(8, 8, 2, 13);
  CHECK(forward(h, x) == forward(k, x));
  CHECK(forward_tape(h, x).output == forward(k, x));
}

TEST_CASE("vjp with zero cotangent and with alpha = 0")
{
  auto p = init_params(Variant::KSpace, 2, 4, 2, 1, {8, 8});
  ComplexTensor const x = oracle::random_tensor(8, 8, 2, 3);
  auto const g0 = vjp(p, x, ComplexTensor(8, 8, 2));
  CHECK(norm(g0.x) == 0.0);
  for (double v : g0.params) {
    CHECK(v == 0.0);
  }

  zero_alpha(p);
  ComplexTensor const v = oracle::random_tensor(8, 8, 2, 4);
  auto const g = vjp(p, x, v);
  CHECK(oracle::rel_err(g.x, 0.9801 * v) < 1e-14);
  // every kernel gradient is zero; only the alpha entries can move
  std::size_t const per_block = p.real_param_count() / 2;
  for (std::size_t i = 0; i < g.params.size(); i++) {
    if (i % per_block != per_block - 1) {
      CHECK(g.params[i] == 0.0);
    }
  }
}

TEST_CASE("vjp matches central finite differences")
{
  for (auto variant : {Variant::KSpace, Variant::Hybrid}) {
    auto const p = init_params(variant, 1, 4, 2, 21, {8, 8});
    ComplexTensor const x = oracle::random_tensor(8, 8, 2, 22);
    ComplexTensor const v = oracle::random_tensor(8, 8, 2, 23);
    auto const g = vjp(p, x, v);
    auto loss = [&](ConsistencyNetParams const &q, ComplexTensor const &xx) { return real_inner(v, forward(q, xx)); };
    double const h = 1e-6;
    for (int d = 0; d < 5; d++) {
      auto const dir = random_direction(p.real_param_count(), 100 + d);
      double const fd = (loss(shifted(p, dir, h), x) - loss(shifted(p, dir, -h), x)) / (2 * h);
      double const an = dot(g.params, dir);
      CHECK(std::abs(fd - an) <= 1e-4 * std::abs(an));
    }
    // input direction: <grad_x, u> against a finite-difference JVP
    for (int d = 0; d < 3; d++) {
      ComplexTensor const u = oracle::random_tensor(8, 8, 2, 200 + d);
      ComplexTensor xp = x;
      axpy(1e-5, u, xp);
      ComplexTensor xm = x;
      axpy(-1e-5, u, xm);
      double const jvp = real_inner(v, forward(p, xp) - forward(p, xm)) / 2e-5;
      CHECK(std::abs(real_inner(g.x, u) - jvp) <= 1e-6 * std::abs(jvp));
    }
  }
}

TEST_CASE("forward and vjp are bit-reproducible")
{
  auto const p = init_params(Variant::Hybrid, 2, 4, 2, 31, {8, 8});
  ComplexTensor const x = oracle::random_tensor(8, 8, 2, 32);
  ComplexTensor const v = oracle::random_tensor(8, 8, 2, 33);
  CHECK(forward(p, x) == forward(p, x));
  auto const a = vjp(p, x, v);
  auto const b = vjp(p, x, v);
  CHECK(a.params == b.params);
  CHECK(a.x == b.x);
}

TEST_CASE("flatten and unflatten are inverse")
{
  auto p = init_params(Variant::Hybrid, 2, 3, 2, 41, {8, 8});
  auto v = flatten(p);
  REQUIRE(v.size() == p.real_param_count());
  for (auto &x : v) {
    x *= 0.5;
  }
  unflatten(p, v);
  CHECK(flatten(p) == v);
  CHECK_THROWS_AS(unflatten(p, std::vector<double>(3)), ShapeError);
}

TEST_CASE("checkpoint round trip and certificate gate")
{
  auto const p = init_params(Variant::Hybrid, 2, 4, 2, 51, {8, 8});
  std::stringstream ss;
  write_ck01(ss, p);
  std::string const bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "CK01");

  std::istringstream is(bytes);
  auto const loaded = read_ck01(is, {8, 8});
  CHECK(loaded.params.variant == Variant::Hybrid);
  CHECK(loaded.params.blocks.size() == 2);
  CHECK(loaded.stored_L == doctest::Approx(certified_lipschitz(p).L).epsilon(1e-6));
  CHECK(loaded.recomputed_L <= 0.99);
  ComplexTensor const x = oracle::random_tensor(8, 8, 2, 52);
  CHECK(oracle::rel_err(forward(loaded.params, x), forward(p, x)) < 1e-6);

  // saving the loaded network gives the same bytes
  std::stringstream again;
  write_ck01(again, loaded.params);
  std::istringstream is2(again.str());
  CHECK(flatten(read_ck01(is2, {8, 8}).params) == flatten(loaded.params));

  auto bad = p;
  bad.blocks[0].kspace.kernels[1] *= 3.0;
  std::stringstream sb;
  write_ck01(sb, bad);
  std::istringstream isb(sb.str());
  CHECK_THROWS_AS(read_ck01(isb, {8, 8}), ConfigError);

  std::istringstream junk("CK01\x07");
  CHECK_THROWS_AS(read_ck01(junk, {8, 8}), IoError);
}
