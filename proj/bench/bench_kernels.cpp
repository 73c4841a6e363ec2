// Parallel convolution kernels against the serial reference versions, plus
// the FFT and a full network evaluation at the desk-scale data size.
#include "deqpocs/consistency_net.hpp"
#include "deqpocs/conv.hpp"
#include "deqpocs/fft.hpp"
#include "deqpocs/rng.hpp"

#include <benchmark/benchmark.h>

using namespace deqpocs;

namespace {

ComplexTensor random_tensor(int h, int w, int c, std::uint64_t seed)
{
  ComplexTensor x(h, w, c);
  Rng rng(seed);
  for (auto &v : x.data()) {
    double const re = rng.normal();
    v = Cx(re, rng.normal());
  }
  return x;
}

ConvKernel random_kernel(int k, int cin, int cout, std::uint64_t seed)
{
  ConvKernel kern(k, k, cin, cout);
  Rng rng(seed);
  for (auto &v : kern.taps()) {
    double const re = rng.normal();
    v = Cx(re, rng.normal());
  }
  return kern;
}

// args: grid size, feature width
void BM_Conv(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const x = random_tensor(n, n, f, 1);
  auto const k = random_kernel(3, f, f, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_complex(x, k));
  }
}

void BM_ConvReference(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const x = random_tensor(n, n, f, 1);
  auto const k = random_kernel(3, f, f, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::conv2d_complex(x, k));
  }
}

void BM_ConvAdjoint(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const y = random_tensor(n, n, f, 3);
  auto const k = random_kernel(3, f, f, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_adjoint(y, k));
  }
}

void BM_ConvAdjointReference(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const y = random_tensor(n, n, f, 3);
  auto const k = random_kernel(3, f, f, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::conv2d_adjoint(y, k));
  }
}

void BM_KernelGrad(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const x = random_tensor(n, n, f, 1);
  auto const y = random_tensor(n, n, f, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_kernel_grad(x, y, 3, 3));
  }
}

void BM_KernelGradReference(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  int const f = static_cast<int>(state.range(1));
  auto const x = random_tensor(n, n, f, 1);
  auto const y = random_tensor(n, n, f, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::conv2d_kernel_grad(x, y, 3, 3));
  }
}

void BM_Fft(benchmark::State &state)
{
  int const n = static_cast<int>(state.range(0));
  auto const x = random_tensor(n, n, 4, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fft2_centered(x));
  }
}

void BM_NetForward(benchmark::State &state)
{
  int const blocks = static_cast<int>(state.range(0));
  auto const params = init_params(Variant::KSpace, blocks, 16, 4, 7, {32, 32});
  auto const x = random_tensor(32, 32, 4, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, x));
  }
}

} // namespace

BENCHMARK(BM_Conv)->Args({32, 16})->Args({64, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvReference)->Args({32, 16})->Args({64, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvAdjoint)->Args({32, 16})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvAdjointReference)->Args({32, 16})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KernelGrad)->Args({32, 16})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KernelGradReference)->Args({32, 16})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Fft)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NetForward)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
