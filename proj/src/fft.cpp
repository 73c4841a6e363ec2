#include "deqpocs/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace deqpocs {

namespace {

// The FFTW planner is not thread-safe; plans are created once per
// (H, W, C, direction) under a lock and then executed concurrently through
// the new-array interface, which is.
class PlanCache
{
public:
  fftw_plan get(int h, int w, int c, int sign)
  {
    std::lock_guard lock(mutex_);
    auto const key = std::make_tuple(h, w, c, sign);
    if (auto it = plans_.find(key); it != plans_.end()) {
      return it->second;
    }
    std::size_t const n = static_cast<std::size_t>(h) * w * c;
    auto *buf = fftw_alloc_complex(n);
    int dims[2] = {h, w};
    fftw_plan plan = fftw_plan_many_dft(
      2, dims, c, buf, nullptr, c, 1, buf, nullptr, c, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache()
  {
    for (auto &kv : plans_) {
      fftw_destroy_plan(kv.second);
    }
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache &cache()
{
  static PlanCache instance;
  return instance;
}

ComplexTensor transform(ComplexTensor const &x, int sign)
{
  require_finite(x, sign == FFTW_FORWARD ? "fft2_centered" : "ifft2_centered");
  int const H = x.height();
  int const W = x.width();
  int const C = x.channels();
  int const sh = H / 2;
  int const sw = W / 2;

  // ifftshift on the way in
  ComplexTensor buf(x.shape());
  for (int h = 0; h < H; h++) {
    int const hs = (h + sh) % H;
    for (int w = 0; w < W; w++) {
      int const ws = (w + sw) % W;
      for (int c = 0; c < C; c++) {
        buf(h, w, c) = x(hs, ws, c);
      }
    }
  }
  auto *data = reinterpret_cast<fftw_complex *>(buf.data().data());
  fftw_execute_dft(cache().get(H, W, C, sign), data, data);

  // fftshift on the way out, orthonormal scaling
  double const scale = 1.0 / std::sqrt(static_cast<double>(H) * W);
  ComplexTensor out(x.shape());
  for (int h = 0; h < H; h++) {
    int const hd = (h + sh) % H;
    for (int w = 0; w < W; w++) {
      int const wd = (w + sw) % W;
      for (int c = 0; c < C; c++) {
        out(hd, wd, c) = buf(h, w, c) * scale;
      }
    }
  }
  return out;
}

} // namespace

ComplexTensor fft2_centered(ComplexTensor const &x) { return transform(x, FFTW_FORWARD); }

ComplexTensor ifft2_centered(ComplexTensor const &X) { return transform(X, FFTW_BACKWARD); }

} // namespace deqpocs
