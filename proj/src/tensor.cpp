#include "deqpocs/tensor.hpp"

#include "deqpocs/errors.hpp"

#include <cmath>
#include <string>

namespace deqpocs {

namespace {
void check_dims(int h, int w, int c)
{
  if (h < 1 || w < 1 || c < 1) {
    throw ShapeError("tensor dimensions must be >= 1, got " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                     std::to_string(c));
  }
}
} // namespace

ComplexTensor::ComplexTensor(int height, int width, int channels)
  : ComplexTensor(Shape3{height, width, channels})
{
}

ComplexTensor::ComplexTensor(Shape3 shape)
  : shape_(shape)
{
  check_dims(shape.height, shape.width, shape.channels);
  data_.assign(shape.size(), Cx{});
}

ComplexTensor::ComplexTensor(Shape3 shape, std::vector<Cx> data)
  : shape_(shape)
  , data_(std::move(data))
{
  check_dims(shape.height, shape.width, shape.channels);
  if (data_.size() != shape.size()) {
    throw ShapeError("tensor data length does not match its shape");
  }
}

void ComplexTensor::set_zero() { std::fill(data_.begin(), data_.end(), Cx{}); }

ComplexTensor &ComplexTensor::operator+=(ComplexTensor const &other)
{
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); i++) {
    data_[i] += other.data_[i];
  }
  return *this;
}

ComplexTensor &ComplexTensor::operator-=(ComplexTensor const &other)
{
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); i++) {
    data_[i] -= other.data_[i];
  }
  return *this;
}

ComplexTensor &ComplexTensor::operator*=(double s)
{
  for (auto &v : data_) {
    v *= s;
  }
  return *this;
}

ComplexTensor &ComplexTensor::operator*=(Cx s)
{
  for (auto &v : data_) {
    v = Cx(v.real() * s.real() - v.imag() * s.imag(), v.real() * s.imag() + v.imag() * s.real());
  }
  return *this;
}

ComplexTensor operator+(ComplexTensor a, ComplexTensor const &b) { return a += b; }
ComplexTensor operator-(ComplexTensor a, ComplexTensor const &b) { return a -= b; }
ComplexTensor operator*(double s, ComplexTensor a) { return a *= s; }
ComplexTensor operator*(Cx s, ComplexTensor a) { return a *= s; }

void axpy(double s, ComplexTensor const &b, ComplexTensor &a)
{
  require_same_shape(a, b, "axpy");
  double const *pb = b.real_data();
  double *pa = a.real_data();
  std::size_t const n = 2 * a.size();
  for (std::size_t i = 0; i < n; i++) {
    pa[i] += s * pb[i];
  }
}

double squared_norm(ComplexTensor const &x)
{
  double const *p = x.real_data();
  std::size_t const n = 2 * x.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; i++) {
    acc += p[i] * p[i];
  }
  return acc;
}

double norm(ComplexTensor const &x) { return std::sqrt(squared_norm(x)); }

double distance(ComplexTensor const &a, ComplexTensor const &b)
{
  require_same_shape(a, b, "distance");
  double const *pa = a.real_data();
  double const *pb = b.real_data();
  std::size_t const n = 2 * a.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; i++) {
    double const d = pa[i] - pb[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Cx inner(ComplexTensor const &a, ComplexTensor const &b)
{
  require_same_shape(a, b, "inner");
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) {
    Cx const x = a[i];
    Cx const y = b[i];
    re += x.real() * y.real() + x.imag() * y.imag();
    im += x.real() * y.imag() - x.imag() * y.real();
  }
  return {re, im};
}

double real_inner(ComplexTensor const &a, ComplexTensor const &b)
{
  require_same_shape(a, b, "real_inner");
  double const *pa = a.real_data();
  double const *pb = b.real_data();
  std::size_t const n = 2 * a.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; i++) {
    acc += pa[i] * pb[i];
  }
  return acc;
}

bool all_finite(ComplexTensor const &x)
{
  double const *p = x.real_data();
  std::size_t const n = 2 * x.size();
  for (std::size_t i = 0; i < n; i++) {
    if (!std::isfinite(p[i])) {
      return false;
    }
  }
  return true;
}

void require_finite(ComplexTensor const &x, std::string_view what)
{
  if (!all_finite(x)) {
    throw InvalidInputError(std::string(what) + ": non-finite entry in input");
  }
}

void require_same_shape(ComplexTensor const &a, ComplexTensor const &b, std::string_view what)
{
  if (a.shape() != b.shape()) {
    auto fmt = [](Shape3 s) {
      return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
    };
    throw ShapeError(std::string(what) + ": shape mismatch " + fmt(a.shape()) + " vs " + fmt(b.shape()));
  }
}

ComplexTensor channel(ComplexTensor const &x, int c)
{
  if (c < 0 || c >= x.channels()) {
    throw ShapeError("channel index out of range");
  }
  ComplexTensor out(x.height(), x.width(), 1);
  for (int h = 0; h < x.height(); h++) {
    for (int w = 0; w < x.width(); w++) {
      out(h, w, 0) = x(h, w, c);
    }
  }
  return out;
}

RealImage::RealImage(int height, int width, double fill)
  : height_(height)
  , width_(width)
{
  if (height < 1 || width < 1) {
    throw ShapeError("image dimensions must be >= 1");
  }
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

ConvKernel::ConvKernel(int kh, int kw, int cin, int cout)
  : kh_(kh)
  , kw_(kw)
  , cin_(cin)
  , cout_(cout)
{
  if (kh < 1 || kw < 1 || kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("kernel spatial extents must be odd and positive");
  }
  if (cin < 1 || cout < 1) {
    throw ShapeError("kernel channel counts must be >= 1");
  }
  taps_.assign(static_cast<std::size_t>(kh) * kw * cin * cout, Cx{});
}

ConvKernel &ConvKernel::operator*=(double s)
{
  for (auto &t : taps_) {
    t *= s;
  }
  return *this;
}

} // namespace deqpocs
