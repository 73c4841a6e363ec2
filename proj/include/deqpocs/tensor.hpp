#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace deqpocs {

using Cx = std::complex<double>;

struct Shape3
{
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const
  {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(Shape3 const &) const = default;
};

struct GridShape
{
  int height = 0;
  int width = 0;
  bool operator==(GridShape const &) const = default;
};

/*
 * Complex H x W x C tensor, row-major with the channel index innermost.
 * Holds k-space data, coil images and network activations.
 */
class ComplexTensor
{
public:
  ComplexTensor() = default;
  ComplexTensor(int height, int width, int channels);
  explicit ComplexTensor(Shape3 shape);
  ComplexTensor(Shape3 shape, std::vector<Cx> data);

  Shape3 shape() const { return shape_; }
  GridShape grid() const { return {shape_.height, shape_.width}; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Cx &operator()(int h, int w, int c) { return data_[index(h, w, c)]; }
  Cx const &operator()(int h, int w, int c) const { return data_[index(h, w, c)]; }
  Cx &operator[](std::size_t i) { return data_[i]; }
  Cx const &operator[](std::size_t i) const { return data_[i]; }

  std::span<Cx> data() { return data_; }
  std::span<Cx const> data() const { return data_; }
  double *real_data() { return reinterpret_cast<double *>(data_.data()); }
  double const *real_data() const { return reinterpret_cast<double const *>(data_.data()); }

  void set_zero();

  ComplexTensor &operator+=(ComplexTensor const &other);
  ComplexTensor &operator-=(ComplexTensor const &other);
  ComplexTensor &operator*=(double s);
  ComplexTensor &operator*=(Cx s);

  bool operator==(ComplexTensor const &) const = default;

private:
  std::size_t index(int h, int w, int c) const
  {
    return (static_cast<std::size_t>(h) * shape_.width + w) * shape_.channels + c;
  }

  Shape3 shape_{};
  std::vector<Cx> data_;
};

ComplexTensor operator+(ComplexTensor a, ComplexTensor const &b);
ComplexTensor operator-(ComplexTensor a, ComplexTensor const &b);
ComplexTensor operator*(double s, ComplexTensor a);
ComplexTensor operator*(Cx s, ComplexTensor a);

// a += s * b
void axpy(double s, ComplexTensor const &b, ComplexTensor &a);

double squared_norm(ComplexTensor const &x);
double norm(ComplexTensor const &x); // Frobenius
double distance(ComplexTensor const &a, ComplexTensor const &b);
Cx inner(ComplexTensor const &a, ComplexTensor const &b);  // sum conj(a) * b
double real_inner(ComplexTensor const &a, ComplexTensor const &b);
bool all_finite(ComplexTensor const &x);

// Throws InvalidInputError naming `what` if any entry is NaN/Inf.
void require_finite(ComplexTensor const &x, std::string_view what);
// Throws ShapeError naming `what` if shapes differ.
void require_same_shape(ComplexTensor const &a, ComplexTensor const &b, std::string_view what);

// Extract channel c as a single-channel tensor, and the inverse.
ComplexTensor channel(ComplexTensor const &x, int c);

/*
 * Real H x W image (SSoS magnitudes, phantoms).
 */
class RealImage
{
public:
  RealImage() = default;
  RealImage(int height, int width, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  GridShape grid() const { return {height_, width_}; }
  std::size_t size() const { return data_.size(); }

  double &operator()(int h, int w) { return data_[static_cast<std::size_t>(h) * width_ + w]; }
  double operator()(int h, int w) const { return data_[static_cast<std::size_t>(h) * width_ + w]; }
  std::span<double> data() { return data_; }
  std::span<double const> data() const { return data_; }

  bool operator==(RealImage const &) const = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/*
 * Complex convolution kernel, taps laid out [row][col][in][out] so the
 * innermost loop of the convolution runs over output channels.
 * Spatial extents are odd so "same" padding is centered.
 */
class ConvKernel
{
public:
  ConvKernel() = default;
  ConvKernel(int kh, int kw, int cin, int cout);

  int kh() const { return kh_; }
  int kw() const { return kw_; }
  int cin() const { return cin_; }
  int cout() const { return cout_; }
  std::size_t size() const { return taps_.size(); }

  Cx &operator()(int a, int b, int i, int o) { return taps_[index(a, b, i, o)]; }
  Cx const &operator()(int a, int b, int i, int o) const { return taps_[index(a, b, i, o)]; }
  std::span<Cx> taps() { return taps_; }
  std::span<Cx const> taps() const { return taps_; }
  double const *real_data() const { return reinterpret_cast<double const *>(taps_.data()); }

  ConvKernel &operator*=(double s);
  bool operator==(ConvKernel const &) const = default;

private:
  std::size_t index(int a, int b, int i, int o) const
  {
    return ((static_cast<std::size_t>(a) * kw_ + b) * cin_ + i) * cout_ + o;
  }

  int kh_ = 0;
  int kw_ = 0;
  int cin_ = 0;
  int cout_ = 0;
  std::vector<Cx> taps_;
};

} // namespace deqpocs
