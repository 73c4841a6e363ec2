#include "deqpocs/io.hpp"

#include "deqpocs/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace deqpocs {

namespace le {

namespace {
void put_bytes(std::ostream &os, std::uint64_t v, int n)
{
  char buf[8];
  for (int i = 0; i < n; i++) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  os.write(buf, n);
}

std::uint64_t get_bytes(std::istream &is, int n)
{
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char *>(buf), n)) {
    throw IoError("unexpected end of stream");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < n; i++) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return v;
}
} // namespace

void put_u16(std::ostream &os, std::uint16_t v) { put_bytes(os, v, 2); }
void put_u32(std::ostream &os, std::uint32_t v) { put_bytes(os, v, 4); }
void put_f32(std::ostream &os, float v) { put_bytes(os, std::bit_cast<std::uint32_t>(v), 4); }
void put_magic(std::ostream &os, std::string_view magic) { os.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

std::uint16_t get_u16(std::istream &is) { return static_cast<std::uint16_t>(get_bytes(is, 2)); }
std::uint32_t get_u32(std::istream &is) { return static_cast<std::uint32_t>(get_bytes(is, 4)); }
float get_f32(std::istream &is) { return std::bit_cast<float>(static_cast<std::uint32_t>(get_bytes(is, 4))); }

void expect_magic(std::istream &is, std::string_view magic)
{
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw IoError("bad magic: expected " + std::string(magic));
  }
}

} // namespace le

namespace {
constexpr std::uint32_t kMaxDim = 1u << 16;

void write_payload(std::ostream &os, std::span<Cx const> data)
{
  for (Cx const &v : data) {
    le::put_f32(os, static_cast<float>(v.real()));
    le::put_f32(os, static_cast<float>(v.imag()));
  }
}

void read_payload(std::istream &is, std::span<Cx> data)
{
  for (Cx &v : data) {
    float const re = le::get_f32(is);
    float const im = le::get_f32(is);
    v = Cx(re, im);
  }
}
} // namespace

void write_ct01(std::ostream &os, ComplexTensor const &x)
{
  le::put_magic(os, "CT01");
  le::put_u32(os, static_cast<std::uint32_t>(x.height()));
  le::put_u32(os, static_cast<std::uint32_t>(x.width()));
  le::put_u32(os, static_cast<std::uint32_t>(x.channels()));
  write_payload(os, x.data());
}

ComplexTensor read_ct01(std::istream &is)
{
  le::expect_magic(is, "CT01");
  std::uint32_t const h = le::get_u32(is);
  std::uint32_t const w = le::get_u32(is);
  std::uint32_t const c = le::get_u32(is);
  if (h == 0 || w == 0 || c == 0 || h > kMaxDim || w > kMaxDim || c > kMaxDim) {
    throw IoError("CT01: invalid dimensions");
  }
  ComplexTensor x(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  read_payload(is, x.data());
  if (!all_finite(x)) {
    throw IoError("CT01: non-finite payload");
  }
  return x;
}

void save_ct01(std::filesystem::path const &path, ComplexTensor const &x)
{
  std::ostringstream os;
  write_ct01(os, x);
  write_file(path, os.str());
}

ComplexTensor load_ct01(std::filesystem::path const &path)
{
  std::istringstream is(read_file(path));
  return read_ct01(is);
}

void write_kernel_ct01(std::ostream &os, ConvKernel const &k)
{
  le::put_magic(os, "CT01");
  le::put_u32(os, static_cast<std::uint32_t>(k.kh()));
  le::put_u32(os, static_cast<std::uint32_t>(k.kw()));
  le::put_u32(os, static_cast<std::uint32_t>(k.cin() * k.cout()));
  write_payload(os, k.taps());
}

ConvKernel read_kernel_ct01(std::istream &is, int cin, int cout)
{
  le::expect_magic(is, "CT01");
  std::uint32_t const kh = le::get_u32(is);
  std::uint32_t const kw = le::get_u32(is);
  std::uint32_t const c = le::get_u32(is);
  if (kh == 0 || kw == 0 || kh > 255 || kw > 255 || c != static_cast<std::uint32_t>(cin * cout)) {
    throw IoError("kernel payload: unexpected dimensions");
  }
  ConvKernel k(static_cast<int>(kh), static_cast<int>(kw), cin, cout);
  read_payload(is, k.taps());
  return k;
}

void save_pgm16(std::filesystem::path const &path, RealImage const &img)
{
  double peak = 0.0;
  for (double v : img.data()) {
    peak = std::max(peak, v);
  }
  std::ostringstream os;
  os << "P5\n" << img.width() << " " << img.height() << "\n65535\n";
  for (double v : img.data()) {
    double const s = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) : 0.0;
    auto const q = static_cast<std::uint16_t>(std::lround(s * 65535.0));
    os.put(static_cast<char>(q >> 8));
    os.put(static_cast<char>(q & 0xff));
  }
  write_file(path, os.str());
}

std::string read_file(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(std::filesystem::path const &path, std::string_view bytes)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw IoError("cannot write " + path.string());
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) {
    throw IoError("write failed for " + path.string());
  }
}

} // namespace deqpocs
