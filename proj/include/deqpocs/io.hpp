#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace deqpocs {

// Little-endian primitives shared by every container format.
namespace le {
void put_u16(std::ostream &os, std::uint16_t v);
void put_u32(std::ostream &os, std::uint32_t v);
void put_f32(std::ostream &os, float v);
void put_magic(std::ostream &os, std::string_view magic);
std::uint16_t get_u16(std::istream &is);
std::uint32_t get_u32(std::istream &is);
float get_f32(std::istream &is);
void expect_magic(std::istream &is, std::string_view magic);
} // namespace le

/*
 * CT01 tensor container:
 *   "CT01" | u32 H | u32 W | u32 C | H*W*C x (f32 re, f32 im)
 * all little-endian, row-major with the channel innermost.
 */
void write_ct01(std::ostream &os, ComplexTensor const &x);
ComplexTensor read_ct01(std::istream &is);
void save_ct01(std::filesystem::path const &path, ComplexTensor const &x);
ComplexTensor load_ct01(std::filesystem::path const &path);

// Kernels travel as CT01 payloads with H = kh, W = kw, C = cin * cout.
void write_kernel_ct01(std::ostream &os, ConvKernel const &k);
ConvKernel read_kernel_ct01(std::istream &is, int cin, int cout);

// 16-bit binary PGM, scaled so the image maximum maps to 65535.
void save_pgm16(std::filesystem::path const &path, RealImage const &img);

std::string read_file(std::filesystem::path const &path);
void write_file(std::filesystem::path const &path, std::string_view bytes);

} // namespace deqpocs
