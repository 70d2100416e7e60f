#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/raster.hpp"

namespace isoscene {

// Decoded PNG: samples widened to 16 bits, channel-interleaved, alpha stripped.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct PngWriteContext {
  std::vector<std::uint8_t> bytes;
};

struct PngReadContext {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
  std::string error;
};

inline void png_error_to_jmp(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err != nullptr) *err = msg;
  png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<PngWriteContext*>(png_get_io_ptr(png));
  ctx->bytes.insert(ctx->bytes.end(), data, data + len);
}

inline void png_flush_noop(png_structp) {}

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* ctx = static_cast<PngReadContext*>(png_get_io_ptr(png));
  if (ctx->offset + len > ctx->size) png_error(png, "unexpected end of data");
  std::memcpy(out, ctx->data + ctx->offset, len);
  ctx->offset += len;
}

// rows: height rows of packed big-endian samples.
inline std::vector<std::uint8_t> encode_png(int width, int height, int color_type, int bit_depth,
                                            const std::vector<std::uint8_t>& packed) {
  PngWriteContext ctx;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_to_jmp, png_ignore_warning);
  if (png == nullptr) throw IoError("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot create info struct");
  }
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(packed.data() + stride * y);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed: " + err);
  }
  png_set_write_fn(png, &ctx, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(ctx.bytes);
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8-bit gray (1 channel) or RGB (3 channels).
inline std::vector<std::uint8_t> encode_png8(const Raster<std::uint8_t>& img) {
  if (img.channels() != 1 && img.channels() != 3) throw Error("png: 8-bit images must have 1 or 3 channels");
  if (img.width() == 0 || img.height() == 0) throw Error("png: empty image");
  return detail::encode_png(img.width(), img.height(),
                            img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, 8, img.storage());
}

inline std::vector<std::uint8_t> encode_png16(const Raster<std::uint16_t>& img) {
  if (img.channels() != 1) throw Error("png: 16-bit images must be single channel");
  if (img.width() == 0 || img.height() == 0) throw Error("png: empty image");
  std::vector<std::uint8_t> packed(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    packed[2 * i] = static_cast<std::uint8_t>(img[i] >> 8);
    packed[2 * i + 1] = static_cast<std::uint8_t>(img[i] & 0xff);
  }
  return detail::encode_png(img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 16, packed);
}

inline void write_png8(const std::filesystem::path& path, const Raster<std::uint8_t>& img) {
  detail::write_file_bytes(path, encode_png8(img));
}

inline void write_png16(const std::filesystem::path& path, const Raster<std::uint16_t>& img) {
  detail::write_file_bytes(path, encode_png16(img));
}

// Throws ParseError with `name` in the message on malformed data.
inline PngImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ParseError("'" + name + "' is not a PNG file");
  }
  detail::PngReadContext ctx{bytes.data(), bytes.size(), 0, {}};
  PngImage out;
  PngImage* const result = &out;
  std::vector<std::uint8_t> buffer;
  std::vector<std::uint8_t>* const pixels = &buffer;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx.error, detail::png_error_to_jmp,
                                           detail::png_ignore_warning);
  if (png == nullptr) throw IoError("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: cannot create info struct");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_bytep>* const rows = &row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("failed to decode PNG '" + name + "': " + ctx.error);
  }
  png_set_read_fn(png, &ctx, detail::png_read_from_memory);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  result->width = static_cast<int>(png_get_image_width(png, info));
  result->height = static_cast<int>(png_get_image_height(png, info));
  result->channels = png_get_channels(png, info);
  result->bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels->resize(stride * static_cast<std::size_t>(result->height));
  rows->resize(static_cast<std::size_t>(result->height));
  for (int y = 0; y < result->height; ++y) (*rows)[static_cast<std::size_t>(y)] = pixels->data() + stride * y;
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

inline PngImage read_png(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError&) {
    throw ParseError("cannot read PNG '" + path.string() + "'");
  }
  return decode_png(bytes, path.string());
}

inline Raster<std::uint8_t> read_png8(const std::filesystem::path& path, int expected_channels) {
  const PngImage img = read_png(path);
  if (img.bit_depth != 8) throw ParseError("'" + path.string() + "': expected an 8-bit PNG");
  if (img.channels != expected_channels) {
    throw ParseError("'" + path.string() + "': expected " + std::to_string(expected_channels) + " channel(s)");
  }
  Raster<std::uint8_t> r(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<std::uint8_t>(img.samples[i]);
  return r;
}

inline Raster<std::uint16_t> read_png16(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  if (img.bit_depth != 16 || img.channels != 1) {
    throw ParseError("'" + path.string() + "': expected a 16-bit grayscale PNG");
  }
  Raster<std::uint16_t> r(img.width, img.height, 1);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = img.samples[i];
  return r;
}

// Float color in [0,1] -> 8-bit, round to nearest.
inline std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(c + 0.5);
}

inline Raster<std::uint8_t> quantize_color(const RealGrid& color) {
  Raster<std::uint8_t> out(color.width(), color.height(), color.channels());
  for (std::size_t i = 0; i < color.size(); ++i) out[i] = to_byte(color[i]);
  return out;
}

inline RealGrid dequantize_color(const Raster<std::uint8_t>& img) {
  RealGrid out(img.width(), img.height(), img.channels());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] / 255.0;
  return out;
}

}  // namespace isoscene
