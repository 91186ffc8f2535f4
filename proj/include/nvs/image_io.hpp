#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "nvs/errors.hpp"
#include "nvs/grid.hpp"

namespace nvs {

namespace detail {

struct FileHandle {
  std::FILE* f = nullptr;
  explicit FileHandle(const std::filesystem::path& p, const char* mode)
      : f(std::fopen(p.string().c_str(), mode)) {}
  ~FileHandle() {
    if (f) std::fclose(f);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

inline void put_f32_le(std::vector<unsigned char>& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<unsigned char>(bits));
  out.push_back(static_cast<unsigned char>(bits >> 8));
  out.push_back(static_cast<unsigned char>(bits >> 16));
  out.push_back(static_cast<unsigned char>(bits >> 24));
}

inline float get_f32(const unsigned char* p, bool little_endian) {
  std::uint32_t bits;
  if (little_endian) {
    bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
  } else {
    bits = std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 | std::uint32_t(p[1]) << 16 |
           std::uint32_t(p[0]) << 24;
  }
  return std::bit_cast<float>(bits);
}

}  // namespace detail

// --- PFM (grayscale, rows stored bottom-to-top) ---

inline void save_depth(const Grid<double>& depth, const std::filesystem::path& path) {
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (!std::isfinite(depth(x, y)))
        throw IoFailure("non-finite depth at (" + std::to_string(x) + "," + std::to_string(y) +
                        ") writing " + path.string());
  detail::FileHandle fh(path, "wb");
  if (!fh.f) throw IoFailure("cannot open " + path.string() + " for writing");
  std::string header =
      "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1.0\n";
  std::vector<unsigned char> body;
  body.reserve(depth.size() * 4);
  for (int y = depth.height() - 1; y >= 0; --y)
    for (int x = 0; x < depth.width(); ++x)
      detail::put_f32_le(body, static_cast<float>(depth(x, y)));
  if (std::fwrite(header.data(), 1, header.size(), fh.f) != header.size() ||
      std::fwrite(body.data(), 1, body.size(), fh.f) != body.size())
    throw IoFailure("short write to " + path.string());
}

inline Grid<double> load_depth(const std::filesystem::path& path) {
  detail::FileHandle fh(path, "rb");
  if (!fh.f) throw MissingFile("cannot open " + path.string());
  char magic[3] = {};
  int w = 0, h = 0;
  double scale = 0.0;
  if (std::fscanf(fh.f, "%2s %d %d %lf", magic, &w, &h, &scale) != 4 ||
      std::string(magic) != "Pf" || w <= 0 || h <= 0 || scale == 0.0)
    throw BadHeader("not a grayscale PFM: " + path.string());
  if (std::fgetc(fh.f) == EOF) throw BadHeader("truncated PFM header: " + path.string());
  const bool little_endian = scale < 0.0;
  std::vector<unsigned char> body(static_cast<size_t>(w) * h * 4);
  if (std::fread(body.data(), 1, body.size(), fh.f) != body.size())
    throw BadHeader("truncated PFM body: " + path.string());
  Grid<double> depth(w, h, 0.0);
  size_t idx = 0;
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x, idx += 4)
      depth(x, y) = detail::get_f32(body.data() + idx, little_endian);
  return depth;
}

// --- PNG (8-bit RGB at the file boundary, linear [0,1] in memory) ---

inline void save_image(const Grid<Color>& img, const std::filesystem::path& path) {
  detail::FileHandle fh(path, "wb");
  if (!fh.f) throw IoFailure("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoFailure("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoFailure("libpng write failed for " + path.string());
  }
  png_init_io(png, fh.f);
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<size_t>(img.width()) * 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Color& c = img(x, y);
      for (int k = 0; k < 3; ++k) {
        double v = std::clamp(c[k], 0.0, 1.0);
        row[static_cast<size_t>(x) * 3 + k] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline Grid<Color> load_image(const std::filesystem::path& path) {
  detail::FileHandle fh(path, "rb");
  if (!fh.f) throw MissingFile("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fh.f) != 8 || png_sig_cmp(sig, 0, 8))
    throw BadHeader("not a PNG: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoFailure("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw BadHeader("libpng read failed for " + path.string());
  }
  png_init_io(png, fh.f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  // normalize any color type to 8-bit RGB
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  Grid<Color> img(w, h, Color::Zero());
  std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      img(x, y) = Color(row[static_cast<size_t>(x) * 3] / 255.0,
                        row[static_cast<size_t>(x) * 3 + 1] / 255.0,
                        row[static_cast<size_t>(x) * 3 + 2] / 255.0);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace nvs
