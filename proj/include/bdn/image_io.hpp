#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/image.hpp"

namespace bdn {

/// Raw fixture format for byte-exact tests: 8-byte magic, u32 height,
/// u32 width (little endian), then 3*h*w float64 values in planar order.
inline constexpr char kRawMagic[8] = {'B', 'D', 'N', 'R', 'A', 'W', '0', '1'};

inline void write_raw_image(const RgbImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_raw_image: cannot open " + path);
  f.write(kRawMagic, 8);
  const std::uint32_t h = img.height, w = img.width;
  f.write(reinterpret_cast<const char*>(&h), 4);
  f.write(reinterpret_cast<const char*>(&w), 4);
  f.write(reinterpret_cast<const char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write_raw_image: short write to " + path);
}

inline RgbImage read_raw_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_raw_image: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kRawMagic, 8) != 0)
    throw std::runtime_error("read_raw_image: bad magic in " + path);
  std::uint32_t h = 0, w = 0;
  f.read(reinterpret_cast<char*>(&h), 4);
  f.read(reinterpret_cast<char*>(&w), 4);
  if (!f || h == 0 || w == 0)
    throw std::runtime_error("read_raw_image: bad header in " + path);
  RgbImage img(static_cast<int>(h), static_cast<int>(w));
  f.read(reinterpret_cast<char*>(img.data.data()),
         static_cast<std::streamsize>(img.data.size() * sizeof(double)));
  if (!f) throw std::runtime_error("read_raw_image: truncated data in " + path);
  return img;
}

/// 8-bit RGB PNG. Values are rounded and clamped on write, so an image whose
/// intensities are already integers round-trips exactly.
inline void write_png_image(const RgbImage& img, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_png_image: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("write_png_image: libpng init failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("write_png_image: libpng error on " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(clamp255(img.at(c, y, x))));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline RgbImage read_png_image(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_png_image: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png_image: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png_image: libpng error on " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  // Normalize whatever we get to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png_image: unexpected row layout in " + path);
  }
  RgbImage img(h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = row[static_cast<std::size_t>(x) * 3 + c];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

/// Dispatches on extension: .png or the raw fixture format (.braw).
inline RgbImage read_image(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".braw")
    return read_raw_image(path);
  return read_png_image(path);
}

inline void write_image(const RgbImage& img, const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".braw")
    return write_raw_image(img, path);
  return write_png_image(img, path);
}

}  // namespace bdn
