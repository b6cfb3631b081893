#include "splatfuse/io/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "splatfuse/core/error.hpp"

namespace splatfuse {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DomainError("cannot open file: " + path);
  return f;
}

uint8_t to_u8(double v) {
  double scaled = std::round(v * 255.0);
  if (!(scaled > 0.0)) return 0;
  if (scaled > 255.0) return 255;
  return static_cast<uint8_t>(scaled);
}

uint16_t to_u16(double v, double scale) {
  double scaled = std::round(v * scale);
  if (!(scaled > 0.0)) return 0;
  if (scaled > 65535.0) return 65535;
  return static_cast<uint16_t>(scaled);
}

}  // namespace

void write_png_rgb8(const std::string& path, const GridV3& image) {
  FilePtr file = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DomainError("png writer allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DomainError("png write failed: " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Eigen::Vector3d& c = image.at(x, y);
      row[3 * x + 0] = to_u8(c.x());
      row[3 * x + 1] = to_u8(c.y());
      row[3 * x + 2] = to_u8(c.z());
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GridV3 read_png_rgb8(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DomainError("png reader allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DomainError("png read failed: " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);

  // Normalize whatever we get to 8-bit RGB.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  GridV3 image(static_cast<int>(width), static_cast<int>(height));
  std::vector<uint8_t> row(png_get_rowbytes(png, info));
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      image.at(static_cast<int>(x), static_cast<int>(y)) =
          Eigen::Vector3d(row[3 * x + 0], row[3 * x + 1], row[3 * x + 2]) /
          255.0;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png_gray16(const std::string& path, const GridD& values,
                      double scale) {
  if (!(scale > 0.0)) throw DomainError("png scale must be positive");
  FilePtr file = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DomainError("png writer allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DomainError("png write failed: " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, values.width(), values.height(), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  // PNG stores 16-bit samples big-endian.
  std::vector<uint8_t> row(static_cast<size_t>(values.width()) * 2);
  for (int y = 0; y < values.height(); ++y) {
    for (int x = 0; x < values.width(); ++x) {
      uint16_t v = to_u16(values.at(x, y), scale);
      row[2 * x + 0] = static_cast<uint8_t>(v >> 8);
      row[2 * x + 1] = static_cast<uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GridD read_png_gray16(const std::string& path, double scale) {
  if (!(scale > 0.0)) throw DomainError("png scale must be positive");
  FilePtr file = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DomainError("png reader allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DomainError("png read failed: " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DomainError("expected 16-bit grayscale png: " + path);
  }
  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  png_read_update_info(png, info);

  GridD values(static_cast<int>(width), static_cast<int>(height));
  std::vector<uint8_t> row(png_get_rowbytes(png, info));
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      uint16_t v = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
      values.at(static_cast<int>(x), static_cast<int>(y)) = v / scale;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return values;
}

void write_raw_f32(const std::string& path, const GridD& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open file: " + path);
  std::vector<float> buf(values.data(), values.data() + values.size());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw DomainError("write failed: " + path);
}

GridD read_raw_f32(const std::string& path, int width, int height) {
  if (width <= 0 || height <= 0)
    throw DomainError("raw dimensions must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open file: " + path);
  std::vector<float> buf(static_cast<size_t>(width) * height);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw DomainError("raw file truncated: " + path);
  GridD values(width, height);
  for (size_t i = 0; i < buf.size(); ++i) values[i] = buf[i];
  return values;
}

}  // namespace splatfuse
