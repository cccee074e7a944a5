#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "peps/errors.hpp"

namespace peps {

/// RGB image, values in [0,1], row-major rows x cols x 3.
struct ImageSignal {
  std::size_t width = 0, height = 0;
  static constexpr std::size_t channels = 3;
  std::vector<double> values;

  ImageSignal() = default;
  ImageSignal(std::size_t w, std::size_t h)
      : width(w), height(h), values(w * h * channels, 0.0) {}

  double& at(std::size_t row, std::size_t col, std::size_t c) {
    return values[(row * width + col) * channels + c];
  }
  double at(std::size_t row, std::size_t col, std::size_t c) const {
    return values[(row * width + col) * channels + c];
  }
};

namespace detail {

inline bool has_suffix(const std::string& s, const char* suf) {
  const std::size_t n = std::strlen(suf);
  return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

inline int ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments, then reads one non-negative integer.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    } else {
      c = in.get();
    }
  }
  if (c == EOF || !std::isdigit(c)) return -1;
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

inline ImageSignal load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open image: " + path);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6')
    throw io_error(path + ": not a binary PPM (P6) file");
  const int w = ppm_token(in);
  const int h = ppm_token(in);
  const int maxval = ppm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval >= 65536)
    throw io_error(path + ": malformed PPM header");
  // The header ends with exactly one whitespace byte before the raster.
  ImageSignal img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  const std::size_t samples = img.values.size();
  if (maxval < 256) {
    std::vector<unsigned char> raw(samples);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (!in) throw io_error(path + ": truncated PPM raster");
    for (std::size_t i = 0; i < samples; ++i)
      img.values[i] = raw[i] / static_cast<double>(maxval);
  } else {
    std::vector<unsigned char> raw(samples * 2);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (!in) throw io_error(path + ": truncated PPM raster");
    for (std::size_t i = 0; i < samples; ++i) {
      const unsigned v = (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
      img.values[i] = v / static_cast<double>(maxval);
    }
  }
  return img;
}

inline void save_ppm(const std::string& path, const ImageSignal& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const double v = std::clamp(img.values[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw io_error(path + ": short write");
}

struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f) std::fclose(f);
  }
};

inline ImageSignal load_png(const std::string& path) {
  PngCloser fc;
  fc.f = std::fopen(path.c_str(), "rb");
  if (!fc.f) throw io_error("cannot open image: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw io_error(path + ": libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path + ": corrupt or unsupported PNG");
  }
  png_init_io(png, fc.f);
  png_read_info(png, info);
  // Normalize everything to 8- or 16-bit RGB.
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  ImageSignal img(w, h);
  const std::size_t stride = png_get_rowbytes(png, info);
  std::vector<unsigned char> row(stride);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        if (depth == 16) {
          const unsigned v =
              (unsigned(row[(x * 3 + c) * 2]) << 8) | row[(x * 3 + c) * 2 + 1];
          img.at(y, x, c) = v / 65535.0;
        } else {
          img.at(y, x, c) = row[x * 3 + c] / 255.0;
        }
      }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void save_png(const std::string& path, const ImageSignal& img) {
  PngCloser fc;
  fc.f = std::fopen(path.c_str(), "wb");
  if (!fc.f) throw io_error("cannot write image: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw io_error(path + ": libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error(path + ": PNG write failed");
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(img.width * 3);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
        row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Loads a PNG or binary PPM (P6) image, 8- or 16-bit, normalized to [0,1].
inline ImageSignal load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw io_error("cannot open image: " + path);
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G')
    return detail::load_png(path);
  if (sig[0] == 'P' && sig[1] == '6') return detail::load_ppm(path);
  throw io_error(path + ": unsupported image format (need PNG or P6 PPM)");
}

/// Saves 8-bit PNG or PPM depending on the file suffix (default PPM).
inline void save_image(const std::string& path, const ImageSignal& img) {
  if (img.width == 0 || img.height == 0)
    throw std::invalid_argument("save_image: empty image");
  if (detail::has_suffix(path, ".png"))
    detail::save_png(path, img);
  else
    detail::save_ppm(path, img);
}

}  // namespace peps
