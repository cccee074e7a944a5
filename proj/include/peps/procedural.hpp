#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "peps/fft.hpp"
#include "peps/image_io.hpp"
#include "peps/rng.hpp"
#include "peps/signals.hpp"

namespace peps {

/// Random field with an isotropic 1/f^alpha power spectrum, synthesized
/// from random phases; min-max normalized to [0,1]. size must be a power
/// of two.
inline std::vector<double> synth_power_law_field(Rng& rng, std::size_t size,
                                                 double alpha) {
  Spectrum2D s;
  s.rows = s.cols = size;
  s.data.assign(size * size, {0.0, 0.0});
  for (std::size_t r = 0; r < size; ++r) {
    const double fy = r <= size / 2 ? static_cast<double>(r)
                                    : static_cast<double>(r) -
                                          static_cast<double>(size);
    for (std::size_t c = 0; c < size; ++c) {
      const double fx = c <= size / 2 ? static_cast<double>(c)
                                      : static_cast<double>(c) -
                                            static_cast<double>(size);
      const double rad = std::sqrt(fx * fx + fy * fy);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      if (rad == 0.0) continue;  // keep DC at zero
      const double amp = std::pow(rad, -alpha / 2.0);
      s.at(r, c) = {amp * std::cos(phase), amp * std::sin(phase)};
    }
  }
  ifft2_inplace(s);
  std::vector<double> field(size * size);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < field.size(); ++i) {
    field[i] = s.data[i].real();
    lo = std::min(lo, field[i]);
    hi = std::max(hi, field[i]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : field) v = (v - lo) / span;
  return field;
}

/// Natural-looking RGB test image: a 1/f^1.4 luminance base, a handful of
/// soft-edged discs, and low-amplitude chroma fields. Deterministic per
/// seed; size must be a power of two.
inline ImageSignal make_natural_image(std::uint64_t seed, std::size_t size) {
  Rng rng(seed);
  auto lum = synth_power_law_field(rng, size, 1.4);
  ImageSignal img(size, size);
  for (std::size_t i = 0; i < size * size; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.values[i * 3 + c] = lum[i];

  static constexpr double tint[6][3] = {
      {0.90, 0.40, 0.30}, {0.20, 0.50, 0.80}, {0.80, 0.70, 0.20},
      {0.30, 0.70, 0.40}, {0.70, 0.30, 0.70}, {0.90, 0.80, 0.60}};
  for (int s = 0; s < 6; ++s) {
    const double cy = rng.uniform(), cx = rng.uniform();
    const double rad = 0.05 + 0.12 * rng.uniform();
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dy = (y + 0.5) / size - cy;
        const double dx = (x + 0.5) / size - cx;
        if (dy * dy + dx * dx < rad * rad)
          for (std::size_t c = 0; c < 3; ++c)
            img.at(y, x, c) = 0.45 * img.at(y, x, c) + 0.55 * tint[s][c];
      }
  }
  auto chroma_r = synth_power_law_field(rng, size, 1.4);
  auto chroma_b = synth_power_law_field(rng, size, 1.4);
  for (std::size_t i = 0; i < size * size; ++i) {
    img.values[i * 3] += 0.12 * (chroma_r[i] - 0.5);
    img.values[i * 3 + 2] += 0.12 * (chroma_b[i] - 0.5);
  }
  for (double& v : img.values) v = std::clamp(v, 0.02, 0.98);
  return img;
}

inline ImageSignal make_white_noise_image(std::uint64_t seed,
                                          std::size_t size) {
  Rng rng(seed);
  ImageSignal img(size, size);
  for (double& v : img.values) v = rng.uniform();
  return img;
}

/// Brownian-like 1/f^~2 field built from stacked sample-and-hold noise
/// octaves (the Voss construction): octave o holds one random value per
/// 2^o-pixel block, amplitude 2^(o/8). Returns a single-channel field.
inline std::vector<double> make_brownian_field(std::uint64_t seed,
                                               std::size_t size) {
  Rng rng(seed);
  std::vector<double> field(size * size, 0.0);
  std::size_t block = 1;
  for (int octave = 0; block < size; ++octave, block <<= 1) {
    const std::size_t cells = (size + block - 1) / block;
    const double amp = std::pow(2.0, octave / 8.0);
    std::vector<double> g(cells * cells);
    for (double& v : g) v = rng.uniform(-1.0, 1.0);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        field[y * size + x] += amp * g[(y / block) * cells + (x / block)];
  }
  return field;
}

/// Tiny procedural texture set (k layers of one resolution) used by
/// tests and as bundled sample data.
inline TextureSet make_test_texture_set(std::uint64_t seed, std::size_t size,
                                        std::size_t layers = 3) {
  Rng rng(seed);
  TextureSet out;
  static const char* names[] = {"albedo", "height", "rough", "metal"};
  for (std::size_t l = 0; l < layers; ++l) {
    ImageSignal img(size, size);
    const double fx = 1.0 + static_cast<double>(rng.below(4));
    const double fy = 1.0 + static_cast<double>(rng.below(4));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double u = (x + 0.5) / size, v = (y + 0.5) / size;
        const double base =
            0.5 + 0.3 * std::sin(2 * std::numbers::pi * (fx * u + fy * v) +
                                 phase);
        for (std::size_t c = 0; c < 3; ++c)
          img.at(y, x, c) = std::clamp(
              base + 0.15 * rng.uniform(-1.0, 1.0) + 0.1 * c, 0.0, 1.0);
      }
    out.add(names[l % 4], std::move(img));
  }
  return out;
}

}  // namespace peps
