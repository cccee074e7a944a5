#pragma once

#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "peps/errors.hpp"

namespace peps {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Iterative radix-2 Cooley-Tukey; size must be a power of two.
inline void fft_inplace(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

/// 2-D spectrum of a real field, zero-padded to power-of-two sides.
struct Spectrum2D {
  std::size_t rows = 0, cols = 0;  // padded sizes
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t r, std::size_t c) {
    return data[r * cols + c];
  }
  const std::complex<double>& at(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

inline Spectrum2D fft2(std::span<const double> field, std::size_t height,
                       std::size_t width) {
  if (field.size() != width * height)
    throw std::invalid_argument("fft2: field size mismatch");
  Spectrum2D s;
  s.rows = next_pow2(height);
  s.cols = next_pow2(width);
  s.data.assign(s.rows * s.cols, {0.0, 0.0});
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      s.at(r, c) = field[r * width + c];
  std::vector<std::complex<double>> col(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r)
    fft_inplace({s.data.data() + r * s.cols, s.cols}, false);
  for (std::size_t c = 0; c < s.cols; ++c) {
    for (std::size_t r = 0; r < s.rows; ++r) col[r] = s.at(r, c);
    fft_inplace(col, false);
    for (std::size_t r = 0; r < s.rows; ++r) s.at(r, c) = col[r];
  }
  return s;
}

/// Inverse 2-D transform (for synthesis); sizes must be powers of two.
inline void ifft2_inplace(Spectrum2D& s) {
  std::vector<std::complex<double>> col(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r)
    fft_inplace({s.data.data() + r * s.cols, s.cols}, true);
  for (std::size_t c = 0; c < s.cols; ++c) {
    for (std::size_t r = 0; r < s.rows; ++r) col[r] = s.at(r, c);
    fft_inplace(col, true);
    for (std::size_t r = 0; r < s.rows; ++r) s.at(r, c) = col[r];
  }
}

}  // namespace peps
