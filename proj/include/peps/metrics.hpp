#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "peps/fft.hpp"

namespace peps {

/// Floor applied to spectral magnitudes/powers before taking logs.
inline constexpr double kSpectralFloor = 1e-10;

inline double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("mse: need equal non-empty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// 20 log10(peak) - 10 log10(MSE); +inf for identical inputs.
inline double psnr(std::span<const double> a, std::span<const double> b,
                   double peak = 1.0) {
  if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak) - 10.0 * std::log10(m);
}

namespace detail {

inline std::vector<double> channel_mean(std::span<const double> img,
                                        std::size_t pixels,
                                        std::size_t channels) {
  std::vector<double> gray(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += img[i * channels + c];
    gray[i] = acc / static_cast<double>(channels);
  }
  return gray;
}

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size * size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = static_cast<double>(y) - c;
      const double dx = static_cast<double>(x) - c;
      w[y * size + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      total += w[y * size + x];
    }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace detail

/// Windowed SSIM on the per-channel mean: Gaussian window 11, sigma 1.5,
/// k1 = 0.01, k2 = 0.03, dynamic range 1. Mean over all valid windows.
inline double ssim(std::span<const double> a, std::span<const double> b,
                   std::size_t width, std::size_t height,
                   std::size_t channels = 3) {
  constexpr std::size_t win = 11;
  if (a.size() != b.size() || a.size() != width * height * channels)
    throw std::invalid_argument("ssim: shape mismatch");
  if (width < win || height < win)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const auto ga = detail::channel_mean(a, width * height, channels);
  const auto gb = detail::channel_mean(b, width * height, channels);
  static const std::vector<double> w = detail::gaussian_window(win, 1.5);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + win <= height; ++y)
    for (std::size_t x = 0; x + win <= width; ++x) {
      double mua = 0, mub = 0;
      for (std::size_t j = 0; j < win; ++j)
        for (std::size_t i = 0; i < win; ++i) {
          const double wv = w[j * win + i];
          mua += wv * ga[(y + j) * width + (x + i)];
          mub += wv * gb[(y + j) * width + (x + i)];
        }
      double va = 0, vb = 0, cov = 0;
      for (std::size_t j = 0; j < win; ++j)
        for (std::size_t i = 0; i < win; ++i) {
          const double wv = w[j * win + i];
          const double da = ga[(y + j) * width + (x + i)] - mua;
          const double db = gb[(y + j) * width + (x + i)] - mub;
          va += wv * da * da;
          vb += wv * db * db;
          cov += wv * da * db;
        }
      const double num = (2 * mua * mub + c1) * (2 * cov + c2);
      const double den = (mua * mua + mub * mub + c1) * (va + vb + c2);
      acc += num / den;
      ++count;
    }
  return acc / static_cast<double>(count);
}

/// Log-spectral distance: RMS over all 2-D frequency bins of the
/// difference of log10 spectral magnitudes, averaged over channels.
inline double lsd(std::span<const double> a, std::span<const double> b,
                  std::size_t width, std::size_t height,
                  std::size_t channels = 3) {
  if (a.size() != b.size() || a.size() != width * height * channels)
    throw std::invalid_argument("lsd: shape mismatch");
  const std::size_t pixels = width * height;
  double total = 0.0;
  std::vector<double> fa(pixels), fb(pixels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < pixels; ++i) {
      fa[i] = a[i * channels + c];
      fb[i] = b[i * channels + c];
    }
    const auto sa = fft2(fa, height, width);
    const auto sb = fft2(fb, height, width);
    double acc = 0.0;
    for (std::size_t i = 0; i < sa.data.size(); ++i) {
      const double ma = std::max(std::abs(sa.data[i]), kSpectralFloor);
      const double mb = std::max(std::abs(sb.data[i]), kSpectralFloor);
      const double d = std::log10(ma) - std::log10(mb);
      acc += d * d;
    }
    total += std::sqrt(acc / static_cast<double>(sa.data.size()));
  }
  return total / static_cast<double>(channels);
}

/// Radially averaged power spectrum. Power convention:
/// p(f) = |F(f)|^2 / (P1 P2 W H) of the mean-subtracted field, so the sum
/// over the full 2-D spectrum (total_power) equals the field variance.
/// Radial bins hold the mean power over all integer-rounded radii up to
/// the Nyquist radius min(P1, P2) / 2; channels are averaged.
struct RadialSpectrum {
  std::vector<double> radii;
  std::vector<double> power;
  std::vector<std::size_t> counts;
  double total_power = 0.0;
  double fitted_alpha = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares slope of log power vs log radius over radii in
/// [r_lo, r_hi]; returns alpha (negated slope). The default fit range
/// excludes the DC bin and the top 10% of radii.
inline double psd_slope(const RadialSpectrum& spec, double r_lo, double r_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < spec.radii.size(); ++i) {
    const double r = spec.radii[i];
    if (r < r_lo || r > r_hi || r <= 0.0) continue;
    if (spec.power[i] <= 0.0) continue;
    const double x = std::log(r), y = std::log(spec.power[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("psd_slope: empty fit range");
  const double den = static_cast<double>(n) * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("psd_slope: degenerate fit");
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / den;
  return -slope;
}

inline double psd_slope(const RadialSpectrum& spec) {
  const double rmax = spec.radii.empty() ? 0.0 : spec.radii.back();
  return psd_slope(spec, 1.0, 0.9 * rmax);
}

inline RadialSpectrum radial_psd(std::span<const double> img,
                                 std::size_t width, std::size_t height,
                                 std::size_t channels = 1) {
  if (img.size() != width * height * channels || img.empty())
    throw std::invalid_argument("radial_psd: shape mismatch");
  const std::size_t pixels = width * height;
  RadialSpectrum out;
  std::vector<double> field(pixels);
  std::vector<double> power;
  std::size_t maxr = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) mean += img[i * channels + c];
    mean /= static_cast<double>(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
      field[i] = img[i * channels + c] - mean;
    const auto s = fft2(field, height, width);
    const double norm = static_cast<double>(s.rows) *
                        static_cast<double>(s.cols) *
                        static_cast<double>(pixels);
    if (c == 0) {
      maxr = std::min(s.rows, s.cols) / 2;
      out.radii.resize(maxr + 1);
      out.power.assign(maxr + 1, 0.0);
      out.counts.assign(maxr + 1, 0);
      for (std::size_t r = 0; r <= maxr; ++r)
        out.radii[r] = static_cast<double>(r);
    }
    for (std::size_t r = 0; r < s.rows; ++r) {
      const double fy = r <= s.rows / 2 ? static_cast<double>(r)
                                        : static_cast<double>(r) -
                                              static_cast<double>(s.rows);
      for (std::size_t cc = 0; cc < s.cols; ++cc) {
        const double fx = cc <= s.cols / 2 ? static_cast<double>(cc)
                                           : static_cast<double>(cc) -
                                                 static_cast<double>(s.cols);
        const double p = std::norm(s.at(r, cc)) / norm;
        out.total_power += p;
        const std::size_t rad = static_cast<std::size_t>(
            std::llround(std::sqrt(fx * fx + fy * fy)));
        if (rad <= maxr) {
          out.power[rad] += p;
          if (c == 0) out.counts[rad] += 1;
        }
      }
    }
  }
  out.total_power /= static_cast<double>(channels);
  for (std::size_t r = 0; r < out.power.size(); ++r)
    if (out.counts[r] > 0)
      out.power[r] /=
          static_cast<double>(out.counts[r]) * static_cast<double>(channels);
  try {
    out.fitted_alpha = psd_slope(out);
  } catch (const std::invalid_argument&) {
    // degenerate spectrum; alpha stays NaN
  }
  return out;
}

/// L1 distance between log10 radial power spectra.
inline double lpsd(std::span<const double> a, std::span<const double> b,
                   std::size_t width, std::size_t height,
                   std::size_t channels = 3) {
  if (a.size() != b.size())
    throw std::invalid_argument("lpsd: shape mismatch");
  const auto sa = radial_psd(a, width, height, channels);
  const auto sb = radial_psd(b, width, height, channels);
  double acc = 0.0;
  std::size_t n = 0;
  // The DC bin is exactly zero after mean subtraction; skip it.
  for (std::size_t i = 1; i < sa.power.size(); ++i) {
    if (sa.counts[i] == 0) continue;
    const double pa = std::max(sa.power[i], kSpectralFloor);
    const double pb = std::max(sb.power[i], kSpectralFloor);
    acc += std::fabs(std::log10(pa) - std::log10(pb));
    ++n;
  }
  return acc / static_cast<double>(n);
}

/// Interior intersection-over-union of two signed distance volumes;
/// interior means value < 0. An empty union counts as perfect agreement.
inline double sdf_iou(std::span<const double> pred,
                      std::span<const double> gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("sdf_iou: shape mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] < 0.0, b = gt[i] < 0.0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace peps
