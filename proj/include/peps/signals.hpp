#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "peps/errors.hpp"
#include "peps/grids.hpp"
#include "peps/image_io.hpp"
#include "peps/rng.hpp"

namespace peps {

/// Named texture layers of equal resolution stacked into a 3k-channel
/// signal. Layers are kept sorted by name so the channel layout does not
/// depend on load order.
struct TextureSet {
  struct Layer {
    std::string name;
    ImageSignal image;
  };
  std::vector<Layer> layers;

  std::size_t width() const { return layers.empty() ? 0 : layers[0].image.width; }
  std::size_t height() const {
    return layers.empty() ? 0 : layers[0].image.height;
  }
  std::size_t value_dim() const { return 3 * layers.size(); }

  void add(std::string name, ImageSignal img) {
    if (!layers.empty() && (img.width != width() || img.height != height()))
      throw config_error("texture set: layer '" + name +
                         "' resolution differs from the set");
    layers.push_back({std::move(name), std::move(img)});
    std::sort(layers.begin(), layers.end(),
              [](const Layer& a, const Layer& b) { return a.name < b.name; });
  }
};

/// Loads a texture set from a directory holding a manifest file (one image
/// filename per line, '#' comments allowed) and the listed images.
inline TextureSet load_texture_set(const std::string& dir,
                                   const std::string& manifest = "layers.txt") {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::ifstream in(base / manifest);
  if (!in) throw io_error("cannot open texture manifest: " +
                          (base / manifest).string());
  TextureSet set;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() &&
           std::isspace(static_cast<unsigned char>(line[start])))
      ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    ImageSignal img = load_image((base / line).string());
    set.add(fs::path(line).stem().string(), std::move(img));
  }
  if (set.layers.empty())
    throw io_error("texture manifest lists no layers: " + dir);
  return set;
}

/// Cubic volume of signed distances; voxel centers at (i + 0.5) / N,
/// row-major with x fastest: index = (z * N + y) * N + x.
struct SdfVolume {
  std::size_t resolution = 0;
  std::vector<double> values;

  SdfVolume() = default;
  explicit SdfVolume(std::size_t n)
      : resolution(n), values(n * n * n, 0.0) {}

  double& at(std::size_t x, std::size_t y, std::size_t z) {
    return values[(z * resolution + y) * resolution + x];
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return values[(z * resolution + y) * resolution + x];
  }
};

// ---- SDFV volume format -----------------------------------------------------
// 16-byte header: magic "SDFV", u32 version (= 1), u32 N, u32 reserved,
// then N^3 32-bit little-endian floats.

inline void save_volume(const std::string& path, const SdfVolume& vol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write volume: " + path);
  const char magic[4] = {'S', 'D', 'F', 'V'};
  const std::uint32_t version = 1;
  const std::uint32_t n = static_cast<std::uint32_t>(vol.resolution);
  const std::uint32_t reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  std::vector<float> payload(vol.values.begin(), vol.values.end());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * 4));
  if (!out) throw io_error(path + ": short write");
}

inline SdfVolume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open volume: " + path);
  char magic[4];
  std::uint32_t version = 0, n = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, "SDFV", 4) != 0)
    throw io_error(path + ": bad magic at offset 0, expected \"SDFV\"");
  if (version != 1)
    throw io_error(path + ": unsupported SDFV version " +
                   std::to_string(version) + " at offset 4");
  if (n == 0) throw io_error(path + ": zero resolution at offset 8");
  SdfVolume vol(n);
  std::vector<float> payload(vol.values.size());
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * 4));
  if (static_cast<std::size_t>(in.gcount()) != payload.size() * 4)
    throw io_error(path + ": payload truncated, expected " +
                   std::to_string(payload.size() * 4) + " bytes at offset 16");
  std::copy(payload.begin(), payload.end(), vol.values.begin());
  return vol;
}

// ---- analytic SDF shapes ----------------------------------------------------

struct SdfSphere {
  std::array<double, 3> center;
  double radius;
  double operator()(double x, double y, double z) const {
    const double dx = x - center[0], dy = y - center[1], dz = z - center[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz) - radius;
  }
};

struct SdfTorus {
  std::array<double, 3> center;
  double major, minor;  // ring radius / tube radius, axis along z
  double operator()(double x, double y, double z) const {
    const double dx = x - center[0], dy = y - center[1], dz = z - center[2];
    const double q = std::sqrt(dx * dx + dy * dy) - major;
    return std::sqrt(q * q + dz * dz) - minor;
  }
};

struct SdfBox {
  std::array<double, 3> center;
  std::array<double, 3> half_extents;
  double operator()(double x, double y, double z) const {
    const double q[3] = {std::fabs(x - center[0]) - half_extents[0],
                         std::fabs(y - center[1]) - half_extents[1],
                         std::fabs(z - center[2]) - half_extents[2]};
    const double outside = std::sqrt(std::pow(std::max(q[0], 0.0), 2) +
                                     std::pow(std::max(q[1], 0.0), 2) +
                                     std::pow(std::max(q[2], 0.0), 2));
    const double inside = std::min(std::max({q[0], q[1], q[2]}), 0.0);
    return outside + inside;
  }
};

/// Evaluates an exact signed distance at every voxel center.
template <class Shape>
SdfVolume analytic_sdf(const Shape& shape, std::size_t resolution) {
  if (resolution == 0)
    throw std::invalid_argument("analytic_sdf: resolution must be positive");
  SdfVolume vol(resolution);
  const double inv = 1.0 / static_cast<double>(resolution);
  for (std::size_t z = 0; z < resolution; ++z)
    for (std::size_t y = 0; y < resolution; ++y)
      for (std::size_t x = 0; x < resolution; ++x)
        vol.at(x, y, z) = shape((x + 0.5) * inv, (y + 0.5) * inv,
                                (z + 0.5) * inv);
  return vol;
}

inline SdfVolume analytic_sphere(std::array<double, 3> c, double r,
                                 std::size_t n) {
  if (r <= 0.0) throw std::invalid_argument("sphere: radius must be positive");
  return analytic_sdf(SdfSphere{c, r}, n);
}

inline SdfVolume analytic_torus(std::array<double, 3> c, double major,
                                double minor, std::size_t n) {
  if (major <= 0.0 || minor <= 0.0 || minor >= major)
    throw std::invalid_argument("torus: need 0 < minor < major");
  return analytic_sdf(SdfTorus{c, major, minor}, n);
}

inline SdfVolume analytic_box(std::array<double, 3> c,
                              std::array<double, 3> he, std::size_t n) {
  for (double h : he)
    if (h <= 0.0)
      throw std::invalid_argument("box: half extents must be positive");
  return analytic_sdf(SdfBox{c, he}, n);
}

// ---- ground-truth sampling --------------------------------------------------

namespace detail {

/// Center-convention axis lookup: continuous x in [0,1] lands at
/// t = x * n - 0.5 on the sample lattice, clamped at the borders.
inline AxisCell locate_center(double x, std::size_t n) {
  AxisCell c{0, 0, 0.0};
  if (n <= 1) return c;
  double t = x * static_cast<double>(n) - 0.5;
  t = std::clamp(t, 0.0, static_cast<double>(n - 1));
  const double nearest = std::round(t);
  if (std::fabs(t - nearest) < 1e-9) t = nearest;
  const double fl = std::floor(t);
  std::size_t lo = static_cast<std::size_t>(fl);
  double frac = t - fl;
  if (lo >= n - 1) {
    lo = n - 2;
    frac = 1.0;
  }
  c.lo = lo;
  c.hi = lo + 1;
  c.frac = frac;
  return c;
}

}  // namespace detail

/// Bilinear ground-truth fetch from an image; x = (u, v) with u along
/// width. Out-of-range coordinates clamp to the border.
inline void sample_image(const ImageSignal& img, std::span<const double> x,
                         std::span<double> out) {
  const auto cu = detail::locate_center(x[0], img.width);
  const auto cv = detail::locate_center(x[1], img.height);
  const double w00 = (1 - cu.frac) * (1 - cv.frac);
  const double w10 = cu.frac * (1 - cv.frac);
  const double w01 = (1 - cu.frac) * cv.frac;
  const double w11 = cu.frac * cv.frac;
  for (std::size_t c = 0; c < 3; ++c)
    out[c] = w00 * img.at(cv.lo, cu.lo, c) + w10 * img.at(cv.lo, cu.hi, c) +
             w01 * img.at(cv.hi, cu.lo, c) + w11 * img.at(cv.hi, cu.hi, c);
}

/// Trilinear ground-truth fetch from a volume.
inline double sample_volume(const SdfVolume& vol, std::span<const double> x) {
  const auto cx = detail::locate_center(x[0], vol.resolution);
  const auto cy = detail::locate_center(x[1], vol.resolution);
  const auto cz = detail::locate_center(x[2], vol.resolution);
  double acc = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const bool bx = corner & 1, by = corner & 2, bz = corner & 4;
    const double w = (bx ? cx.frac : 1 - cx.frac) *
                     (by ? cy.frac : 1 - cy.frac) *
                     (bz ? cz.frac : 1 - cz.frac);
    if (w == 0.0) continue;
    acc += w * vol.at(bx ? cx.hi : cx.lo, by ? cy.hi : cy.lo,
                      bz ? cz.hi : cz.lo);
  }
  return acc;
}

/// Ground truth plus its coordinate sampler for one training task.
class SignalDataset {
 public:
  enum class Task { image, texture_set, sdf };

  explicit SignalDataset(const ImageSignal& img)
      : task_(Task::image), image_(&img) {}
  explicit SignalDataset(const TextureSet& set)
      : task_(Task::texture_set), textures_(&set) {}
  explicit SignalDataset(const SdfVolume& vol)
      : task_(Task::sdf), volume_(&vol) {}

  Task task() const { return task_; }
  std::size_t dims() const { return task_ == Task::sdf ? 3 : 2; }
  std::size_t value_dim() const {
    switch (task_) {
      case Task::image: return 3;
      case Task::texture_set: return textures_->value_dim();
      case Task::sdf: return 1;
    }
    return 0;
  }

  const ImageSignal* image() const { return image_; }
  const TextureSet* textures() const { return textures_; }
  const SdfVolume* volume() const { return volume_; }

  std::size_t grid_width() const {
    return task_ == Task::sdf ? volume_->resolution
           : task_ == Task::image ? image_->width
                                  : textures_->width();
  }
  std::size_t grid_height() const {
    return task_ == Task::sdf ? volume_->resolution
           : task_ == Task::image ? image_->height
                                  : textures_->height();
  }

  void sample_ground_truth(std::span<const double> x,
                           std::span<double> out) const {
    switch (task_) {
      case Task::image:
        sample_image(*image_, x, out);
        return;
      case Task::texture_set: {
        std::size_t off = 0;
        for (const auto& layer : textures_->layers) {
          sample_image(layer.image, x, out.subspan(off, 3));
          off += 3;
        }
        return;
      }
      case Task::sdf:
        out[0] = sample_volume(*volume_, x);
        return;
    }
  }

  /// Image/texture batches draw uniform pixel centers; SDF batches draw
  /// uniform continuous coordinates in [0,1]^3.
  void sample_coordinates(Rng& rng, std::size_t n,
                          std::vector<double>& coords) const {
    const std::size_t d = dims();
    coords.resize(n * d);
    if (task_ == Task::sdf) {
      for (double& c : coords) c = rng.uniform();
      return;
    }
    const std::size_t w = grid_width(), h = grid_height();
    for (std::size_t i = 0; i < n; ++i) {
      coords[i * 2] = (static_cast<double>(rng.below(w)) + 0.5) /
                      static_cast<double>(w);
      coords[i * 2 + 1] = (static_cast<double>(rng.below(h)) + 0.5) /
                          static_cast<double>(h);
    }
  }

  void sample_batch(Rng& rng, std::size_t n, std::vector<double>& coords,
                    std::vector<double>& values) const {
    sample_coordinates(rng, n, coords);
    values.resize(n * value_dim());
    for (std::size_t i = 0; i < n; ++i)
      sample_ground_truth(
          std::span<const double>(coords.data() + i * dims(), dims()),
          std::span<double>(values.data() + i * value_dim(), value_dim()));
  }

 private:
  Task task_;
  const ImageSignal* image_ = nullptr;
  const TextureSet* textures_ = nullptr;
  const SdfVolume* volume_ = nullptr;
};

}  // namespace peps
