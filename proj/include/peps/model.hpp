#pragma once

#include <span>
#include <vector>

#include "peps/encoders.hpp"
#include "peps/losses.hpp"
#include "peps/mlp.hpp"
#include "peps/signals.hpp"

namespace peps {

/// Encoder + MLP bound together; the complete coordinate-to-signal model.
struct Model {
  EncoderStack encoder;
  Mlp mlp;

  Val forward(Tape& t, std::span<const double> coords, std::size_t n) {
    return mlp.forward(t, encoder.encode(t, coords, n));
  }

  /// Batched inference without gradients; returns n x output_dim values.
  std::vector<double> predict(std::span<const double> coords, std::size_t n) {
    Tape t;
    Val out = forward(t, coords, n);
    return t.node(out).val;
  }

  std::vector<ParamTensor*> grid_params() {
    std::vector<ParamTensor*> out;
    encoder.collect_params(out);
    return out;
  }

  std::vector<ParamTensor*> mlp_params() { return mlp.params(); }

  std::vector<ParamTensor*> all_params() {
    auto out = grid_params();
    for (ParamTensor* p : mlp.params()) out.push_back(p);
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (ParamTensor* p : all_params()) n += p->size();
    return n;
  }

  /// Rounds every parameter through 32-bit floats; checkpoints store f32,
  /// so doing this before the final evaluation makes training-end reports
  /// match a reloaded checkpoint exactly.
  void round_params_to_f32() {
    for (ParamTensor* p : all_params())
      for (double& v : p->value) v = static_cast<double>(static_cast<float>(v));
  }

  /// Full-signal image reconstruction at pixel centers, clamped to [0,1].
  ImageSignal reconstruct_image(std::size_t width, std::size_t height,
                                std::size_t batch = 4096) {
    ImageSignal img(width, height);
    const std::size_t total = width * height;
    std::vector<double> coords;
    for (std::size_t start = 0; start < total; start += batch) {
      const std::size_t n = std::min(batch, total - start);
      coords.resize(n * 2);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pix = start + i;
        coords[i * 2] = (static_cast<double>(pix % width) + 0.5) /
                        static_cast<double>(width);
        coords[i * 2 + 1] = (static_cast<double>(pix / width) + 0.5) /
                            static_cast<double>(height);
      }
      auto vals = predict(coords, n);
      const std::size_t c = mlp.cfg.output_dim;
      for (std::size_t i = 0; i < n && c >= 3; ++i)
        for (std::size_t ch = 0; ch < 3; ++ch)
          img.values[(start + i) * 3 + ch] =
              std::clamp(vals[i * c + ch], 0.0, 1.0);
    }
    return img;
  }

  /// Reconstructs one texture layer (3 channels starting at layer*3).
  ImageSignal reconstruct_layer(std::size_t width, std::size_t height,
                                std::size_t layer, std::size_t batch = 4096) {
    ImageSignal img(width, height);
    const std::size_t total = width * height;
    const std::size_t c = mlp.cfg.output_dim;
    std::vector<double> coords;
    for (std::size_t start = 0; start < total; start += batch) {
      const std::size_t n = std::min(batch, total - start);
      coords.resize(n * 2);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pix = start + i;
        coords[i * 2] = (static_cast<double>(pix % width) + 0.5) /
                        static_cast<double>(width);
        coords[i * 2 + 1] = (static_cast<double>(pix / width) + 0.5) /
                            static_cast<double>(height);
      }
      auto vals = predict(coords, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < 3; ++ch)
          img.values[(start + i) * 3 + ch] =
              std::clamp(vals[i * c + layer * 3 + ch], 0.0, 1.0);
    }
    return img;
  }

  /// Predicted signed distances at every voxel center.
  SdfVolume reconstruct_volume(std::size_t resolution,
                               std::size_t batch = 4096) {
    SdfVolume vol(resolution);
    const std::size_t total = resolution * resolution * resolution;
    const double inv = 1.0 / static_cast<double>(resolution);
    std::vector<double> coords;
    for (std::size_t start = 0; start < total; start += batch) {
      const std::size_t n = std::min(batch, total - start);
      coords.resize(n * 3);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t v = start + i;
        const std::size_t x = v % resolution;
        const std::size_t y = (v / resolution) % resolution;
        const std::size_t z = v / (resolution * resolution);
        coords[i * 3] = (static_cast<double>(x) + 0.5) * inv;
        coords[i * 3 + 1] = (static_cast<double>(y) + 0.5) * inv;
        coords[i * 3 + 2] = (static_cast<double>(z) + 0.5) * inv;
      }
      auto vals = predict(coords, n);
      for (std::size_t i = 0; i < n; ++i) vol.values[start + i] = vals[i];
    }
    return vol;
  }
};

}  // namespace peps
