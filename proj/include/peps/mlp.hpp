#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "peps/rng.hpp"
#include "peps/tape.hpp"
#include "peps/tensor.hpp"

namespace peps {

enum class Activation { leaky_relu, gelu, silu };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::gelu: return "gelu";
    case Activation::silu: return "silu";
  }
  return "?";
}

struct MLPConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 64;
  std::size_t output_dim = 1;
  Activation activation = Activation::leaky_relu;
  double leaky_slope = 0.01;
};

/// Affine + activation stack with a linear final layer. Weights use
/// Xavier-uniform initialization, biases start at zero.
struct Mlp {
  MLPConfig cfg;
  std::vector<ParamTensor> weights;
  std::vector<ParamTensor> biases;

  Mlp() = default;

  explicit Mlp(MLPConfig c, Rng& rng) : cfg(c) {
    if (cfg.input_dim == 0 || cfg.output_dim == 0)
      throw config_error("mlp: input_dim and output_dim must be positive");
    std::size_t in = cfg.input_dim;
    for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
      append_layer(in, cfg.hidden_width, rng);
      in = cfg.hidden_width;
    }
    append_layer(in, cfg.output_dim, rng);
  }

  Val forward(Tape& t, Val x) {
    if (t.node(x).cols != cfg.input_dim)
      throw config_error("mlp: feature length " +
                         std::to_string(t.node(x).cols) +
                         " does not match input_dim " +
                         std::to_string(cfg.input_dim));
    Val h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      h = ad::add_rowvec(t, ad::matmul(t, h, ad::leaf(t, weights[l])),
                         ad::leaf(t, biases[l]));
      if (l + 1 < weights.size()) h = activate(t, h);
    }
    return h;
  }

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.push_back(&weights[l]);
      out.push_back(&biases[l]);
    }
    return out;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

 private:
  void append_layer(std::size_t in, std::size_t out, Rng& rng) {
    ParamTensor w({in, out});
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    w.fill_uniform(rng, -bound, bound);
    weights.push_back(std::move(w));
    biases.emplace_back(std::vector<std::size_t>{out});
  }

  Val activate(Tape& t, Val h) {
    switch (cfg.activation) {
      case Activation::leaky_relu: return ad::leaky_relu(t, h, cfg.leaky_slope);
      case Activation::gelu: return ad::gelu(t, h);
      case Activation::silu: return ad::silu(t, h);
    }
    return h;
  }
};

}  // namespace peps
