#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "peps/errors.hpp"
#include "peps/rng.hpp"

namespace peps {

/// A learnable dense array: row-major 64-bit values plus a same-shape
/// gradient accumulator. Gradients are additive across backward passes
/// until zero_grad() is called.
struct ParamTensor {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = true;

  ParamTensor() = default;

  explicit ParamTensor(std::vector<std::size_t> s, bool rg = true)
      : shape(std::move(s)), requires_grad(rg) {
    value.assign(count(shape), 0.0);
    grad.assign(value.size(), 0.0);
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t size() const { return value.size(); }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (double& v : value) v = rng.uniform(lo, hi);
  }
};

}  // namespace peps
