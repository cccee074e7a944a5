#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "peps/tape.hpp"
#include "peps/tensor.hpp"

namespace peps {

/// Dense lattice of learnable latent vectors; storage shape
/// (res_1, ..., res_d, feat_dim) row-major.
struct FeatureGrid {
  std::vector<std::size_t> res;
  std::size_t feat_dim = 0;
  ParamTensor storage;
  bool wrap = false;  // wrapped neighbors instead of clamped ones

  FeatureGrid() = default;

  FeatureGrid(std::vector<std::size_t> resolution, std::size_t k)
      : res(std::move(resolution)), feat_dim(k) {
    auto shape = res;
    shape.push_back(k);
    storage = ParamTensor(std::move(shape));
  }

  std::size_t dims() const { return res.size(); }

  void init(Rng& rng, double scale = 1e-4) {
    storage.fill_uniform(rng, -scale, scale);
  }

  /// Flat index of the feature vector stored at lattice node `v`.
  std::size_t node_offset(std::span<const std::size_t> v) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < res.size(); ++a) idx = idx * res[a] + v[a];
    return idx * feat_dim;
  }
};

namespace detail {

/// Per-axis cell location: lower/upper node index and the fractional
/// position. Fractions within 1e-9 of a node are snapped so exact lattice
/// coordinates reproduce stored vectors bit-exactly.
///
/// Clamped mode maps x in [0,1] onto lattice coordinate x*(r-1); wrapped
/// mode treats the axis as periodic with nodes at i/r and a seam cell
/// [r-1, 0].
struct AxisCell {
  std::size_t lo, hi;
  double frac;
};

inline AxisCell locate(double x, std::size_t r, bool wrap) {
  AxisCell c{0, 0, 0.0};
  if (r <= 1) return c;
  x = std::clamp(x, 0.0, 1.0);
  double t = x * static_cast<double>(wrap ? r : r - 1);
  const double nearest = std::round(t);
  if (std::fabs(t - nearest) < 1e-9) t = nearest;
  const double fl = std::floor(t);
  std::size_t lo = static_cast<std::size_t>(fl);
  double frac = t - fl;
  if (wrap) {
    lo %= r;
    c.lo = lo;
    c.hi = (lo + 1) % r;
    c.frac = frac;
    return c;
  }
  if (lo >= r - 1) {  // x == 1.0 after snapping
    lo = r - 2;
    frac = 1.0;
  }
  c.lo = lo;
  c.hi = lo + 1;
  c.frac = frac;
  return c;
}

/// Corner offsets are enumerated lexicographically: bit a of the corner
/// id selects lo/hi along axis a (axis 0 is the most significant bit).
inline void corner_index_weight(const FeatureGrid& g,
                                const AxisCell* cells, std::size_t corner,
                                std::size_t& offset, double& weight) {
  const std::size_t d = g.dims();
  std::size_t idx = 0;
  double w = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    const bool hi = (corner >> (d - 1 - a)) & 1u;
    idx = idx * g.res[a] + (hi ? cells[a].hi : cells[a].lo);
    w *= hi ? cells[a].frac : 1.0 - cells[a].frac;
  }
  offset = idx * g.feat_dim;
  weight = w;
}

}  // namespace detail

/// Multilinear interpolation of the 2^d surrounding latent vectors.
inline std::vector<double> grid_sample(const FeatureGrid& g,
                                       std::span<const double> x) {
  if (x.size() != g.dims())
    throw config_error("grid_sample: coordinate dimensionality mismatch");
  const std::size_t d = g.dims();
  detail::AxisCell cells[3];
  for (std::size_t a = 0; a < d; ++a)
    cells[a] = detail::locate(x[a], g.res[a], g.wrap);
  std::vector<double> out(g.feat_dim, 0.0);
  const std::size_t corners = std::size_t{1} << d;
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t off;
    double w;
    detail::corner_index_weight(g, cells, c, off, w);
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < g.feat_dim; ++k)
      out[k] += w * g.storage.value[off + k];
  }
  return out;
}

/// The 2^d corner vectors concatenated in lexicographic corner order,
/// no interpolation.
inline std::vector<double> concat_grid_sample(const FeatureGrid& g,
                                              std::span<const double> x) {
  if (x.size() != g.dims())
    throw config_error("concat_grid_sample: coordinate dimensionality mismatch");
  const std::size_t d = g.dims();
  detail::AxisCell cells[3];
  for (std::size_t a = 0; a < d; ++a)
    cells[a] = detail::locate(x[a], g.res[a], g.wrap);
  const std::size_t corners = std::size_t{1} << d;
  std::vector<double> out(corners * g.feat_dim);
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t off;
    double w;
    detail::corner_index_weight(g, cells, c, off, w);
    std::copy(g.storage.value.begin() + off,
              g.storage.value.begin() + off + g.feat_dim,
              out.begin() + c * g.feat_dim);
  }
  return out;
}

/// Spatially hashed lattice: feature vectors live in a table of
/// `table_size` slots. When the lattice fits the table the mapping falls
/// back to dense row-major indexing (and is then injective); otherwise
/// corners map through the XOR-of-primes hash.
struct HashGrid {
  std::vector<std::size_t> res;
  std::size_t table_size = 0;
  std::size_t feat_dim = 0;
  ParamTensor storage;
  bool wrap = false;

  HashGrid() = default;

  HashGrid(std::vector<std::size_t> resolution, std::size_t table,
           std::size_t k)
      : res(std::move(resolution)), table_size(table), feat_dim(k) {
    storage = ParamTensor({table_size, feat_dim});
  }

  std::size_t dims() const { return res.size(); }

  void init(Rng& rng, double scale = 1e-4) {
    storage.fill_uniform(rng, -scale, scale);
  }

  bool dense() const {
    std::size_t n = 1;
    for (std::size_t r : res) n *= r;
    return n <= table_size;
  }

  std::size_t slot(std::span<const std::size_t> v) const {
    if (dense()) {
      std::size_t idx = 0;
      for (std::size_t a = 0; a < res.size(); ++a) idx = idx * res[a] + v[a];
      return idx;
    }
    static constexpr std::uint32_t primes[3] = {1u, 2654435761u, 805459861u};
    std::uint32_t h = 0;
    for (std::size_t a = 0; a < res.size(); ++a)
      h ^= static_cast<std::uint32_t>(v[a]) * primes[a];
    return h % static_cast<std::uint32_t>(table_size);
  }
};

inline std::vector<double> hash_sample(const HashGrid& g,
                                       std::span<const double> x) {
  if (x.size() != g.dims())
    throw config_error("hash_sample: coordinate dimensionality mismatch");
  const std::size_t d = g.dims();
  detail::AxisCell cells[3];
  for (std::size_t a = 0; a < d; ++a)
    cells[a] = detail::locate(x[a], g.res[a], g.wrap);
  std::vector<double> out(g.feat_dim, 0.0);
  const std::size_t corners = std::size_t{1} << d;
  std::size_t corner_v[3];
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      const bool hi = (c >> (d - 1 - a)) & 1u;
      corner_v[a] = hi ? cells[a].hi : cells[a].lo;
      w *= hi ? cells[a].frac : 1.0 - cells[a].frac;
    }
    const std::size_t off = g.slot({corner_v, d}) * g.feat_dim;
    for (std::size_t k = 0; k < g.feat_dim; ++k)
      out[k] += w * g.storage.value[off + k];
  }
  return out;
}

// ---- batched tape ops -----------------------------------------------------

namespace ad {

/// Batched multilinear gather of feature dims [feat_start, feat_start+len)
/// taken circularly mod feat_dim; differentiable w.r.t. grid storage.
inline Val grid_gather(Tape& t, FeatureGrid& g, std::span<const double> coords,
                       std::size_t n, std::size_t feat_start,
                       std::size_t feat_len) {
  const std::size_t d = g.dims();
  if (coords.size() != n * d)
    throw config_error("grid_gather: coordinate buffer size mismatch");
  const std::size_t corners = std::size_t{1} << d;
  Val v = t.emplace("grid_gather", n, feat_len, g.storage.requires_grad);
  Tape::Node& node = t.node(v);

  std::vector<std::size_t> feat(feat_len);
  for (std::size_t k = 0; k < feat_len; ++k)
    feat[k] = (feat_start + k) % g.feat_dim;

  std::vector<std::size_t> offs(n * corners);
  std::vector<double> wts(n * corners);
  peps::detail::AxisCell cells[3];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      cells[a] = peps::detail::locate(coords[i * d + a], g.res[a], g.wrap);
    for (std::size_t c = 0; c < corners; ++c)
      peps::detail::corner_index_weight(g, cells, c, offs[i * corners + c],
                                  wts[i * corners + c]);
    double* out = node.val.data() + i * feat_len;
    for (std::size_t c = 0; c < corners; ++c) {
      const double w = wts[i * corners + c];
      if (w == 0.0) continue;
      const double* src = g.storage.value.data() + offs[i * corners + c];
      for (std::size_t k = 0; k < feat_len; ++k) out[k] += w * src[feat[k]];
    }
  }
  if (node.needs_grad) {
    FeatureGrid* gp = &g;
    node.backward = [gp, offs = std::move(offs), wts = std::move(wts),
                     feat = std::move(feat), n, corners,
                     feat_len](Tape&, Tape::Node& self) {
      double* gg = gp->storage.grad.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gi = self.grad.data() + i * feat_len;
        for (std::size_t c = 0; c < corners; ++c) {
          const double w = wts[i * corners + c];
          if (w == 0.0) continue;
          double* dst = gg + offs[i * corners + c];
          for (std::size_t k = 0; k < feat_len; ++k)
            dst[feat[k]] += w * gi[k];
        }
      }
    };
  }
  return v;
}

inline Val grid_gather(Tape& t, FeatureGrid& g, std::span<const double> coords,
                       std::size_t n) {
  return grid_gather(t, g, coords, n, 0, g.feat_dim);
}

/// Batched corner concatenation (no interpolation): n x (2^d * k).
inline Val concat_grid_gather(Tape& t, FeatureGrid& g,
                              std::span<const double> coords, std::size_t n) {
  const std::size_t d = g.dims();
  if (coords.size() != n * d)
    throw config_error("concat_grid_gather: coordinate buffer size mismatch");
  const std::size_t corners = std::size_t{1} << d;
  const std::size_t k = g.feat_dim;
  Val v = t.emplace("concat_grid_gather", n, corners * k,
                    g.storage.requires_grad);
  Tape::Node& node = t.node(v);
  std::vector<std::size_t> offs(n * corners);
  peps::detail::AxisCell cells[3];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      cells[a] = peps::detail::locate(coords[i * d + a], g.res[a], g.wrap);
    double* out = node.val.data() + i * corners * k;
    for (std::size_t c = 0; c < corners; ++c) {
      double w;
      peps::detail::corner_index_weight(g, cells, c, offs[i * corners + c], w);
      const double* src = g.storage.value.data() + offs[i * corners + c];
      std::copy(src, src + k, out + c * k);
    }
  }
  if (node.needs_grad) {
    FeatureGrid* gp = &g;
    node.backward = [gp, offs = std::move(offs), n, corners,
                     k](Tape&, Tape::Node& self) {
      double* gg = gp->storage.grad.data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < corners; ++c) {
          const double* gi = self.grad.data() + (i * corners + c) * k;
          double* dst = gg + offs[i * corners + c];
          for (std::size_t j = 0; j < k; ++j) dst[j] += gi[j];
        }
    };
  }
  return v;
}

/// Batched multilinear gather through the hash table.
inline Val hash_gather(Tape& t, HashGrid& g, std::span<const double> coords,
                       std::size_t n) {
  const std::size_t d = g.dims();
  if (coords.size() != n * d)
    throw config_error("hash_gather: coordinate buffer size mismatch");
  const std::size_t corners = std::size_t{1} << d;
  const std::size_t k = g.feat_dim;
  Val v = t.emplace("hash_gather", n, k, g.storage.requires_grad);
  Tape::Node& node = t.node(v);
  std::vector<std::size_t> offs(n * corners);
  std::vector<double> wts(n * corners);
  peps::detail::AxisCell cells[3];
  std::size_t corner_v[3];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      cells[a] = peps::detail::locate(coords[i * d + a], g.res[a], g.wrap);
    double* out = node.val.data() + i * k;
    for (std::size_t c = 0; c < corners; ++c) {
      double w = 1.0;
      for (std::size_t a = 0; a < d; ++a) {
        const bool hi = (c >> (d - 1 - a)) & 1u;
        corner_v[a] = hi ? cells[a].hi : cells[a].lo;
        w *= hi ? cells[a].frac : 1.0 - cells[a].frac;
      }
      const std::size_t off = g.slot({corner_v, d}) * k;
      offs[i * corners + c] = off;
      wts[i * corners + c] = w;
      if (w == 0.0) continue;
      const double* src = g.storage.value.data() + off;
      for (std::size_t j = 0; j < k; ++j) out[j] += w * src[j];
    }
  }
  if (node.needs_grad) {
    HashGrid* gp = &g;
    node.backward = [gp, offs = std::move(offs), wts = std::move(wts), n,
                     corners, k](Tape&, Tape::Node& self) {
      double* gg = gp->storage.grad.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gi = self.grad.data() + i * k;
        for (std::size_t c = 0; c < corners; ++c) {
          const double w = wts[i * corners + c];
          if (w == 0.0) continue;
          double* dst = gg + offs[i * corners + c];
          for (std::size_t j = 0; j < k; ++j) dst[j] += w * gi[j];
        }
      }
    };
  }
  return v;
}

}  // namespace ad

}  // namespace peps
