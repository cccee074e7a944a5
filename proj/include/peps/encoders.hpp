#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "peps/aggregators.hpp"
#include "peps/grids.hpp"
#include "peps/projection.hpp"
#include "peps/tape.hpp"

namespace peps {

enum class EncoderKind {
  identity,
  pe,
  bi_grid,
  ti_grid,
  hash_grid,
  concat_grid,
  multi_grid,
  multi_hash,
  lpe,
  ntc,
  peps
};

inline const char* encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::pe: return "pe";
    case EncoderKind::bi_grid: return "bi_grid";
    case EncoderKind::ti_grid: return "ti_grid";
    case EncoderKind::hash_grid: return "hash_grid";
    case EncoderKind::concat_grid: return "concat_grid";
    case EncoderKind::multi_grid: return "multi_grid";
    case EncoderKind::multi_hash: return "multi_hash";
    case EncoderKind::lpe: return "lpe";
    case EncoderKind::ntc: return "ntc";
    case EncoderKind::peps: return "peps";
  }
  return "?";
}

/// A learned positional-encoding backend. Composite kinds (peps, ntc,
/// multi_*) own their children; the peps wrapper shares one inner encoder
/// across all points of interest.
struct EncoderStack {
  EncoderKind kind = EncoderKind::identity;
  std::size_t dims = 2;  // input coordinate dimensionality

  std::unique_ptr<FeatureGrid> grid;           // bi/ti/concat/lpe
  std::unique_ptr<HashGrid> hash;              // hash_grid
  std::vector<FeatureGrid> levels;             // multi_grid, coarse to fine
  std::vector<HashGrid> hash_levels;           // multi_hash, coarse to fine
  std::unique_ptr<FeatureGrid> ntc_grid0;      // concatenation grid (finer)
  std::unique_ptr<FeatureGrid> ntc_grid1;      // interpolated grid (coarser)
  std::size_t image_size = 0;                  // ntc tiled-PE reference size
  FrequencySchedule pe_schedule;               // pe baseline frequencies

  std::unique_ptr<EncoderStack> inner;         // peps only
  FrequencySchedule schedule;                  // peps projection frequencies
  AggregatorSpec aggregator;                   // peps only
  bool include_origin = true;

  // ---- constructors --------------------------------------------------------

  static EncoderStack identity(std::size_t d) {
    EncoderStack e;
    e.kind = EncoderKind::identity;
    e.dims = d;
    return e;
  }

  static EncoderStack pe(std::size_t d, std::size_t frequencies) {
    EncoderStack e;
    e.kind = EncoderKind::pe;
    e.dims = d;
    e.pe_schedule = FrequencySchedule::dyadic(frequencies);
    return e;
  }

  static EncoderStack dense_grid(std::vector<std::size_t> res, std::size_t k,
                                 bool wrap = false) {
    EncoderStack e;
    e.kind = res.size() == 3 ? EncoderKind::ti_grid : EncoderKind::bi_grid;
    e.dims = res.size();
    e.grid = std::make_unique<FeatureGrid>(std::move(res), k);
    e.grid->wrap = wrap;
    return e;
  }

  static EncoderStack concat_grid(std::vector<std::size_t> res,
                                  std::size_t k) {
    EncoderStack e;
    e.kind = EncoderKind::concat_grid;
    e.dims = res.size();
    e.grid = std::make_unique<FeatureGrid>(std::move(res), k);
    return e;
  }

  static EncoderStack hash_grid(std::vector<std::size_t> res,
                                std::size_t table, std::size_t k) {
    EncoderStack e;
    e.kind = EncoderKind::hash_grid;
    e.dims = res.size();
    e.hash = std::make_unique<HashGrid>(std::move(res), table, k);
    return e;
  }

  static EncoderStack multi_grid(std::size_t d,
                                 std::span<const std::size_t> resolutions,
                                 std::size_t k) {
    EncoderStack e;
    e.kind = EncoderKind::multi_grid;
    e.dims = d;
    for (std::size_t r : resolutions)
      e.levels.emplace_back(std::vector<std::size_t>(d, r), k);
    return e;
  }

  static EncoderStack multi_hash(std::size_t d,
                                 std::span<const std::size_t> resolutions,
                                 std::size_t max_table, std::size_t k) {
    EncoderStack e;
    e.kind = EncoderKind::multi_hash;
    e.dims = d;
    for (std::size_t r : resolutions) {
      std::size_t nodes = 1;
      for (std::size_t a = 0; a < d; ++a) nodes *= r;
      e.hash_levels.emplace_back(std::vector<std::size_t>(d, r),
                                 std::min(nodes, max_table), k);
    }
    return e;
  }

  static EncoderStack lpe(std::vector<std::size_t> res, std::size_t k) {
    EncoderStack e;
    e.kind = EncoderKind::lpe;
    e.dims = res.size();
    e.grid = std::make_unique<FeatureGrid>(std::move(res), k);
    return e;
  }

  static EncoderStack ntc(std::vector<std::size_t> res0, std::size_t k0,
                          std::vector<std::size_t> res1, std::size_t k1,
                          std::size_t image_size) {
    if (res0.size() != res1.size())
      throw config_error("ntc: grids must share dimensionality");
    EncoderStack e;
    e.kind = EncoderKind::ntc;
    e.dims = res0.size();
    e.ntc_grid0 = std::make_unique<FeatureGrid>(std::move(res0), k0);
    e.ntc_grid1 = std::make_unique<FeatureGrid>(std::move(res1), k1);
    e.image_size = image_size;
    return e;
  }

  static EncoderStack peps(EncoderStack inner_encoder,
                           FrequencySchedule proj_schedule,
                           AggregatorSpec agg, bool with_origin = true) {
    EncoderStack e;
    e.kind = EncoderKind::peps;
    e.dims = inner_encoder.dims;
    e.inner = std::make_unique<EncoderStack>(std::move(inner_encoder));
    e.schedule = std::move(proj_schedule);
    e.aggregator = agg;
    e.include_origin = with_origin;
    return e;
  }

  // ---- parameters ----------------------------------------------------------

  void collect_params(std::vector<ParamTensor*>& out) {
    switch (kind) {
      case EncoderKind::identity:
      case EncoderKind::pe:
        return;
      case EncoderKind::bi_grid:
      case EncoderKind::ti_grid:
      case EncoderKind::concat_grid:
      case EncoderKind::lpe:
        out.push_back(&grid->storage);
        return;
      case EncoderKind::hash_grid:
        out.push_back(&hash->storage);
        return;
      case EncoderKind::multi_grid:
        for (auto& g : levels) out.push_back(&g.storage);
        return;
      case EncoderKind::multi_hash:
        for (auto& g : hash_levels) out.push_back(&g.storage);
        return;
      case EncoderKind::ntc:
        out.push_back(&ntc_grid0->storage);
        out.push_back(&ntc_grid1->storage);
        return;
      case EncoderKind::peps:
        inner->collect_params(out);
        return;
    }
  }

  std::size_t param_count() {
    std::vector<ParamTensor*> ps;
    collect_params(ps);
    std::size_t n = 0;
    for (ParamTensor* p : ps) n += p->size();
    return n;
  }

  void init(Rng& rng, double scale = 1e-4) {
    std::vector<ParamTensor*> ps;
    collect_params(ps);
    for (ParamTensor* p : ps)
      for (double& v : p->value) v = rng.uniform(-scale, scale);
  }

  // ---- reported output dimension -------------------------------------------

  std::size_t output_dim() const {
    switch (kind) {
      case EncoderKind::identity:
        return dims;
      case EncoderKind::pe:
        return 2 * pe_schedule.count() * dims;
      case EncoderKind::bi_grid:
      case EncoderKind::ti_grid:
        return grid->feat_dim;
      case EncoderKind::concat_grid:
        return (std::size_t{1} << dims) * grid->feat_dim;
      case EncoderKind::hash_grid:
        return hash->feat_dim;
      case EncoderKind::multi_grid: {
        std::size_t k = levels.empty() ? 0 : levels[0].feat_dim;
        return levels.size() * k;
      }
      case EncoderKind::multi_hash: {
        std::size_t k = hash_levels.empty() ? 0 : hash_levels[0].feat_dim;
        return hash_levels.size() * k;
      }
      case EncoderKind::lpe:
        return grid->feat_dim;
      case EncoderKind::ntc:
        return (std::size_t{1} << dims) * ntc_grid0->feat_dim +
               ntc_grid1->feat_dim + 3 * 2 * dims;
      case EncoderKind::peps:
        return aggregator.output_dim(inner->output_dim(), schedule,
                                     include_origin);
    }
    return 0;
  }

  void validate() const {
    switch (kind) {
      case EncoderKind::bi_grid:
        if (dims != 2) throw config_error("bi_grid requires 2-D coordinates");
        break;
      case EncoderKind::ti_grid:
        if (dims != 3) throw config_error("ti_grid requires 3-D coordinates");
        break;
      case EncoderKind::multi_grid:
        if (levels.empty()) throw config_error("multi_grid needs levels");
        for (const auto& g : levels)
          if (g.feat_dim != levels[0].feat_dim)
            throw config_error("multi_grid levels must share feat_dim");
        break;
      case EncoderKind::multi_hash:
        if (hash_levels.empty()) throw config_error("multi_hash needs levels");
        for (const auto& g : hash_levels)
          if (g.feat_dim != hash_levels[0].feat_dim)
            throw config_error("multi_hash levels must share feat_dim");
        break;
      case EncoderKind::ntc:
        if (image_size == 0)
          throw config_error("ntc needs the signal resolution for tiled PE");
        break;
      case EncoderKind::peps:
        if (!inner) throw config_error("peps needs an inner encoder");
        if (inner->dims != dims)
          throw config_error("peps inner encoder dimensionality mismatch");
        if (!include_origin && schedule.count() == 0)
          throw config_error("peps without origin needs frequencies");
        inner->validate();
        break;
      default:
        break;
    }
  }

  // ---- encoding --------------------------------------------------------------

  /// Batched encoding of n coordinates (row-major n x dims).
  Val encode(Tape& t, std::span<const double> coords, std::size_t n) {
    if (coords.size() != n * dims)
      throw config_error("encode: coordinate buffer size mismatch");
    switch (kind) {
      case EncoderKind::identity:
        return ad::constant(t, n, dims, coords);
      case EncoderKind::pe: {
        const std::size_t L = pe_schedule.count();
        std::vector<double> enc(n * 2 * L * dims);
        for (std::size_t i = 0; i < n; ++i) {
          auto row = ape(coords.subspan(i * dims, dims), pe_schedule);
          std::copy(row.begin(), row.end(), enc.begin() + i * row.size());
        }
        return ad::constant(t, n, 2 * L * dims, enc);
      }
      case EncoderKind::bi_grid:
      case EncoderKind::ti_grid:
        return ad::grid_gather(t, *grid, coords, n);
      case EncoderKind::concat_grid:
        return ad::concat_grid_gather(t, *grid, coords, n);
      case EncoderKind::hash_grid:
        return ad::hash_gather(t, *hash, coords, n);
      case EncoderKind::multi_grid: {
        std::vector<Val> parts;
        for (auto& g : levels)
          parts.push_back(ad::grid_gather(t, g, coords, n));
        return parts.size() == 1 ? parts[0] : ad::concat_cols(t, parts);
      }
      case EncoderKind::multi_hash: {
        std::vector<Val> parts;
        for (auto& g : hash_levels)
          parts.push_back(ad::hash_gather(t, g, coords, n));
        return parts.size() == 1 ? parts[0] : ad::concat_cols(t, parts);
      }
      case EncoderKind::lpe: {
        Val lat = ad::grid_gather(t, *grid, coords, n);
        std::vector<double> mask(n * grid->feat_dim);
        for (std::size_t i = 0; i < n; ++i)
          local_pe_row(coords.subspan(i * dims, dims),
                       {mask.data() + i * grid->feat_dim, grid->feat_dim});
        return ad::hadamard(t, lat, ad::constant(t, n, grid->feat_dim, mask));
      }
      case EncoderKind::ntc: {
        Val c0 = ad::concat_grid_gather(t, *ntc_grid0, coords, n);
        Val c1 = ad::grid_gather(t, *ntc_grid1, coords, n);
        const auto tiled = tiled_pe_schedule();
        std::vector<double> enc(n * 3 * 2 * dims);
        for (std::size_t i = 0; i < n; ++i) {
          auto row = ape(coords.subspan(i * dims, dims), tiled);
          std::copy(row.begin(), row.end(), enc.begin() + i * row.size());
        }
        Val pe_part = ad::constant(t, n, 3 * 2 * dims, enc);
        std::vector<Val> parts = {c0, c1, pe_part};
        return ad::concat_cols(t, parts);
      }
      case EncoderKind::peps:
        return encode_peps(t, coords, n);
    }
    throw config_error("encode: unknown encoder kind");
  }

  /// The last three dyadic frequencies relative to the signal resolution:
  /// phi = 2^i pi for i in {M-2, M-1, M} with 2^M >= image_size.
  FrequencySchedule tiled_pe_schedule() const {
    std::size_t m = 1;
    while ((std::size_t{1} << m) < image_size) ++m;
    if (m < 3) m = 3;
    std::vector<double> phis;
    for (std::size_t i = m - 2; i <= m; ++i)
      phis.push_back(std::pow(2.0, static_cast<double>(i)) * std::numbers::pi);
    return FrequencySchedule::from_phis(std::move(phis));
  }

  /// LocalPE mask: positional encoding of the coordinate's offset within
  /// its grid cell, laid out in frequency blocks of 2*dims entries
  /// (sin, cos per axis) and truncated to feat_dim.
  void local_pe_row(std::span<const double> x, std::span<double> out) const {
    const std::size_t k = out.size();
    double frac[3];
    for (std::size_t a = 0; a < dims; ++a)
      frac[a] = detail::locate(x[a], grid->res[a], grid->wrap).frac;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t freq_idx = j / (2 * dims);
      const std::size_t within = j % (2 * dims);
      const std::size_t axis = within / 2;
      const double phi =
          std::pow(2.0, static_cast<double>(freq_idx + 1)) * std::numbers::pi;
      out[j] = (within % 2 == 0) ? std::sin(frac[axis] * phi)
                                 : std::cos(frac[axis] * phi);
    }
  }

 private:
  Val encode_peps(Tape& t, std::span<const double> coords, std::size_t n) {
    const std::size_t L = schedule.count();
    auto points = project_batch(coords, n, dims, schedule);

    // Pink over a plain dense grid samples only the needed feature slice
    // of each latent; other inners fall back to full vectors + slicing.
    const bool partial =
        aggregator.kind == AggregatorKind::pink &&
        (inner->kind == EncoderKind::bi_grid ||
         inner->kind == EncoderKind::ti_grid);
    if (partial) {
      FeatureGrid& g = *inner->grid;
      const std::size_t k = g.feat_dim;
      const auto alloc = PinkAllocation::make(k, schedule, aggregator.alpha);
      std::vector<Val> parts;
      if (include_origin)
        parts.push_back(ad::grid_gather(t, g, points[0], n));
      for (std::size_t i = 1; i <= L; ++i) {
        const std::size_t len = alloc.a[i];
        const long k_l = static_cast<long>(k);
        const long s_start = ((-static_cast<long>(alloc.G[i])) % k_l + k_l) % k_l;
        const long c_start = static_cast<long>(alloc.G[i - 1]) % k_l;
        parts.push_back(ad::grid_gather(t, g, points[i], n,
                                        static_cast<std::size_t>(s_start), len));
        parts.push_back(ad::grid_gather(t, g, points[L + i], n,
                                        static_cast<std::size_t>(c_start), len));
      }
      return parts.size() == 1 ? parts[0] : ad::concat_cols(t, parts);
    }

    std::vector<Val> latents;
    const std::size_t first = include_origin ? 0 : 1;
    for (std::size_t p = first; p < points.size(); ++p)
      latents.push_back(inner->encode(t, points[p], n));
    if (L == 0 && include_origin) return latents[0];
    return ad::aggregate(t, aggregator, schedule, latents, include_origin);
  }
};

}  // namespace peps
