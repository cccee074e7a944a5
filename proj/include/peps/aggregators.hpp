#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "peps/projection.hpp"
#include "peps/tape.hpp"

namespace peps {

/// Circular sub-vector: elements v[(i+t) mod d] for t in [0, j-i).
/// i and j may be negative; requires j > i.
inline std::vector<double> circular_slice(std::span<const double> v, long i,
                                          long j) {
  if (j <= i) throw std::out_of_range("circular_slice: requires j > i");
  const long d = static_cast<long>(v.size());
  std::vector<double> out(static_cast<std::size_t>(j - i));
  for (long t = 0; t < j - i; ++t) {
    long k = (i + t) % d;
    if (k < 0) k += d;
    out[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(k)];
  }
  return out;
}

/// Latent-dimension budget per frequency: a_0 = 0 and
/// a_n = max(1, floor(d_lat / u_n^alpha)) where u_n = phi_n / pi, so the
/// default ladder phi_n = 2^n pi yields a_n = max(1, floor(d_lat / 2^n)).
/// G_n is the running total of allocated dimensions.
struct PinkAllocation {
  std::vector<std::size_t> a;  // a[0] = 0, then a_1..a_L
  std::vector<std::size_t> G;  // prefix sums, G[0] = 0

  static PinkAllocation make(std::size_t d_lat,
                             const FrequencySchedule& schedule, double alpha) {
    if (d_lat < 1) throw config_error("pink allocation: d_lat must be >= 1");
    if (alpha < 0.0) throw config_error("pink allocation: alpha must be >= 0");
    PinkAllocation al;
    const std::size_t L = schedule.count();
    al.a.resize(L + 1, 0);
    al.G.resize(L + 1, 0);
    for (std::size_t n = 1; n <= L; ++n) {
      const double u = schedule.phi[n - 1] / std::numbers::pi;
      const double budget =
          std::floor(static_cast<double>(d_lat) / std::pow(u, alpha));
      al.a[n] = budget < 1.0 ? 1 : static_cast<std::size_t>(budget);
      al.G[n] = al.G[n - 1] + al.a[n];
    }
    return al;
  }

  std::size_t total() const { return G.empty() ? 0 : G.back(); }
};

enum class AggregatorKind { concat, pink, sum_all, sum_per_frequency };

/// How the sampled latent vectors are assembled into the MLP input.
struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::concat;
  double alpha = 1.0;  // pink only

  std::size_t output_dim(std::size_t d_lat, const FrequencySchedule& schedule,
                         bool include_origin = true) const {
    const std::size_t L = schedule.count();
    const std::size_t origin = include_origin ? 1 : 0;
    switch (kind) {
      case AggregatorKind::concat:
        return (2 * L + origin) * d_lat;
      case AggregatorKind::sum_all:
        return d_lat;
      case AggregatorKind::sum_per_frequency:
        return (L + origin) * d_lat;
      case AggregatorKind::pink:
        return origin * d_lat +
               2 * PinkAllocation::make(d_lat, schedule, alpha).total();
    }
    return 0;
  }
};

/// The Pink output dimension d_lat + 2 * sum(a_n).
inline std::size_t pink_dims(std::size_t d_lat,
                             const FrequencySchedule& schedule, double alpha) {
  return d_lat + 2 * PinkAllocation::make(d_lat, schedule, alpha).total();
}

/// Pink assembly: the origin latent in full, then per frequency i the
/// slices sin[-G_i:-G_{i-1}] and cos[G_{i-1}:G_i], in loop order
/// (sin_1, cos_1, sin_2, cos_2, ...).
inline std::vector<double> pink_aggregate(
    std::span<const double> origin_latent,
    std::span<const std::vector<double>> sin_latents,
    std::span<const std::vector<double>> cos_latents,
    const PinkAllocation& alloc) {
  const std::size_t L = alloc.a.size() - 1;
  if (sin_latents.size() != L || cos_latents.size() != L)
    throw config_error("pink_aggregate: latent count does not match allocation");
  // The origin may be absent (empty span) in the origin-free ablation.
  const std::size_t d = L > 0 ? sin_latents[0].size() : origin_latent.size();
  if (!origin_latent.empty() && origin_latent.size() != d)
    throw config_error("pink_aggregate: latent length mismatch");
  for (std::size_t i = 0; i < L; ++i)
    if (sin_latents[i].size() != d || cos_latents[i].size() != d)
      throw config_error("pink_aggregate: latent length mismatch");
  std::vector<double> out(origin_latent.begin(), origin_latent.end());
  for (std::size_t i = 1; i <= L; ++i) {
    const long gi = static_cast<long>(alloc.G[i]);
    const long gim1 = static_cast<long>(alloc.G[i - 1]);
    auto s = circular_slice(sin_latents[i - 1], -gi, -gim1);
    auto c = circular_slice(cos_latents[i - 1], gim1, gi);
    out.insert(out.end(), s.begin(), s.end());
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

/// Aggregates 2L+1 latents ordered (x, S_1..S_L, C_1..C_L). When
/// include_origin is false the list holds only the 2L projected latents.
inline std::vector<double> aggregate(
    const AggregatorSpec& spec, const FrequencySchedule& schedule,
    std::span<const std::vector<double>> latents, bool include_origin = true) {
  const std::size_t L = schedule.count();
  const std::size_t origin = include_origin ? 1 : 0;
  if (latents.size() != 2 * L + origin)
    throw config_error("aggregate: expected " +
                       std::to_string(2 * L + origin) + " latents, got " +
                       std::to_string(latents.size()));
  const std::size_t d = latents.empty() ? 0 : latents[0].size();
  for (const auto& l : latents)
    if (l.size() != d) throw config_error("aggregate: latent length mismatch");

  switch (spec.kind) {
    case AggregatorKind::concat: {
      std::vector<double> out;
      out.reserve(latents.size() * d);
      for (const auto& l : latents) out.insert(out.end(), l.begin(), l.end());
      return out;
    }
    case AggregatorKind::sum_all: {
      std::vector<double> out(d, 0.0);
      for (const auto& l : latents)
        for (std::size_t k = 0; k < d; ++k) out[k] += l[k];
      return out;
    }
    case AggregatorKind::sum_per_frequency: {
      std::vector<double> out;
      out.reserve((L + origin) * d);
      if (include_origin)
        out.insert(out.end(), latents[0].begin(), latents[0].end());
      for (std::size_t i = 0; i < L; ++i) {
        const auto& s = latents[origin + i];
        const auto& c = latents[origin + L + i];
        for (std::size_t k = 0; k < d; ++k) out.push_back(s[k] + c[k]);
      }
      return out;
    }
    case AggregatorKind::pink: {
      const auto alloc = PinkAllocation::make(d, schedule, spec.alpha);
      std::vector<std::vector<double>> sins(latents.begin() + origin,
                                            latents.begin() + origin + L);
      std::vector<std::vector<double>> coss(latents.begin() + origin + L,
                                            latents.end());
      static const std::vector<double> empty;
      std::span<const double> org =
          include_origin ? std::span<const double>(latents[0])
                         : std::span<const double>(empty);
      return pink_aggregate(org, sins, coss, alloc);
    }
  }
  throw config_error("aggregate: unknown aggregator kind");
}

namespace ad {

/// Tape-level aggregation over batched latents (each n x d_lat).
inline Val aggregate(Tape& t, const AggregatorSpec& spec,
                     const FrequencySchedule& schedule,
                     std::span<const Val> latents, bool include_origin = true) {
  const std::size_t L = schedule.count();
  const std::size_t origin = include_origin ? 1 : 0;
  if (latents.size() != 2 * L + origin)
    throw config_error("aggregate: latent count mismatch");
  switch (spec.kind) {
    case AggregatorKind::concat:
      return concat_cols(t, latents);
    case AggregatorKind::sum_all: {
      Val acc = latents[0];
      for (std::size_t i = 1; i < latents.size(); ++i)
        acc = add(t, acc, latents[i]);
      return acc;
    }
    case AggregatorKind::sum_per_frequency: {
      std::vector<Val> parts;
      if (include_origin) parts.push_back(latents[0]);
      for (std::size_t i = 0; i < L; ++i)
        parts.push_back(add(t, latents[origin + i], latents[origin + L + i]));
      return concat_cols(t, parts);
    }
    case AggregatorKind::pink: {
      const std::size_t d = t.node(latents[0]).cols;
      const auto alloc = PinkAllocation::make(d, schedule, spec.alpha);
      std::vector<Val> parts;
      if (include_origin) parts.push_back(latents[0]);
      for (std::size_t i = 1; i <= L; ++i) {
        const long gi = static_cast<long>(alloc.G[i]);
        const long gim1 = static_cast<long>(alloc.G[i - 1]);
        parts.push_back(circular_slice_cols(t, latents[origin + i - 1], -gi,
                                            static_cast<std::size_t>(gi - gim1)));
        parts.push_back(circular_slice_cols(t, latents[origin + L + i - 1],
                                            gim1,
                                            static_cast<std::size_t>(gi - gim1)));
      }
      return concat_cols(t, parts);
    }
  }
  throw config_error("aggregate: unknown aggregator kind");
}

}  // namespace ad

}  // namespace peps
