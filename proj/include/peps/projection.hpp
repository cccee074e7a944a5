#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "peps/errors.hpp"

namespace peps {

/// The angular coefficients phi_i used by the positional encoding,
/// strictly increasing. The default ladder is phi_i = 2^i * pi for
/// i = 1..L, i.e. plain frequencies f_i = phi_i / (2 pi) = 2^(i-1).
struct FrequencySchedule {
  std::vector<double> phi;

  static FrequencySchedule dyadic(std::size_t L) {
    FrequencySchedule s;
    s.phi.reserve(L);
    double p = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < L; ++i) {
      s.phi.push_back(p);
      p *= 2.0;
    }
    return s;
  }

  static FrequencySchedule from_phis(std::vector<double> phis) {
    for (std::size_t i = 1; i < phis.size(); ++i)
      if (!(phis[i] > phis[i - 1]))
        throw config_error("frequency schedule must be strictly increasing");
    FrequencySchedule s;
    s.phi = std::move(phis);
    return s;
  }

  std::size_t count() const { return phi.size(); }

  /// Plain frequency f_i = phi_i / (2 pi), 0-based index.
  double freq(std::size_t i) const {
    return phi[i] / (2.0 * std::numbers::pi);
  }
};

/// The 2L+1 coordinate points (x, S_1..S_L, C_1..C_L) with
/// S_i = (1 + sin(x phi_i)) / 2 and C_i = (1 + cos(x phi_i)) / 2,
/// applied componentwise. Every S/C component lies in [0, 1].
struct PointsOfInterest {
  std::vector<std::vector<double>> points;
};

inline void check_finite(std::span<const double> x, const char* who) {
  for (double c : x)
    if (std::isnan(c) || std::isinf(c))
      throw std::invalid_argument(std::string(who) +
                                  ": non-finite input coordinate");
}

inline PointsOfInterest project(std::span<const double> x,
                                const FrequencySchedule& schedule) {
  check_finite(x, "project");
  const std::size_t L = schedule.count();
  PointsOfInterest p;
  p.points.reserve(2 * L + 1);
  p.points.emplace_back(x.begin(), x.end());
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<double> s(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
      s[a] = 0.5 * (1.0 + std::sin(x[a] * schedule.phi[i]));
    p.points.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<double> c(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
      c[a] = 0.5 * (1.0 + std::cos(x[a] * schedule.phi[i]));
    p.points.push_back(std::move(c));
  }
  return p;
}

/// Batched projection: coords is n x d row-major. Returns 2L+1 coordinate
/// matrices of the same layout, in (x, S_1.., C_1..) order.
inline std::vector<std::vector<double>> project_batch(
    std::span<const double> coords, std::size_t n, std::size_t d,
    const FrequencySchedule& schedule) {
  check_finite(coords, "project");
  const std::size_t L = schedule.count();
  std::vector<std::vector<double>> out(2 * L + 1);
  out[0].assign(coords.begin(), coords.end());
  for (std::size_t i = 0; i < L; ++i) {
    const double phi = schedule.phi[i];
    auto& s = out[1 + i];
    auto& c = out[1 + L + i];
    s.resize(n * d);
    c.resize(n * d);
    for (std::size_t j = 0; j < n * d; ++j) {
      s[j] = 0.5 * (1.0 + std::sin(coords[j] * phi));
      c[j] = 0.5 * (1.0 + std::cos(coords[j] * phi));
    }
  }
  return out;
}

/// Raw (unshifted) absolute positional encoding, axis-major layout:
/// for each axis a, for each frequency i: sin(x_a phi_i), cos(x_a phi_i).
/// Length 2 * L * d.
inline std::vector<double> ape(std::span<const double> x,
                               const FrequencySchedule& schedule) {
  check_finite(x, "ape");
  const std::size_t L = schedule.count();
  std::vector<double> out;
  out.reserve(2 * L * x.size());
  for (double xa : x)
    for (std::size_t i = 0; i < L; ++i) {
      out.push_back(std::sin(xa * schedule.phi[i]));
      out.push_back(std::cos(xa * schedule.phi[i]));
    }
  return out;
}

/// Curve traced by (sin(p_x phi), sin(p_y phi)) as phi sweeps
/// [phi_min, phi_max] in `samples` uniform steps (endpoints included).
inline std::vector<std::array<double, 2>> lissajous_curve(
    std::array<double, 2> p, double phi_min, double phi_max,
    std::size_t samples) {
  check_finite(std::span<const double>(p.data(), 2), "lissajous_curve");
  if (samples < 2)
    throw std::invalid_argument("lissajous_curve: samples must be >= 2");
  if (!(phi_min < phi_max))
    throw std::invalid_argument("lissajous_curve: phi_min must be < phi_max");
  std::vector<std::array<double, 2>> out(samples);
  const double step = (phi_max - phi_min) / static_cast<double>(samples - 1);
  for (std::size_t t = 0; t < samples; ++t) {
    const double phi = phi_min + step * static_cast<double>(t);
    out[t] = {std::sin(p[0] * phi), std::sin(p[1] * phi)};
  }
  return out;
}

/// Largest pointwise gap (max abs component difference) between the two
/// curves sampled over [0, phi_max].
inline double lissajous_gap(std::array<double, 2> p, std::array<double, 2> q,
                            double phi_max, std::size_t samples) {
  auto cp = lissajous_curve(p, 0.0, phi_max, samples);
  auto cq = lissajous_curve(q, 0.0, phi_max, samples);
  double gap = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    gap = std::max(gap, std::fabs(cp[t][0] - cq[t][0]));
    gap = std::max(gap, std::fabs(cp[t][1] - cq[t][1]));
  }
  return gap;
}

/// True iff the sampled curves of two distinct points differ by more than
/// 1e-6 somewhere. Callers are expected to pass lattice points of the
/// x = n t, y = m t form; distinct such points always separate given a
/// sufficient phi_max / sample budget.
inline bool lissajous_distinct(std::array<double, 2> p,
                               std::array<double, 2> q,
                               double phi_max = 16.0 * std::numbers::pi,
                               std::size_t samples = 4096) {
  if (p[0] == q[0] && p[1] == q[1])
    throw std::invalid_argument(
        "lissajous_distinct: points must be distinct");
  return lissajous_gap(p, q, phi_max, samples) > 1e-6;
}

}  // namespace peps
