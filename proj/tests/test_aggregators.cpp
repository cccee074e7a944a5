#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <vector>

#include "peps/aggregators.hpp"
#include "peps/rng.hpp"

using namespace peps;

namespace {

// Brute-force reference: materializes full latent vectors and picks the
// slice elements directly by the mod-d index rule.
std::vector<double> pink_oracle(const std::vector<std::vector<double>>& lats,
                                const FrequencySchedule& s, double alpha,
                                bool include_origin) {
  const std::size_t L = s.count();
  const std::size_t origin = include_origin ? 1 : 0;
  const long d = static_cast<long>(lats[origin].size());
  std::vector<long> a(L + 1, 0), G(L + 1, 0);
  for (std::size_t n = 1; n <= L; ++n) {
    const double u = s.phi[n - 1] / std::numbers::pi;
    a[n] = std::max<long>(
        1, static_cast<long>(std::floor(d / std::pow(u, alpha))));
    G[n] = G[n - 1] + a[n];
  }
  std::vector<double> out;
  if (include_origin) out = lats[0];
  for (std::size_t i = 1; i <= L; ++i) {
    for (long t = -G[i]; t < -G[i - 1]; ++t)
      out.push_back(lats[origin + i - 1][((t % d) + d) % d]);
    for (long t = G[i - 1]; t < G[i]; ++t)
      out.push_back(lats[origin + L + i - 1][((t % d) + d) % d]);
  }
  return out;
}

std::vector<std::vector<double>> random_latents(Rng& rng, std::size_t count,
                                                std::size_t d) {
  std::vector<std::vector<double>> lats(count, std::vector<double>(d));
  for (auto& l : lats)
    for (double& v : l) v = rng.uniform(-2.0, 2.0);
  return lats;
}

}  // namespace

TEST_CASE("circular_slice basics, wrap and negative indices") {
  const std::vector<double> v = {0, 1, 2, 3};
  REQUIRE(circular_slice(v, 1, 3) == std::vector<double>{1, 2});
  REQUIRE(circular_slice(v, 3, 5) == std::vector<double>{3, 0});
  REQUIRE(circular_slice(v, -2, 0) == std::vector<double>{2, 3});
  REQUIRE_THROWS_AS(circular_slice(v, 2, 2), std::out_of_range);
  REQUIRE_THROWS_AS(circular_slice(v, 3, 1), std::out_of_range);
}

TEST_CASE("pink allocation for d=8 over the default ladder is (4,2,1)") {
  auto s = FrequencySchedule::dyadic(3);
  auto al = PinkAllocation::make(8, s, 1.0);
  REQUIRE(al.a == std::vector<std::size_t>{0, 4, 2, 1});
  REQUIRE(al.G == std::vector<std::size_t>{0, 4, 6, 7});
}

TEST_CASE("pink_dims reproduces the worked arithmetic") {
  auto s = FrequencySchedule::dyadic(3);
  REQUIRE(pink_dims(8, s, 1.0) == 22);
  REQUIRE(pink_dims(8, s, 0.0) == 56);
  REQUIRE(pink_dims(8, s, 2.0) == 16);  // a = (2, 1, 1)
}

TEST_CASE("pink_dims at alpha=0 equals the concatenation dimension") {
  for (std::size_t L = 0; L <= 6; ++L) {
    auto s = FrequencySchedule::dyadic(L);
    for (std::size_t d = 1; d <= 64; ++d)
      REQUIRE(pink_dims(d, s, 0.0) == (2 * L + 1) * d);
  }
}

TEST_CASE("allocations stay >= 1 and shrink as alpha grows") {
  auto s = FrequencySchedule::dyadic(5);
  std::size_t prev = SIZE_MAX;
  for (double alpha : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    auto al = PinkAllocation::make(12, s, alpha);
    for (std::size_t n = 1; n < al.a.size(); ++n) REQUIRE(al.a[n] >= 1);
    const std::size_t dim = pink_dims(12, s, alpha);
    REQUIRE(dim <= prev);
    prev = dim;
  }
}

TEST_CASE("pink_aggregate matches the slice-materializing oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 1 + rng.below(5);
    const std::size_t d = 1 + rng.below(24);
    const double alpha = rng.uniform(0.0, 2.5);
    auto s = FrequencySchedule::dyadic(L);
    auto lats = random_latents(rng, 2 * L + 1, d);
    auto alloc = PinkAllocation::make(d, s, alpha);
    std::vector<std::vector<double>> sins(lats.begin() + 1,
                                          lats.begin() + 1 + L);
    std::vector<std::vector<double>> coss(lats.begin() + 1 + L, lats.end());
    auto got = pink_aggregate(lats[0], sins, coss, alloc);
    auto want = pink_oracle(lats, s, alpha, true);
    REQUIRE(got == want);
    REQUIRE(got.size() == pink_dims(d, s, alpha));
  }
}

TEST_CASE("worked pink example: d=8, L=3, alpha=1 gives 22 values") {
  auto s = FrequencySchedule::dyadic(3);
  Rng rng(4);
  auto lats = random_latents(rng, 7, 8);
  AggregatorSpec spec{AggregatorKind::pink, 1.0};
  auto out = aggregate(spec, s, lats);
  REQUIRE(out.size() == 22);
  REQUIRE(out == pink_oracle(lats, s, 1.0, true));
}

TEST_CASE("alpha=0 slices degenerate to full latent vectors") {
  auto s = FrequencySchedule::dyadic(2);
  Rng rng(8);
  auto lats = random_latents(rng, 5, 6);
  AggregatorSpec pink0{AggregatorKind::pink, 0.0};
  auto out = aggregate(pink0, s, lats);
  REQUIRE(out.size() == 5 * 6);
  // Loop order is x, S_1, C_1, S_2, C_2; every slice is the whole vector.
  std::vector<double> expect = lats[0];
  for (std::size_t i = 0; i < 2; ++i) {
    expect.insert(expect.end(), lats[1 + i].begin(), lats[1 + i].end());
    expect.insert(expect.end(), lats[3 + i].begin(), lats[3 + i].end());
  }
  REQUIRE(out == expect);
}

TEST_CASE("all-zero latents aggregate to a zero vector of pink length") {
  auto s = FrequencySchedule::dyadic(3);
  std::vector<std::vector<double>> lats(7, std::vector<double>(8, 0.0));
  AggregatorSpec spec{AggregatorKind::pink, 1.0};
  auto out = aggregate(spec, s, lats);
  REQUIRE(out.size() == 22);
  for (double v : out) REQUIRE(v == 0.0);
}

TEST_CASE("concat of 7 latents of dimension 17 has 119 entries") {
  auto s = FrequencySchedule::dyadic(3);
  Rng rng(2);
  auto lats = random_latents(rng, 7, 17);
  AggregatorSpec spec{AggregatorKind::concat};
  REQUIRE(aggregate(spec, s, lats).size() == 119);
}

TEST_CASE("sum_all of repeated unit vectors scales them") {
  auto s = FrequencySchedule::dyadic(3);
  std::vector<std::vector<double>> lats(7, std::vector<double>{1, 0, 0});
  AggregatorSpec spec{AggregatorKind::sum_all};
  auto out = aggregate(spec, s, lats);
  REQUIRE(out == std::vector<double>{7, 0, 0});
}

TEST_CASE("sum_per_frequency keeps origin plus one slot per frequency") {
  auto s = FrequencySchedule::dyadic(3);
  Rng rng(13);
  auto lats = random_latents(rng, 7, 8);
  AggregatorSpec spec{AggregatorKind::sum_per_frequency};
  auto out = aggregate(spec, s, lats);
  REQUIRE(out.size() == 32);
  for (std::size_t k = 0; k < 8; ++k) {
    REQUIRE(out[k] == Catch::Approx(lats[0][k]));
    REQUIRE(out[8 + k] == Catch::Approx(lats[1][k] + lats[4][k]));
  }
}

TEST_CASE("aggregate validates latent count and lengths") {
  auto s = FrequencySchedule::dyadic(2);
  AggregatorSpec spec{AggregatorKind::concat};
  std::vector<std::vector<double>> three(3, std::vector<double>(4, 0.0));
  REQUIRE_THROWS_AS(aggregate(spec, s, three), config_error);
  std::vector<std::vector<double>> bad(5, std::vector<double>(4, 0.0));
  bad[2].resize(3);
  REQUIRE_THROWS_AS(aggregate(spec, s, bad), config_error);
}

TEST_CASE("tape aggregation matches the plain implementation") {
  Rng rng(31);
  for (auto kind : {AggregatorKind::concat, AggregatorKind::pink,
                    AggregatorKind::sum_all, AggregatorKind::sum_per_frequency})
    for (bool origin : {true, false}) {
      const std::size_t L = 1 + rng.below(4);
      const std::size_t d = 2 + rng.below(12);
      const std::size_t n = 3;
      auto s = FrequencySchedule::dyadic(L);
      AggregatorSpec spec{kind, 1.0};
      const std::size_t count = 2 * L + (origin ? 1 : 0);

      std::vector<std::vector<double>> batch_rows(n);
      Tape t;
      std::vector<Val> vals;
      std::vector<std::vector<std::vector<double>>> per_row(
          n, std::vector<std::vector<double>>(count));
      for (std::size_t p = 0; p < count; ++p) {
        std::vector<double> m(n * d);
        for (double& v : m) v = rng.uniform(-1.0, 1.0);
        for (std::size_t r = 0; r < n; ++r)
          per_row[r][p] = std::vector<double>(m.begin() + r * d,
                                              m.begin() + (r + 1) * d);
        vals.push_back(ad::constant(t, n, d, m));
      }
      Val out = ad::aggregate(t, spec, s, vals, origin);
      for (std::size_t r = 0; r < n; ++r) {
        auto want = aggregate(spec, s, per_row[r], origin);
        REQUIRE(t.node(out).cols == want.size());
        for (std::size_t c = 0; c < want.size(); ++c)
          REQUIRE(t.node(out).val[r * want.size() + c] == want[c]);
      }
    }
}
