#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rkpr/parallel.hpp"
#include "rkpr/random.hpp"
#include "rkpr/stats.hpp"

using namespace rkpr;

TEST_CASE("streams are reproducible and index-separated") {
  RandomStream a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    all_equal = all_equal && (x == b.normal());
    any_diff = any_diff || (x != c.normal());
  }
  CHECK(all_equal);
  CHECK(any_diff);

  RandomStream s1(1, 0), s2(1, 0);
  const auto v1 = sample_sphere_vector(16, s1);
  const auto v2 = sample_sphere_vector(16, s2);
  CHECK(v1 == v2);
}

TEST_CASE("sphere vector basics") {
  CHECK_THROWS_AS([] { RandomStream rs(0, 0); return sample_sphere_vector(0, rs); }(),
                  std::invalid_argument);

  RandomStream rs(9, 0);
  int plus = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto v = sample_sphere_vector(1, rs);
    REQUIRE(v.size() == 1);
    CHECK(std::fabs(v[0]) == Catch::Approx(1.0).epsilon(1e-12));
    if (v[0] > 0.0) ++plus;
  }
  // Both signs occur, roughly balanced.
  CHECK(plus > 400);
  CHECK(plus < 600);

  for (std::int64_t d : {2, 16, 1000}) {
    for (int i = 0; i < 20; ++i) {
      const auto v = sample_sphere_vector(d, rs);
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      CHECK(n2 == Catch::Approx(static_cast<double>(d)).epsilon(1e-9));
    }
  }
}

TEST_CASE("sphere coordinate second moment", "[mc]") {
  // E[a_1^2] = 1 by exchangeability; d = 1000, 1e6 draws, 4 SE.
  const std::int64_t n = 1000000;
  const int shards = 50;
  const std::int64_t per_shard = n / shards;
  std::vector<double> sums(shards, 0.0), sums_sq(shards, 0.0);
  parallel_for(shards, [&](std::int64_t shard) {
    RandomStream rs(SeededStream{1234, static_cast<std::uint64_t>(shard)});
    double s = 0.0, q = 0.0;
    for (std::int64_t i = 0; i < per_shard; ++i) {
      const auto v = sample_sphere_vector(1000, rs);
      s += v[0] * v[0];
      q += v[0] * v[0] * v[0] * v[0];
    }
    sums[shard] = s;
    sums_sq[shard] = q;
  });
  double s = 0.0, q = 0.0;
  for (int i = 0; i < shards; ++i) {
    s += sums[i];
    q += sums_sq[i];
  }
  const double nn = static_cast<double>(per_shard) * shards;
  const double mean = s / nn;
  const double se = std::sqrt((q / nn - mean * mean) / nn);
  CHECK(std::fabs(mean - 1.0) <= 4.0 * se);
}

TEST_CASE("two-coordinate marginal basics") {
  RandomStream rs(5, 0);
  CHECK_THROWS_AS(sample_uv_marginal(2, rs), std::invalid_argument);

  for (std::int64_t d : {3, 10, 100}) {
    for (int i = 0; i < 2000; ++i) {
      const auto [u, v] = sample_uv_marginal(d, rs);
      CHECK(u * u + v * v <= static_cast<double>(d));
    }
  }
}

TEST_CASE("marginal moments", "[mc]") {
  RandomStream rs(6, 0);
  const std::int64_t n = 1000000;
  double su2 = 0.0, qu2 = 0.0, suv = 0.0, quv = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto [u, v] = sample_uv_marginal(1000, rs);
    su2 += u * u;
    qu2 += u * u * u * u;
    suv += u * v;
    quv += u * v * u * v;
  }
  const double nn = static_cast<double>(n);
  const double m_u2 = su2 / nn;
  CHECK(std::fabs(m_u2 - 1.0) <= 4.0 * std::sqrt((qu2 / nn - m_u2 * m_u2) / nn));
  const double m_uv = suv / nn;
  CHECK(std::fabs(m_uv) <= 4.0 * std::sqrt((quv / nn - m_uv * m_uv) / nn));
}

TEST_CASE("marginal agrees with the full-vector sampler coordinatewise", "[mc]") {
  const std::int64_t n = 100000;
  const std::int64_t d = 25;
  std::vector<double> full_u(n), full_v(n), marg_u(n), marg_v(n);
  RandomStream rs_full(77, 0), rs_marg(78, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto vec = sample_sphere_vector(d, rs_full);
    full_u[i] = vec[0];
    full_v[i] = vec[1];
    const auto [u, v] = sample_uv_marginal(d, rs_marg);
    marg_u[i] = u;
    marg_v[i] = v;
  }
  const double threshold = ks_two_sample_threshold(0.001, n, n);
  CHECK(ks_two_sample(full_u, marg_u) < threshold);
  CHECK(ks_two_sample(full_v, marg_v) < threshold);
}

TEST_CASE("marginal is asymptotically standard normal", "[mc]") {
  // d = 1e5: the first coordinate is within Kolmogorov distance 0.01 of a
  // standard normal.
  const std::int64_t n = 1000000;
  std::vector<double> us(n);
  RandomStream rs(79, 0);
  for (auto& u : us) u = sample_uv_marginal(100000, rs).first;
  CHECK(ks_one_sample(std::move(us), normal_cdf) <= 0.01);
}

TEST_CASE("gaussian sampler", "[mc]") {
  RandomStream rs(80, 0);
  const std::int64_t n = 1000000;
  double s = 0.0, q = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double g = sample_gaussian(rs);
    s += g;
    q += g * g;
  }
  const double nn = static_cast<double>(n);
  CHECK(std::fabs(s / nn) <= 4.0 / std::sqrt(nn));
  CHECK(q / nn == Catch::Approx(1.0).epsilon(0.01));

  RandomStream r1(81, 3), r2(81, 3);
  for (int i = 0; i < 100; ++i) CHECK(sample_gaussian(r1) == sample_gaussian(r2));
}

TEST_CASE("gamma sampler sanity", "[mc]") {
  RandomStream rs(82, 0);
  // shape 1/2 exercises the boosted branch used at d = 3.
  for (double shape : {0.5, 3.0, 999.0}) {
    const std::int64_t n = 200000;
    double s = 0.0, q = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double g = rs.gamma(shape, 2.0);
      s += g;
      q += g * g;
    }
    const double nn = static_cast<double>(n);
    const double mean = s / nn;
    const double se = std::sqrt((q / nn - mean * mean) / nn);
    CHECK(std::fabs(mean - 2.0 * shape) <= 4.0 * se);
  }
}
