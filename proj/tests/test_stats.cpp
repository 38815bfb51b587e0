#include <doctest.h>

#include <cmath>
#include <vector>

#include "trialfit/optim.hpp"
#include "trialfit/rng.hpp"
#include "trialfit/stats.hpp"

using namespace trialfit;

namespace {

// independent oracle: 2D trapezoid quadrature of the bivariate normal density
double bvn_quadrature(double a, double b, double rho) {
  const int steps = 2000;
  const double lo = -8.0;
  const double det = 1.0 - rho * rho;
  const double norm = 1.0 / (2.0 * 3.14159265358979323846 * std::sqrt(det));
  auto density = [&](double x, double y) {
    return norm * std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det));
  };
  const double hx = (a - lo) / steps, hy = (b - lo) / steps;
  double sum = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double wx = (i == 0 || i == steps) ? 0.5 : 1.0;
    const double x = lo + i * hx;
    double inner = 0.0;
    for (int j = 0; j <= steps; ++j) {
      const double wy = (j == 0 || j == steps) ? 0.5 : 1.0;
      inner += wy * density(x, lo + j * hy);
    }
    sum += wx * inner;
  }
  return sum * hx * hy;
}

// independent oracle: full hypergeometric enumeration with Pascal's triangle
double fisher_oracle(long a, long b, long c, long d) {
  const long n = a + b + c + d;
  std::vector<std::vector<double>> choose(n + 1, std::vector<double>(n + 1, 0.0));
  for (long i = 0; i <= n; ++i) {
    choose[i][0] = 1.0;
    for (long j = 1; j <= i; ++j)
      choose[i][j] = choose[i - 1][j - 1] + (j <= i - 1 ? choose[i - 1][j] : 0.0);
  }
  const long r1 = a + b, r2 = c + d, c1 = a + c;
  const double total = choose[n][c1];
  auto prob = [&](long x) { return choose[r1][x] * choose[r2][c1 - x] / total; };
  const double p_obs = prob(a);
  double p = 0.0;
  for (long x = std::max(0L, c1 - r2); x <= std::min(r1, c1); ++x)
    if (prob(x) <= p_obs * (1.0 + 1e-7)) p += prob(x);
  return std::min(p, 1.0);
}

}  // namespace

TEST_CASE("normal distribution helpers") {
  CHECK(stats::norm_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(stats::norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(stats::norm_sf(1.2) == doctest::Approx(1.0 - stats::norm_cdf(1.2)));
  CHECK(stats::wald_p(0.0) == doctest::Approx(1.0));
}

TEST_CASE("chi-square and t tails") {
  CHECK(stats::chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(stats::chi2_sf(0.0, 3) == doctest::Approx(1.0));
  CHECK(stats::t_cdf(0.0, 7) == doctest::Approx(0.5));
  CHECK(stats::t_sf(2.0, 1e6) == doctest::Approx(stats::norm_sf(2.0)).epsilon(1e-4));
}

TEST_CASE("bivariate normal cdf against quadrature") {
  struct Case {
    double a, b, rho;
  };
  const Case cases[] = {{0.0, 0.0, 0.0},  {0.5, -0.3, 0.5}, {1.0, 1.0, -0.7},
                        {-1.2, 0.4, 0.95}, {2.0, -2.0, -0.95}, {0.3, 0.7, 0.2}};
  for (const auto& c : cases) {
    const double got = stats::bvn_cdf(c.a, c.b, c.rho);
    const double want = bvn_quadrature(c.a, c.b, c.rho);
    CAPTURE(c.a);
    CAPTURE(c.b);
    CAPTURE(c.rho);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
  CHECK(stats::bvn_cdf(0.0, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  // Phi2(a, inf-ish, rho) -> Phi(a)
  CHECK(stats::bvn_cdf(0.7, 36.0, 0.4) == doctest::Approx(stats::norm_cdf(0.7)).epsilon(1e-10));
}

TEST_CASE("fisher exact matches enumeration oracle") {
  // DERIVED example: [[1,9],[11,3]]
  CHECK(stats::fisher_exact_2x2({{{1, 9}, {11, 3}}}) ==
        doctest::Approx(fisher_oracle(1, 9, 11, 3)).epsilon(1e-10));
  // a handful of random tables
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const long a = static_cast<long>(rng.uniform_int(12));
    const long b = static_cast<long>(rng.uniform_int(12));
    const long c = static_cast<long>(rng.uniform_int(12));
    const long d = static_cast<long>(rng.uniform_int(12));
    if ((a + b) == 0 || (c + d) == 0) continue;
    const double got = stats::fisher_exact_2x2({{{a, b}, {c, d}}});
    const double want = fisher_oracle(a, b, c, d);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(c);
    CAPTURE(d);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("fisher exact trivial cases") {
  CHECK(stats::fisher_exact_2x2({{{5, 5}, {5, 5}}}) == doctest::Approx(1.0));
  CHECK(stats::fisher_exact_2x2({{{0, 0}, {7, 3}}}) == doctest::Approx(1.0));  // zero margin
}

TEST_CASE("fisher invariances") {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const long a = 1 + static_cast<long>(rng.uniform_int(10));
    const long b = 1 + static_cast<long>(rng.uniform_int(10));
    const long c = 1 + static_cast<long>(rng.uniform_int(10));
    const long d = 1 + static_cast<long>(rng.uniform_int(10));
    const double base = stats::fisher_exact_2x2({{{a, b}, {c, d}}});
    const double transposed = stats::fisher_exact_2x2({{{a, c}, {b, d}}});
    const double both_swapped = stats::fisher_exact_2x2({{{d, c}, {b, a}}});
    CHECK(base == doctest::Approx(transposed).epsilon(1e-12));
    CHECK(base == doctest::Approx(both_swapped).epsilon(1e-12));
  }
}

TEST_CASE("nelder-mead minimises a shifted quadratic") {
  auto f = [](const Eigen::VectorXd& x) {
    return (x(0) - 1.5) * (x(0) - 1.5) + 3.0 * (x(1) + 0.5) * (x(1) + 0.5);
  };
  auto res = optim::nelder_mead(f, Eigen::VectorXd::Zero(2));
  CHECK(res.converged);
  CHECK(res.x(0) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(res.x(1) == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("brent finds a scalar minimum") {
  auto res = optim::brent_min([](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, -1.0, 1.0);
  CHECK(res.x == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("rng determinism and substreams") {
  Rng a(123), b(123);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());

  // substream independent of sibling count
  const std::uint64_t s1 = Rng::derive(99, {5});
  const std::uint64_t s2 = Rng::derive(99, {5});
  CHECK(s1 == s2);
  CHECK(Rng::derive(99, {5}) != Rng::derive(99, {6}));
  CHECK(Rng::derive(99, {5, 1}) != Rng::derive(99, {5, 2}));
}

TEST_CASE("rng normal moments") {
  Rng rng(2024);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}
