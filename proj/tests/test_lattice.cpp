#include <doctest.h>

#include <cmath>
#include <numbers>
#include <limits>
#include <map>
#include <random>

#include "plw/lattice.hpp"
#include "plw/quadrature.hpp"

using namespace plw;

namespace {

constexpr double kPi = std::numbers::pi;

// Oracles built from plain sums, independent of the library's series logic.
double direct_periodic(double x, double v, double s) {
  double acc = 0;
  for (int k = -400; k <= 400; ++k) {
    double d = x - k * v;
    acc += std::exp(-d * d / (2 * s * s));
  }
  return acc / (std::sqrt(2 * kPi) * s);
}

double direct_flatness(double v, double s) {
  double worst = 0;
  for (int i = 0; i <= 4000; ++i) {
    double x = -0.5 * v + v * i / 4000.0;
    worst = std::max(worst, std::fabs(v * direct_periodic(x, v, s) - 1));
  }
  return worst;
}

double riemann_entropy(double v, double s, int n) {
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    double x = -0.5 * v + v * (i + 0.5) / n;
    double f = direct_periodic(x, v, s);
    acc -= f * std::log2(f);
  }
  return acc * v / n;
}

double gauss_bits(double s) { return 0.5 * std::log2(2 * kPi * std::numbers::e * s * s); }

}  // namespace

TEST_CASE("theta series") {
  CHECK(theta_series(1, 1e6) == doctest::Approx(1.0).epsilon(1e-15));
  double oracle = 0;
  for (int k = -8; k <= 8; ++k) oracle += std::exp(-kPi * k * k);
  CHECK(std::fabs(theta_series(1, 1) - oracle) < 1e-14);
  CHECK(std::fabs(theta_series(1, 1) - 1.0864348112133080) < 1e-14);
  CHECK(theta_series(2, 1) == doctest::Approx(theta_series(1, 4)).epsilon(1e-15));
  CHECK(theta_series(3, 0.01) >= 1.0);
  CHECK_THROWS_AS(theta_series(0, 1), std::domain_error);
  CHECK_THROWS_AS(theta_series(1, -1), std::domain_error);
}

TEST_CASE("theta scaling identity on a grid") {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> U(0.05, 3.0);
  for (int i = 0; i < 200; ++i) {
    double v = U(g), tau = U(g);
    CHECK(theta_series(v, tau) == doctest::Approx(theta_series(1, v * v * tau)).epsilon(1e-14));
  }
}

TEST_CASE("flatness factor") {
  CHECK(flatness_factor(1, 3) < 1e-15);
  CHECK(std::fabs(flatness_factor(1, 0.5) - 0.0143837720622287) < 1e-12);
  CHECK(std::fabs(flatness_factor(1, 0.5) - direct_flatness(1, 0.5)) < 1e-8);
  CHECK_THROWS_AS(flatness_factor(-1, 1), std::domain_error);
  CHECK_THROWS_AS(flatness_factor(1, 0), std::domain_error);
  double prev = 1e300;
  for (double s = 0.05; s < 3; s += 0.01) {
    double e = flatness_factor(1, s);
    CHECK(e >= 0);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("flatness factor matches max over the region") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> V(0.5, 4.0), R(0.15, 1.5);
  for (int i = 0; i < 25; ++i) {
    double v = V(g), s = R(g) * v;
    CHECK(std::fabs(flatness_factor(v, s) - direct_flatness(v, s)) < 1e-8);
  }
}

TEST_CASE("aliased entropy limits and oracle") {
  CHECK(std::fabs(aliased_entropy(1, 10)) < 1e-6);
  CHECK(std::fabs(aliased_entropy(8, 0.1) - gauss_bits(0.1)) < 1e-6);
  double h = aliased_entropy(1, 0.5);
  CHECK(std::fabs(h - riemann_entropy(1, 0.5, 20000)) < 1e-6);
  CHECK(std::fabs(h - (-7.46227139810338513e-5)) < 1e-9);
}

TEST_CASE("aliased entropy stays below both limits") {
  for (double v : {0.25, 1.0, 2.5, 8.0})
    for (double s = 0.05; s < 6; s *= 1.3) {
      double h = aliased_entropy(v, s);
      CHECK(h <= std::min(gauss_bits(s), std::log2(v)) + 1e-9);
      CHECK(aliasing_loss(v, s) >= 0);
      CHECK(mod_capacity(v, s) >= 0);
      CHECK(std::fabs(mod_capacity(v, s) - aliasing_loss(v, s) - (std::log2(v) - gauss_bits(s))) <
            1e-9);
    }
}

TEST_CASE("mod capacity") {
  CHECK(mod_capacity(1, 10) < 1e-6);
  CHECK(std::fabs(mod_capacity(1, 0.1) + 0.5 * std::log2(2 * kPi * std::numbers::e * 0.01)) < 1e-5);
  CHECK(std::fabs(mod_capacity(1, 0.1) - 1.27483500027722360) < 1e-9);
  // per-level capacities along a chain are nonnegative
  for (double s : {0.3, 1.0, 2.0})
    for (int l = 1; l <= 5; ++l) {
      double c = mod_capacity(std::ldexp(0.5, l), s) - mod_capacity(std::ldexp(0.5, l - 1), s);
      CHECK(c >= -1e-12);
    }
}

TEST_CASE("mod capacity monotone on grids") {
  for (double v : {0.5, 1.0, 3.0}) {
    double prev = 1e300;
    for (double s = 0.05; s < 5; s *= 1.1) {
      double c = mod_capacity(v, s);
      CHECK(c <= prev + 1e-12);
      prev = c;
    }
  }
  for (double s : {0.2, 1.0, 2.0}) {
    double prev = -1;
    for (double v = 0.1; v < 20; v *= 1.15) {
      double c = mod_capacity(v, s);
      CHECK(c >= prev - 1e-12);
      prev = c;
    }
  }
}

TEST_CASE("Voronoi error probability and tail bounds") {
  for (int r = 1; r <= 4; ++r)
    for (double s : {0.5, 1.0, 2.0, 4.0}) {
      double v = std::ldexp(1.0, r);
      double inside = adaptive_simpson(
          [&](double x) { return std::exp(-x * x / (2 * s * s)) / (std::sqrt(2 * kPi) * s); },
          -0.5 * v, 0.5 * v, 1e-13);
      double pe = voronoi_error_probability(v, s);
      CHECK(std::fabs(pe - (1 - inside)) < 1e-10);
      double q = 0.5 * std::erfc(std::ldexp(1.0, r - 1) / s / std::numbers::sqrt2);
      CHECK(pe <= 2 * q + 1e-15);
      CHECK(pe <= std::exp(-std::ldexp(1.0, 2 * r) / (8 * s * s)) + 1e-15);
    }
}

TEST_CASE("mmse sigma") {
  CHECK(mmse_sigma(1, 1) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(mmse_sigma(std::numeric_limits<double>::infinity(), 0.7) == 0.7);
  CHECK(mmse_sigma(1e12, 0.7) == doctest::Approx(0.7));
  CHECK(mmse_sigma(3, 1) == doctest::Approx(3 / std::sqrt(10.0)));
  CHECK(mmse_sigma(3, 1) < 1);
  CHECK_THROWS_AS(mmse_sigma(0, 1), std::domain_error);
}

TEST_CASE("discrete Gaussian sampler") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) CHECK(sample_discrete_gaussian(1, 0, 1e-3, rng) == 0.0);
  DiscreteGaussianSampler s(1, 0, 2);
  const int n = 100000;
  double sum = 0, sq = 0, sq2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = s.sample(rng);
    sum += x;
    sq += x * x;
    sq2 += x * x * x * x;
  }
  double mean = sum / n, m2 = sq / n;
  double se = std::sqrt((sq2 / n - m2 * m2) / n);
  CHECK(std::fabs(mean) < 5 * 2 / std::sqrt(double(n)));
  CHECK(m2 <= 4 + 4 * se);
  // support is truncated at 12 sigma
  CHECK(s.support_size() == 49);
}

TEST_CASE("discrete Gaussian inverse CDF matches point masses") {
  const double v = 0.7, c = 0.3, s = 0.9;
  DiscreteGaussianSampler ds(v, c, s);
  std::map<long, double> freq;
  const int n = 1 << 16;
  for (int i = 0; i < n; ++i) freq[std::lround(ds.sample((i + 0.5) / n) / v)] += 1.0 / n;
  double z = 0;
  for (int k = -60; k <= 60; ++k) z += std::exp(-std::pow(k * v - c, 2) / (2 * s * s));
  for (int k = -4; k <= 4; ++k) {
    double p = std::exp(-std::pow(k * v - c, 2) / (2 * s * s)) / z;
    CHECK(std::fabs(freq[k] - p) < 2.0 / n);
  }
}

TEST_CASE("coset priors") {
  PartitionChain chain{1.0, 3};
  auto flat = coset_prior(chain, 100.0, 3, {1, 0});
  CHECK(std::fabs(flat[0] - 0.5) < 1e-9);
  CHECK(std::fabs(flat[1] - 0.5) < 1e-9);
  auto conc = coset_prior(chain, 1e-3, 2, {0});
  CHECK(conc[0] == 1.0);
  CHECK(conc[1] == 0.0);
  auto p = coset_prior(chain, 1.0, 1, {});
  double p0 = 0, p1 = 0;
  for (int k = -20; k <= 20; ++k) (k % 2 == 0 ? p0 : p1) += std::exp(-k * k / 2.0);
  CHECK(std::fabs(p[0] - p0 / (p0 + p1)) < 1e-10);
  CHECK(std::fabs(p[0] - 0.507191883317345648) < 1e-12);
  CHECK(std::fabs(p[0] + p[1] - 1) < 1e-15);
  CHECK_THROWS_AS(coset_prior(chain, 1.0, 4, {0, 0, 0}), std::domain_error);
  CHECK_THROWS_AS(coset_prior(chain, 1.0, 2, {}), std::domain_error);
}

TEST_CASE("coset priors compose to the discrete Gaussian") {
  for (double alpha : {0.5, 1.0, 2.5})
    for (double s : {0.3, 1.0, 2.0, 6.0}) {
      PartitionChain chain{alpha, 3};
      double z = 0;
      std::vector<double> direct(8, 0);
      for (int k = -2000; k <= 2000; ++k) {
        double w = std::exp(-std::pow(alpha * k, 2) / (2 * s * s));
        z += w;
        direct[((k % 8) + 8) % 8] += w;
      }
      for (int j = 0; j < 8; ++j) {
        double prod = 1;
        Bits prefix;
        for (int l = 1; l <= 3; ++l) {
          int bit = (j >> (l - 1)) & 1;
          prod *= coset_prior(chain, s, l, prefix)[bit];
          prefix.push_back(static_cast<std::uint8_t>(bit));
        }
        CHECK(std::fabs(prod - direct[j] / z) < 1e-9);
      }
    }
}

TEST_CASE("quadrature helpers") {
  CHECK(std::fabs(adaptive_simpson([](double x) { return std::sin(x); }, 0, kPi, 1e-12) - 2) < 1e-11);
  CHECK(std::fabs(periodic_trapezoid([](double x) { return std::cos(x) * std::cos(x); }, 0, 2 * kPi,
                                     1e-14) -
                  kPi) < 1e-12);
  CHECK_THROWS_AS(adaptive_simpson([](double x) { return 1 / x; }, -1, 1, 1e-12, 10), NumericError);
}
