#include "plw/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "plw/quadrature.hpp"

namespace plw {
namespace {

constexpr double kTermFloor = 1e-16;
constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
// Above this sigma/v ratio the dual (Fourier) series is used.
constexpr double kDualRatio = 0.4;

void require_positive(double x, const char* what) {
  if (!(x > 0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << x;
    throw std::domain_error(os.str());
  }
}

double gaussian_entropy_bits(double sigma) {
  return 0.5 * std::log2(2.0 * kPi * std::numbers::e * sigma * sigma);
}

// q_k = exp(-2 pi^2 sigma^2 k^2 / v^2) for k >= 1 until below the floor.
std::vector<double> dual_terms(double v, double sigma) {
  std::vector<double> q;
  double a = 2.0 * kPi * kPi * sigma * sigma / (v * v);
  for (int k = 1;; ++k) {
    double t = std::exp(-a * k * k);
    if (t < kTermFloor) break;
    q.push_back(t);
  }
  return q;
}

// v f(x) - 1 from the dual series.
double dual_deviation(double x, double v, const std::vector<double>& q) {
  double g = 0;
  for (std::size_t k = 0; k < q.size(); ++k)
    g += q[k] * std::cos(2.0 * kPi * static_cast<double>(k + 1) * x / v);
  return 2.0 * g;
}

double lse(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// KL divergence (bits) of the aliased density from uniform; flat regime.
double capacity_flat(double v, double sigma) {
  auto q = dual_terms(v, sigma);
  if (q.empty()) return 0.0;
  auto integrand = [&](double x) {
    double g = dual_deviation(x, v, q);
    return (1.0 + g) * std::log1p(g) / (v * kLn2);
  };
  int nodes = std::max<int>(64, 8 * static_cast<int>(q.size()));
  return std::max(0.0, periodic_trapezoid(integrand, -0.5 * v, v, 1e-15, nodes, 1 << 22, 1e-12));
}

// H(K | X) in bits where Y ~ N(0, sigma^2), X = Y mod vZ, K the lattice index.
double aliasing_loss_direct(double v, double sigma) {
  const double s2 = 2.0 * sigma * sigma;
  const int span = static_cast<int>(std::ceil(40.0 * sigma / v)) + 1;
  std::vector<double> lt;
  auto integrand = [&](double x) {
    lt.clear();
    for (int k = -span; k <= span; ++k) {
      double d = x - k * v;
      lt.push_back(-d * d / s2);
    }
    auto m = std::max_element(lt.begin(), lt.end());
    double top = *m, rest = 0;
    for (auto it = lt.begin(); it != lt.end(); ++it)
      if (it != m) rest += std::exp(*it - top);
    if (rest == 0) return 0.0;
    double l1p = std::log1p(rest);
    // sum_k t_k (log f - log t_k) with t_k relative to the top term
    double acc = l1p;
    for (auto it = lt.begin(); it != lt.end(); ++it)
      if (it != m) acc += std::exp(*it - top) * ((top - *it) + l1p);
    double scale = std::exp(top) / (std::sqrt(2.0 * kPi) * sigma);
    return scale * acc / kLn2;
  };
  double ratio = v / sigma;
  int nodes = 64;
  while (nodes < 16.0 * ratio && nodes < (1 << 20)) nodes *= 2;
  return std::max(0.0, periodic_trapezoid(integrand, -0.5 * v, v, 1e-15, nodes, 1 << 22, 1e-12));
}

}  // namespace

double PartitionChain::volume(int l) const { return std::ldexp(alpha, l); }

void PartitionChain::validate() const {
  require_positive(alpha, "alpha");
  if (levels < 1 || levels > 30) throw std::domain_error("levels must be in [1, 30]");
}

void GaussianParams::validate() const {
  require_positive(sigma_b, "sigma_b");
  require_positive(sigma_e, "sigma_e");
  if (sigma_s) require_positive(*sigma_s, "sigma_s");
  if (sigma_b > sigma_e) throw std::domain_error("sigma_b must not exceed sigma_e");
  if (!std::isfinite(c)) throw std::domain_error("center must be finite");
}

double GaussianParams::sigma_b_tilde() const {
  if (!sigma_s) throw std::domain_error("sigma_s not set");
  return mmse_sigma(*sigma_s, sigma_b);
}

double GaussianParams::sigma_e_tilde() const {
  if (!sigma_s) throw std::domain_error("sigma_s not set");
  return mmse_sigma(*sigma_s, sigma_e);
}

double theta_series(double v, double tau) {
  require_positive(v, "v");
  require_positive(tau, "tau");
  double a = kPi * tau * v * v, sum = 1.0;
  for (long k = 1;; ++k) {
    double t = std::exp(-a * static_cast<double>(k) * static_cast<double>(k));
    if (t < kTermFloor) break;
    sum += 2.0 * t;
  }
  return sum;
}

double flatness_factor(double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  // The maximum of |v f(x) - 1| sits at x = 0.
  if (sigma / v > kDualRatio) {
    double s = 0;
    for (double t : dual_terms(v, sigma)) s += t;
    return 2.0 * s;
  }
  double gamma = v * v / (sigma * sigma);
  double eps = std::sqrt(gamma / (2.0 * kPi)) * theta_series(1.0, v * v / (2.0 * kPi * sigma * sigma)) - 1.0;
  return std::max(0.0, eps);
}

double log_periodic_gaussian(double x, double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  if (sigma / v > kDualRatio) {
    auto q = dual_terms(v, sigma);
    return std::log1p(dual_deviation(x, v, q)) - std::log(v);
  }
  double s2 = 2.0 * sigma * sigma;
  long k0 = std::lround(x / v);
  long span = static_cast<long>(std::ceil(40.0 * sigma / v)) + 1;
  double acc = -std::numeric_limits<double>::infinity();
  for (long k = k0 - span; k <= k0 + span; ++k) {
    double d = x - static_cast<double>(k) * v;
    acc = lse(acc, -d * d / s2);
  }
  return acc - std::log(std::sqrt(2.0 * kPi) * sigma);
}

double periodic_gaussian(double x, double v, double sigma) {
  return std::exp(log_periodic_gaussian(x, v, sigma));
}

double aliased_entropy(double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  if (sigma / v > kDualRatio) return std::log2(v) - capacity_flat(v, sigma);
  return gaussian_entropy_bits(sigma) - aliasing_loss_direct(v, sigma);
}

double mod_capacity(double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  if (sigma / v > kDualRatio) return capacity_flat(v, sigma);
  double c = std::log2(v) - gaussian_entropy_bits(sigma) + aliasing_loss_direct(v, sigma);
  if (c < 0 && c > -1e-9) c = 0;
  if (c < 0) throw NumericError("negative mod-lattice capacity");
  return c;
}

double aliasing_loss(double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  if (sigma / v > kDualRatio)
    return gaussian_entropy_bits(sigma) - std::log2(v) + capacity_flat(v, sigma);
  return aliasing_loss_direct(v, sigma);
}

double voronoi_error_probability(double v, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma");
  return std::erfc(v / (2.0 * std::numbers::sqrt2 * sigma));
}

double mmse_sigma(double sigma_s, double sigma) {
  require_positive(sigma, "sigma");
  if (std::isinf(sigma_s) && sigma_s > 0) return sigma;
  require_positive(sigma_s, "sigma_s");
  return sigma_s * sigma / std::hypot(sigma_s, sigma);
}

DiscreteGaussianSampler::DiscreteGaussianSampler(double v, double c, double sigma) {
  require_positive(v, "v");
  require_positive(sigma, "sigma_s");
  if (!std::isfinite(c)) throw std::domain_error("center must be finite");
  long lo = static_cast<long>(std::floor((c - 12.0 * sigma) / v));
  long hi = static_cast<long>(std::ceil((c + 12.0 * sigma) / v));
  double best = std::numeric_limits<double>::infinity();
  for (long k = lo; k <= hi; ++k) {
    double d = static_cast<double>(k) * v - c;
    best = std::min(best, d * d);
  }
  double s2 = 2.0 * sigma * sigma, acc = 0;
  for (long k = lo; k <= hi; ++k) {
    double pt = static_cast<double>(k) * v, d = pt - c;
    double w = std::exp(-(d * d - best) / s2);
    if (w == 0) continue;
    points_.push_back(pt);
    acc += w;
    cdf_.push_back(acc);
  }
  for (double& x : cdf_) x /= acc;
  cdf_.back() = 1.0;
}

double DiscreteGaussianSampler::sample(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return points_[static_cast<std::size_t>(it - cdf_.begin())];
}

double DiscreteGaussianSampler::sample(Rng& rng) const { return sample(rng.uniform()); }

double sample_discrete_gaussian(double v, double c, double sigma, Rng& rng) {
  return DiscreteGaussianSampler(v, c, sigma).sample(rng);
}

std::vector<double> coset_log_masses(const PartitionChain& chain, double sigma_s, int level,
                                     double c) {
  chain.validate();
  require_positive(sigma_s, "sigma_s");
  if (level < 0 || level > chain.levels) throw std::domain_error("level out of range");
  const long M = 1L << level;
  const double alpha = chain.alpha, P = chain.volume(level);
  std::vector<double> lm(static_cast<std::size_t>(M), -std::numeric_limits<double>::infinity());
  if (sigma_s / P > kDualRatio) {
    auto q = dual_terms(P, sigma_s);
    for (long j = 0; j < M; ++j)
      lm[static_cast<std::size_t>(j)] = std::log1p(dual_deviation(alpha * j - c, P, q));
  } else {
    double s2 = 2.0 * sigma_s * sigma_s;
    long lo = static_cast<long>(std::floor((c - 40.0 * sigma_s) / alpha)) - M;
    long hi = static_cast<long>(std::ceil((c + 40.0 * sigma_s) / alpha)) + M;
    for (long k = lo; k <= hi; ++k) {
      double d = alpha * static_cast<double>(k) - c;
      auto j = static_cast<std::size_t>(((k % M) + M) % M);
      lm[j] = lse(lm[j], -d * d / s2);
    }
  }
  double total = -std::numeric_limits<double>::infinity();
  for (double x : lm) total = lse(total, x);
  for (double& x : lm) x -= total;
  return lm;
}

std::array<double, 2> coset_prior_from_masses(const std::vector<double>& log_masses,
                                              std::uint32_t prefix) {
  std::size_t M = log_masses.size();
  if (M < 2 || prefix >= M / 2) throw std::domain_error("prefix out of range");
  double l0 = log_masses[prefix], l1 = log_masses[prefix + M / 2];
  double p1 = 1.0 / (1.0 + std::exp(l0 - l1));
  double p0 = 1.0 / (1.0 + std::exp(l1 - l0));
  return {p0, p1};
}

std::array<double, 2> coset_prior(const PartitionChain& chain, double sigma_s, int level,
                                  const Bits& prefix, double c) {
  if (level < 1 || level > chain.levels) throw std::domain_error("level out of range");
  if (static_cast<int>(prefix.size()) != level - 1)
    throw std::domain_error("prefix length must be level-1");
  std::uint32_t idx = 0;
  for (std::size_t t = 0; t < prefix.size(); ++t)
    if (prefix[t]) idx |= 1u << t;
  return coset_prior_from_masses(coset_log_masses(chain, sigma_s, level, c), idx);
}

}  // namespace plw
