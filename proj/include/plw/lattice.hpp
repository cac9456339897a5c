#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "plw/common.hpp"

namespace plw {

// Chain alpha*Z / 2alpha*Z / ... / 2^r alpha*Z.
struct PartitionChain {
  double alpha = 1.0;
  int levels = 1;

  double volume(int l) const;  // Vol(Lambda_l) = 2^l alpha
  void validate() const;
};

struct GaussianParams {
  std::optional<double> sigma_s;
  double sigma_b = 1.0;
  double sigma_e = 2.0;
  double c = 0.0;

  // Degraded wiretapper requires sigma_b <= sigma_e; equality is allowed
  // (zero secrecy capacity) and reported by callers.
  void validate() const;
  double sigma_b_tilde() const;
  double sigma_e_tilde() const;
};

double theta_series(double v, double tau);
double flatness_factor(double v, double sigma);

// f_{sigma, vZ}(x) and its logarithm.
double periodic_gaussian(double x, double v, double sigma);
double log_periodic_gaussian(double x, double v, double sigma);

// Differential entropy (bits) of Gaussian noise reduced mod vZ.
double aliased_entropy(double v, double sigma);
// log2 v - h(vZ, sigma^2), bits.
double mod_capacity(double v, double sigma);
// 1/2 log2(2 pi e sigma^2) - h(vZ, sigma^2), bits. Always >= 0.
double aliasing_loss(double v, double sigma);
// Probability that N(0, sigma^2) leaves [-v/2, v/2).
double voronoi_error_probability(double v, double sigma);

double mmse_sigma(double sigma_s, double sigma);

// Exact inverse-CDF sampler for D_{vZ, sigma, c}, truncated at 12 sigma.
class DiscreteGaussianSampler {
 public:
  DiscreteGaussianSampler(double v, double c, double sigma);
  double sample(Rng& rng) const;
  double sample(double u) const;  // u in [0,1)
  std::size_t support_size() const { return points_.size(); }

 private:
  std::vector<double> points_;
  std::vector<double> cdf_;
};

double sample_discrete_gaussian(double v, double c, double sigma, Rng& rng);

// Log-masses (natural log, unnormalized but with a common offset) of the 2^l
// cosets of 2^l alpha Z inside alpha Z under D_{alpha Z, sigma_s, c}. Coset j
// is alpha*j + 2^l alpha Z, so j's bit (t-1) is x_t.
std::vector<double> coset_log_masses(const PartitionChain& chain, double sigma_s, int level,
                                     double c = 0.0);

// (P(X_l=0 | prefix), P(X_l=1 | prefix)) for prefix = x_1..x_{l-1}.
std::array<double, 2> coset_prior(const PartitionChain& chain, double sigma_s, int level,
                                  const Bits& prefix, double c = 0.0);

// Same, from precomputed coset_log_masses(level); prefix given as integer.
std::array<double, 2> coset_prior_from_masses(const std::vector<double>& log_masses,
                                              std::uint32_t prefix);

}  // namespace plw
