#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "plw/common.hpp"

namespace plw {

// x = u F^{(x)m} over GF(2), F = [[1,0],[1,1]], natural index order. The
// transform is an involution.
void polar_transform(Bits& x);
Bits polar_encode(const Bits& u);

// LLR primitives; LLR = ln P(0)/P(1).
double llr_f(double a, double b);
inline double llr_g(double a, double b, std::uint8_t u) { return u ? b - a : b + a; }
constexpr double kLlrClamp = 700.0;
double clamp_llr(double l);

// Successive-cancellation walk over K parallel LLR streams that share one
// sequence of decisions. At each leaf i the callback sees stream k's LLR at
// llr[k] and returns the bit to commit.
class ScWalker {
 public:
  using Decide = std::function<std::uint8_t(std::size_t i, const double* llr)>;

  ScWalker(std::size_t n, std::size_t streams);
  // channel[k] has length n. Returns u; codeword() then holds u G_N.
  const Bits& run(const std::vector<std::vector<double>>& channel, const Decide& decide);
  const Bits& codeword() const { return x_[0]; }

 private:
  void rec(int depth, std::size_t first);

  std::size_t n_, k_;
  int m_;
  std::vector<std::vector<double>> l_;  // per depth: k_ * (n_ >> depth)
  std::vector<Bits> x_;                  // per depth: n_ >> depth
  Bits u_;
  std::vector<double> leaf_;
  const Decide* decide_ = nullptr;
};

}  // namespace plw
