#include "plw/polar.hpp"

#include <algorithm>
#include <cmath>

namespace plw {

void polar_transform(Bits& x) {
  const std::size_t n = x.size();
  log2_exact(n);
  for (std::size_t len = 1; len < n; len *= 2)
    for (std::size_t i = 0; i < n; i += 2 * len)
      for (std::size_t j = i; j < i + len; ++j) x[j] ^= x[j + len];
}

Bits polar_encode(const Bits& u) {
  Bits x = u;
  polar_transform(x);
  return x;
}

double clamp_llr(double l) {
  if (std::isnan(l)) return 0.0;
  return std::clamp(l, -kLlrClamp, kLlrClamp);
}

namespace {
double lse2(double a, double b) { return std::max(a, b) + std::log1p(std::exp(-std::fabs(a - b))); }
}  // namespace

double llr_f(double a, double b) { return lse2(a + b, 0.0) - lse2(a, b); }

ScWalker::ScWalker(std::size_t n, std::size_t streams) : n_(n), k_(streams), m_(log2_exact(n)) {
  if (streams == 0) throw std::invalid_argument("need at least one LLR stream");
  for (int d = 0; d <= m_; ++d) {
    l_.emplace_back(k_ * (n_ >> d));
    x_.emplace_back(n_ >> d);
  }
  u_.resize(n_);
  leaf_.resize(k_);
}

const Bits& ScWalker::run(const std::vector<std::vector<double>>& channel, const Decide& decide) {
  if (channel.size() != k_) throw std::invalid_argument("stream count mismatch");
  for (std::size_t k = 0; k < k_; ++k) {
    if (channel[k].size() != n_) throw std::invalid_argument("LLR length mismatch");
    for (std::size_t j = 0; j < n_; ++j) l_[0][k * n_ + j] = clamp_llr(channel[k][j]);
  }
  decide_ = &decide;
  rec(0, 0);
  decide_ = nullptr;
  return u_;
}

void ScWalker::rec(int depth, std::size_t first) {
  const std::size_t n = n_ >> depth;
  auto& L = l_[depth];
  auto& X = x_[depth];
  if (n == 1) {
    for (std::size_t k = 0; k < k_; ++k) leaf_[k] = L[k];
    std::uint8_t b = (*decide_)(first, leaf_.data()) ? 1 : 0;
    u_[first] = b;
    X[0] = b;
    return;
  }
  const std::size_t h = n / 2;
  auto& C = l_[depth + 1];
  auto& Xc = x_[depth + 1];
  for (std::size_t k = 0; k < k_; ++k)
    for (std::size_t j = 0; j < h; ++j) C[k * h + j] = llr_f(L[k * n + j], L[k * n + j + h]);
  rec(depth + 1, first);
  for (std::size_t j = 0; j < h; ++j) X[j] = Xc[j];
  for (std::size_t k = 0; k < k_; ++k)
    for (std::size_t j = 0; j < h; ++j) C[k * h + j] = llr_g(L[k * n + j], L[k * n + j + h], X[j]);
  rec(depth + 1, first + h);
  for (std::size_t j = 0; j < h; ++j) {
    X[j] ^= Xc[j];
    X[j + h] = Xc[j];
  }
}

}  // namespace plw
