#include "plw/common.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace plw {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v));
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x706c77u};
  eng_.seed(seq);
}

Rng Rng::substream(std::uint64_t id) const { return Rng(hash_combine(seed_, id)); }

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }

double Rng::normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(eng_); }

std::uint8_t Rng::bit() { return static_cast<std::uint8_t>(eng_() >> 63); }

unsigned thread_count() {
  if (const char* s = std::getenv("PLW_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int log2_exact(std::uint64_t n) {
  if (!is_pow2(n)) throw std::invalid_argument("length is not a power of two");
  int m = 0;
  while ((1ULL << m) < n) ++m;
  return m;
}

}  // namespace plw
