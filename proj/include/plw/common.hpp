#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace plw {

using Bits = std::vector<std::uint8_t>;

// Failures that map onto CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

// Seeded stream. Streams derived with `substream` are independent of each
// other for distinct ids.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  Rng substream(std::uint64_t id) const;

  double uniform();
  double normal(double sigma);
  std::uint8_t bit();
  std::uint64_t next() { return eng_(); }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

// Thread count from PLW_THREADS, defaulting to hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0,n) over up to thread_count() workers. Each index
// must write only its own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

inline bool is_pow2(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }
int log2_exact(std::uint64_t n);

}  // namespace plw
