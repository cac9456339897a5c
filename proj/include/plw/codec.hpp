#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "plw/common.hpp"
#include "plw/construction.hpp"

namespace plw {

// Seeded random mapping for shaping draws. The draw for (level, index,
// context, block) is a fixed uniform in [0,1); `context` hashes the bits the
// draw is conditioned on.
struct ShapingMap {
  std::uint64_t seed = 0;
  double draw(int level, std::size_t index, std::uint64_t context, std::uint64_t block = 0) const;
};

// Draw context at (level, i): shaping_context(lower-level bits) combined with
// a running hash of this level's bits u_0..u_{i-1}.
std::uint64_t shaping_context(const std::vector<Bits>& lower_x, std::size_t n);
inline std::uint64_t shaping_roll(std::uint64_t h, std::uint8_t bit) { return hash_combine(h, bit); }
inline std::uint64_t shaping_key(std::uint64_t ctx, std::uint64_t rolling) { return hash_combine(ctx, rolling); }

struct Codeword {
  std::vector<Bits> u;          // per level, length N
  std::vector<Bits> x;          // u G_N per level
  std::vector<double> points;   // transmitted reals
  Bits side;                    // D (mod-lambda) or dS (shaped) bits, level-major
};

// Message bits fill Role::Message positions level-major, ascending index.
Codeword encode_mod_lambda(const WiretapCode& code, const Bits& message, Rng& rng);
// `randomness` fills Random and Side positions in the same order.
Codeword encode_mod_lambda(const WiretapCode& code, const Bits& message, const Bits& randomness);
Codeword encode_shaped(const WiretapCode& code, const Bits& message, const ShapingMap& map, Rng& rng,
                       std::uint64_t block = 0);
// Dispatches on the code's mode; the map is ignored in mod-lambda mode.
Codeword encode(const WiretapCode& code, const Bits& message, const ShapingMap& map, Rng& rng,
                std::uint64_t block = 0);

// Per-level, per-position log-ratio ln P(x_l=0 | .)/P(x_l=1 | .) used by the
// decoder, given the lower levels' bits. Exposed for tests.
std::vector<double> level_llrs(const WiretapCode& code, int level, const std::vector<double>& y,
                               const std::vector<Bits>& lower_x, double sigma_b);
std::vector<double> prior_llrs(const WiretapCode& code, int level, const std::vector<Bits>& lower_x);

struct Decoded {
  Bits message;
  std::vector<Bits> u;
  Bits side;  // unknown-set bits as decided
};

// Level-by-level SC decoding. `side` (D or dS bits, level-major) takes
// precedence; in shaped mode without side bits the map is required.
Decoded sc_decode_multistage(const WiretapCode& code, const std::vector<double>& y, double sigma_b,
                             const ShapingMap* map, const Bits* side, std::uint64_t block = 0);

// Block-Markov chaining: the first unknown_bits() message positions of block
// j carry block j+1's unknown bits; block 1's go out of band.
std::vector<std::size_t> block_markov_payloads(const WiretapCode& code, std::size_t k);

struct BlockMarkovTx {
  std::vector<Codeword> blocks;
  Bits out_of_band;
  std::uint64_t map_seed = 0;  // encoder-private map (shaped mode)
};

BlockMarkovTx block_markov_encode(const WiretapCode& code, const std::vector<Bits>& messages, Rng& rng);
std::vector<Bits> block_markov_decode(const WiretapCode& code, const std::vector<std::vector<double>>& received,
                                      double sigma_b, const Bits& out_of_band);

// Transmission frame (little-endian):
//   "PLWF" | u16 version | u8 mode | u8 levels | u32 N | u32 k
//   | u64 code_seed | u64 map_seed
//   | k x (u32 nbits, packed bits) | u32 nbits, packed out-of-band bits
//   | u32 crc32 of everything before it
struct Frame {
  Mode mode = Mode::ModLambda;
  std::uint32_t n = 0;
  std::uint8_t levels = 0;
  std::uint64_t code_seed = 0, map_seed = 0;
  std::vector<Bits> payload;  // one entry per block
  Bits out_of_band;
};

std::string frame_to_bytes(const Frame& f);
Frame frame_from_bytes(std::string_view bytes);

// One-time pad for non-uniform messages: apply before encoding and after
// decoding with the same key.
Bits otp_apply(const Bits& message, const Bits& key);

}  // namespace plw
