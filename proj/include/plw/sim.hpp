#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "plw/codec.hpp"
#include "plw/construction.hpp"

namespace plw {

enum class DecoderKind { SharedMap, BlockMarkov };
std::string to_string(DecoderKind d);
DecoderKind decoder_from_string(const std::string& s);

struct Leakage {
  double bits = 0;
  double per_message_bit = 0;
};

// sum over A and C of sqrt(1 - Z_lower^2) on Eve's statistics.
Leakage leakage_upper_bound(const WiretapCode& code);

struct SimReport {
  std::size_t trials = 0;
  std::size_t frames = 0;  // trials, or trials * blocks for block-Markov
  std::size_t frame_errors = 0;
  double fer = 0, fer_se = 0;
  double empirical_power = 0, power_se = 0;
  Leakage leakage;
  RateReport rates;
  double sigma_b = 0;
  DecoderKind decoder = DecoderKind::SharedMap;
  std::size_t blocks = 1;
  std::uint64_t seed = 0;
};

// Draws uniform messages, encodes, adds N(0, sigma_b^2), decodes. Trial t uses
// Rng(seed).substream(t), so reports are reproducible for any thread count.
SimReport run_trials(const WiretapCode& code, double sigma_b, std::size_t trials, DecoderKind decoder,
                     std::uint64_t seed, std::size_t blocks = 4);

std::string sim_csv_header();
std::string to_csv_row(const WiretapCode& code, const SimReport& r);
nlohmann::json to_json(const WiretapCode& code, const SimReport& r);

// I(X; X + N(0, sigma^2)) in bits for X ~ D_{alpha Z, sigma_s}, truncated to
// |x| <= window * sigma_s.
double discrete_gaussian_mi(double sigma_s, double sigma, double alpha, double window = 12.0,
                            double tol = 1e-8);

// Exact total variation between the encoder's law of (u_1..u_r) and the
// law induced by the coset priors. Frozen values are taken uniform as in the
// random-frozen analysis; shape-draw bits follow `map` when given and the
// exact conditional (averaged map) otherwise. Shaped codes with N <= 8, r <= 2.
double tv_distance_oracle(const WiretapCode& code, const ShapingMap* map);

}  // namespace plw
