#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "plw/channel.hpp"
#include "plw/common.hpp"
#include "plw/lattice.hpp"

namespace plw {

struct PolarStats {
  std::vector<double> z_upper;  // from degrading merges
  std::vector<double> z_lower;  // from upgrading merges
  std::vector<double> i_lower;
  std::vector<double> i_upper;
};

// Per-index Bhattacharyya bounds for the N synthesized channels. Index i is
// read MSB-first: bit m-1 selects the first transform applied to `ch`.
PolarStats polarize_statistics(const BmsChannel& ch, std::size_t n, std::size_t mu);
// Upper bounds start from `degraded`, lower bounds from `upgraded`; both must
// sandwich the same underlying channel.
PolarStats polarize_statistics(const BmsChannel& degraded, const BmsChannel& upgraded,
                               std::size_t n, std::size_t mu);

// Exact BEC recursion in the same index order.
std::vector<double> bec_bhattacharyya(double eps, std::size_t n);

enum class Mode { ModLambda, Shaped };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct Policy {
  enum class Kind { Thresholds, RateTarget, Beta };
  Kind kind = Kind::Thresholds;
  double delta_good = 1e-5;
  double delta_bad = 1e-5;
  double delta_shape = 1e-5;
  double beta = 0.3;
  double backoff = 0.0;  // RateTarget: fraction of N removed from each good set
};

struct CodeParams {
  std::size_t n = 256;
  PartitionChain chain;
  GaussianParams gauss;
  Mode mode = Mode::ModLambda;
  Policy policy;
  std::size_t mu = 64;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SecrecySets {
  Bits A, B, C, D;
};
struct ShapingSets {
  Bits F, I, S, dS;
};

// Membership masks, one byte per index.
struct IndexSets {
  Bits A, B, C, D;
  Bits F, I, S, dS;
  Bits S0;  // shaping set before the unpolarized-to-Bob extension
};

enum class Role : std::uint8_t {
  Message,    // A (I-part of A in shaped mode)
  Random,     // uniform random bits Bob decodes
  Frozen,     // stored shared values
  Side,       // mod-lambda D: random bits Bob cannot decode
  ShapeDraw,  // dS: drawn from the conditional prior via the shaping map
  ShapeMap,   // S minus dS: deterministic MAP of the conditional prior
};

struct LevelCode {
  IndexSets sets;
  std::vector<Role> roles;
  std::vector<double> zb_up, zb_lo, ze_up, ze_lo, zs_up, zs_lo;
  Bits frozen;
  double cap_bob = 0, cap_eve = 0;  // design capacities of the level channels
};

struct WiretapCode {
  CodeParams params;
  std::vector<LevelCode> levels;
  std::uint64_t map_seed = 0;

  std::size_t n() const { return params.n; }
  std::size_t message_bits() const;
  // Positions Bob needs from outside the block (D or dS), summed over levels.
  std::size_t unknown_bits() const;
  // `level` is the 0-based index into `levels`.
  std::vector<std::size_t> positions(int level, Role r) const;
};

Bits threshold_good(const std::vector<double>& z_upper, double delta);
Bits threshold_bad(const std::vector<double>& z_lower, double delta);

SecrecySets secrecy_partition_from_sets(const Bits& good, const Bits& bad);
// Thresholds on Bob's upper and Eve's lower bounds; throws NumericError when
// Eve's upper bound falls below Bob's lower bound by more than 1e-6.
SecrecySets secrecy_partition(const PolarStats& bob, const PolarStats& eve, double delta_good,
                              double delta_bad);
ShapingSets shaping_partition(const PolarStats& bob, const PolarStats& source, const Bits& good,
                              const Bits& bad, double delta, Bits* s0 = nullptr);

// Bit-prefix channel used for shaping statistics at `level`.
BmsChannel source_channel(const PartitionChain& chain, double sigma_s, int level, double c = 0.0);

WiretapCode assemble_code(const CodeParams& params);
std::vector<Role> roles_for(const IndexSets& s, Mode mode);

struct LevelRates {
  int level = 0;
  std::size_t a = 0, b = 0, c = 0, d = 0, f = 0, i = 0, s = 0, ds = 0;
  double message_rate = 0, random_rate = 0, frozen_rate = 0, shaping_rate = 0;
  double cap_bob = 0, cap_eve = 0;
};

struct Achievable {
  double rate = 0;          // sum of per-level capacity differences
  double capacity_ref = 0;  // secrecy capacity reference
  double gap = 0;
  double eps1 = 0, epsb = 0, epse = 0;
};

// Per-level capacity-difference sum for a chain at noise levels sb < se.
Achievable achievable_rate(const PartitionChain& chain, double sigma_b, double sigma_e);
// Same with MMSE-scaled noise and the power-constrained reference.
Achievable achievable_rate_shaped(const PartitionChain& chain, double sigma_s, double sigma_b,
                                  double sigma_e);
// Smallest r with eps_e < tol for chain alpha.
int levels_for_aliasing(double alpha, double sigma_e, double tol = 1e-3, int max_levels = 24);

struct RateReport {
  std::vector<LevelRates> levels;
  double message_rate = 0, random_rate = 0, frozen_rate = 0, shaping_rate = 0;
  Achievable design;
  double gap_code = 0;     // reference minus the code's message rate
  double union_bound = 0;  // sum of Bob's upper Z over decoded positions
};

RateReport rate_report(const WiretapCode& code);
nlohmann::json to_json(const RateReport& r);

nlohmann::json params_to_json(const CodeParams& p);
CodeParams params_from_json(const nlohmann::json& j);

// Versioned code file: magic, JSON header, binary body, CRC-32 trailer.
std::string code_to_bytes(const WiretapCode& code);
WiretapCode code_from_bytes(const std::string& bytes);
void save_code(const WiretapCode& code, const std::string& path);
WiretapCode load_code(const std::string& path);

// Structural checks on a code; returns a list of violations (empty if ok).
std::vector<std::string> check_invariants(const WiretapCode& code);

}  // namespace plw
