#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plw/common.hpp"
#include "plw/lattice.hpp"

namespace plw {

struct Symbol {
  double w0 = 0;  // P(y | x = 0)
  double w1 = 0;  // P(y | x = 1)
};

// Finite binary-input channel. Symbols are kept in canonical order:
// descending w0/(w0+w1), equal-LR symbols merged, zero symbols dropped.
class BmsChannel {
 public:
  BmsChannel() = default;
  static BmsChannel from_symbols(std::vector<Symbol> symbols, bool symmetric);
  static BmsChannel bsc(double p);
  static BmsChannel bec(double eps);
  static BmsChannel perfect();
  // Trusted path: symbols already canonical and exactly conjugate-paired.
  static BmsChannel from_canonical(std::vector<Symbol> symbols);

  const std::vector<Symbol>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  bool symmetric() const { return symmetric_; }

 private:
  std::vector<Symbol> symbols_;
  bool symmetric_ = false;
};

struct AsymPair {
  std::array<double, 2> prior{0.5, 0.5};
  BmsChannel channel;  // likelihood rows P(y|x); symmetry not required
  void validate() const;
};

struct QuantizationError : NumericError {
  double capacity_loss;
  QuantizationError(const std::string& what, double loss) : NumericError(what), capacity_loss(loss) {}
};

double bhattacharyya(const BmsChannel& ch);
double mutual_information(const BmsChannel& ch);
double asym_bhattacharyya(const AsymPair& pair);

// Channel with output (y, x xor x~) and uniform input x~.
BmsChannel symmetrize(const AsymPair& pair);
// Same, from joint masses (P(X=0, y), P(X=1, y)) per output y.
BmsChannel symmetrize_joint(const std::vector<Symbol>& joint);

BmsChannel degrade_merge(const BmsChannel& ch, std::size_t mu);
BmsChannel upgrade_merge(const BmsChannel& ch, std::size_t mu);

// Arikan transforms: first = W^- (worse), second = W^+ (better).
std::pair<BmsChannel, BmsChannel> polar_split(const BmsChannel& ch);
BmsChannel polar_minus(const BmsChannel& ch);
BmsChannel polar_plus(const BmsChannel& ch);

enum class Quantization { Degraded, Upgraded };

// Quantized Lambda_{l-1}/Lambda_l channel with prefix bits zero.
BmsChannel make_partition_channel(const PartitionChain& chain, int level, double sigma,
                                  std::size_t mu, Quantization q = Quantization::Degraded,
                                  double max_loss = 1e-2);

// Channel from X_l to (X_{1:l-1}, Y mod Lambda_r) with uniform upper levels,
// discretized into `bins` uniform cells of the Lambda_r region, then
// symmetrized and degraded to mu.
BmsChannel make_equivalent_channel(const PartitionChain& chain, int level, double sigma,
                                   std::size_t bins, std::size_t mu);

// Mass of sum_k N(offset + k*period, sigma^2) on [z1, z2].
double periodic_gauss_mass(double z1, double z2, double offset, double period, double sigma);

std::string channel_to_binary(const BmsChannel& ch);
BmsChannel channel_from_binary(std::string_view bytes);
nlohmann::json channel_to_json(const BmsChannel& ch);
BmsChannel channel_from_json(const nlohmann::json& j);

}  // namespace plw
