#include "plw/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include <zlib.h>

#include "plw/polar.hpp"

namespace plw {

namespace {

double llr_to_p0(double l) { return 1.0 / (1.0 + std::exp(-l)); }

std::uint32_t prefix_at(const std::vector<Bits>& lower_x, std::size_t i) {
  std::uint32_t p = 0;
  for (std::size_t t = 0; t < lower_x.size(); ++t) p |= static_cast<std::uint32_t>(lower_x[t][i]) << t;
  return p;
}

// Lattice point sum_l 2^{l-1} alpha x_l, as the integer index j.
std::vector<std::uint32_t> residues(const std::vector<Bits>& x, std::size_t n) {
  std::vector<std::uint32_t> j(n);
  for (std::size_t i = 0; i < n; ++i) j[i] = prefix_at(x, i);
  return j;
}

void check_message(const WiretapCode& code, const Bits& message) {
  if (message.size() != code.message_bits())
    throw std::invalid_argument("message length " + std::to_string(message.size()) + " != " +
                                std::to_string(code.message_bits()));
}

std::size_t count_roles(const WiretapCode& code, std::initializer_list<Role> roles) {
  std::size_t k = 0;
  for (const auto& l : code.levels)
    for (Role r : l.roles) k += std::find(roles.begin(), roles.end(), r) != roles.end();
  return k;
}

// Context for shaping draws: lower-level bits plus this level's decided bits.
struct LevelState {
  std::uint64_t ctx = 0;
  std::uint64_t rolling = 0;
};

}  // namespace

std::uint64_t shaping_context(const std::vector<Bits>& lower_x, std::size_t n) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::size_t i = 0; i < n; ++i) h = hash_combine(h, prefix_at(lower_x, i));
  return h;
}

double ShapingMap::draw(int level, std::size_t index, std::uint64_t context, std::uint64_t block) const {
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(level));
  h = hash_combine(h, index);
  h = hash_combine(h, context);
  h = hash_combine(h, block);
  return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
}

std::vector<double> prior_llrs(const WiretapCode& code, int level, const std::vector<Bits>& lower_x) {
  const std::size_t n = code.n();
  if (code.params.mode != Mode::Shaped) return std::vector<double>(n, 0.0);
  auto lm = coset_log_masses(code.params.chain, *code.params.gauss.sigma_s, level + 1, code.params.gauss.c);
  const std::size_t half = lm.size() / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = prefix_at(lower_x, i);
    out[i] = clamp_llr(lm[p] - lm[p + half]);
  }
  return out;
}

std::vector<double> level_llrs(const WiretapCode& code, int level, const std::vector<double>& y,
                               const std::vector<Bits>& lower_x, double sigma_b) {
  const auto& chain = code.params.chain;
  const std::size_t n = code.n();
  if (y.size() != n) throw std::invalid_argument("received length mismatch");
  if (!(sigma_b > 0)) throw std::domain_error("sigma_b must be positive");
  const double d = chain.volume(level), P = 2 * d;
  std::vector<double> out(n);
  double sig = sigma_b, w = 1.0, shift = 0.0;
  if (code.params.mode == Mode::Shaped) {
    // Prior and likelihood combine into one Gaussian around the MMSE point.
    const double ss = *code.params.gauss.sigma_s, v = ss * ss + sigma_b * sigma_b;
    sig = mmse_sigma(ss, sigma_b);
    w = ss * ss / v;
    shift = code.params.gauss.c * sigma_b * sigma_b / v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double o = chain.alpha * prefix_at(lower_x, i);
    const double m = w * y[i] + shift - o;
    out[i] = clamp_llr(log_periodic_gaussian(m, P, sig) - log_periodic_gaussian(m - d, P, sig));
  }
  return out;
}

namespace {

Codeword finish_mod_lambda(const WiretapCode& code, Codeword cw) {
  const std::size_t n = code.n();
  const double v = code.params.chain.volume(code.params.chain.levels);
  auto j = residues(cw.x, n);
  cw.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = code.params.chain.alpha * j[i];
    cw.points[i] = a >= 0.5 * v ? a - v : a;
  }
  return cw;
}

}  // namespace

Codeword encode_mod_lambda(const WiretapCode& code, const Bits& message, const Bits& randomness) {
  if (code.params.mode != Mode::ModLambda) throw std::invalid_argument("code is not in mod-lambda mode");
  check_message(code, message);
  if (randomness.size() != count_roles(code, {Role::Random, Role::Side}))
    throw std::invalid_argument("randomness length mismatch");
  const std::size_t n = code.n();
  Codeword cw;
  std::size_t mi = 0, ri = 0;
  for (const auto& lc : code.levels) {
    Bits u(n);
    for (std::size_t i = 0; i < n; ++i) {
      switch (lc.roles[i]) {
        case Role::Message: u[i] = message[mi++]; break;
        case Role::Frozen: u[i] = lc.frozen[i]; break;
        case Role::Side:
          u[i] = randomness[ri++];
          cw.side.push_back(u[i]);
          break;
        default: u[i] = randomness[ri++]; break;
      }
    }
    cw.x.push_back(polar_encode(u));
    cw.u.push_back(std::move(u));
  }
  return finish_mod_lambda(code, std::move(cw));
}

Codeword encode_mod_lambda(const WiretapCode& code, const Bits& message, Rng& rng) {
  Bits r(count_roles(code, {Role::Random, Role::Side}));
  for (auto& b : r) b = rng.bit();
  return encode_mod_lambda(code, message, r);
}

Codeword encode_shaped(const WiretapCode& code, const Bits& message, const ShapingMap& map, Rng& rng,
                       std::uint64_t block) {
  if (code.params.mode != Mode::Shaped) throw std::invalid_argument("code is not in shaped mode");
  check_message(code, message);
  const std::size_t n = code.n();
  const auto& chain = code.params.chain;
  Codeword cw;
  std::size_t mi = 0;
  ScWalker sc(n, 1);
  for (int l = 0; l < chain.levels; ++l) {
    const auto& lc = code.levels[static_cast<std::size_t>(l)];
    auto prior = prior_llrs(code, l, cw.x);
    LevelState st{shaping_context(cw.x, n), 0};
    Bits side_here;
    const Bits& u = sc.run({prior}, [&](std::size_t i, const double* llr) -> std::uint8_t {
      if (std::isnan(llr[0])) throw NumericError("conditional probability underflow");
      std::uint8_t b = 0;
      switch (lc.roles[i]) {
        case Role::Message: b = message[mi++]; break;
        case Role::Random: b = rng.bit(); break;
        case Role::Frozen: b = lc.frozen[i]; break;
        case Role::ShapeMap: b = llr[0] >= 0 ? 0 : 1; break;
        case Role::ShapeDraw:
          b = map.draw(l, i, shaping_key(st.ctx, st.rolling), block) < llr_to_p0(llr[0]) ? 0 : 1;
          side_here.push_back(b);
          break;
        case Role::Side: b = rng.bit(); break;
      }
      st.rolling = shaping_roll(st.rolling, b);
      return b;
    });
    cw.side.insert(cw.side.end(), side_here.begin(), side_here.end());
    cw.u.push_back(u);
    cw.x.push_back(sc.codeword());
  }
  // Top-level residue: sample the lattice point within its level-r coset.
  const double v = chain.volume(chain.levels), ss = *code.params.gauss.sigma_s, c = code.params.gauss.c;
  std::map<std::uint32_t, DiscreteGaussianSampler> samplers;
  auto j = residues(cw.x, n);
  cw.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = samplers.find(j[i]);
    const double a = chain.alpha * j[i];
    if (it == samplers.end()) it = samplers.emplace(j[i], DiscreteGaussianSampler(v, c - a, ss)).first;
    cw.points[i] = a + it->second.sample(rng);
  }
  return cw;
}

Codeword encode(const WiretapCode& code, const Bits& message, const ShapingMap& map, Rng& rng,
                std::uint64_t block) {
  return code.params.mode == Mode::Shaped ? encode_shaped(code, message, map, rng, block)
                                          : encode_mod_lambda(code, message, rng);
}

Decoded sc_decode_multistage(const WiretapCode& code, const std::vector<double>& y, double sigma_b,
                             const ShapingMap* map, const Bits* side, std::uint64_t block) {
  const std::size_t n = code.n();
  const bool shaped = code.params.mode == Mode::Shaped;
  if (side && side->size() != code.unknown_bits()) throw std::invalid_argument("side information length mismatch");
  if (!side && !shaped && code.unknown_bits() > 0)
    throw std::invalid_argument("mod-lambda decoding needs the D bits as side information");
  if (!side && shaped && code.unknown_bits() > 0 && !map)
    throw std::invalid_argument("shaped decoding needs the shaping map or the dS bits");
  Decoded out;
  std::vector<Bits> xs;
  std::size_t si = 0;
  const std::size_t streams = shaped ? 2 : 1;
  ScWalker sc(n, streams);
  for (int l = 0; l < code.params.chain.levels; ++l) {
    const auto& lc = code.levels[static_cast<std::size_t>(l)];
    std::vector<std::vector<double>> ch{level_llrs(code, l, y, xs, sigma_b)};
    if (shaped) ch.push_back(prior_llrs(code, l, xs));
    LevelState st{shaping_context(xs, n), 0};
    const Bits& u = sc.run(ch, [&](std::size_t i, const double* llr) -> std::uint8_t {
      std::uint8_t b = 0;
      switch (lc.roles[i]) {
        case Role::Message:
        case Role::Random: b = llr[0] >= 0 ? 0 : 1; break;
        case Role::Frozen: b = lc.frozen[i]; break;
        case Role::ShapeMap: b = llr[1] >= 0 ? 0 : 1; break;
        case Role::Side:
        case Role::ShapeDraw:
          if (side) {
            b = (*side)[si++];
          } else {
            b = map->draw(l, i, shaping_key(st.ctx, st.rolling), block) < llr_to_p0(llr[1]) ? 0 : 1;
          }
          out.side.push_back(b);
          break;
      }
      st.rolling = shaping_roll(st.rolling, b);
      return b;
    });
    for (std::size_t i = 0; i < n; ++i)
      if (lc.roles[i] == Role::Message) out.message.push_back(u[i]);
    out.u.push_back(u);
    xs.push_back(sc.codeword());
  }
  return out;
}

std::vector<std::size_t> block_markov_payloads(const WiretapCode& code, std::size_t k) {
  if (k < 2) throw std::invalid_argument("block-Markov chaining needs k >= 2");
  const std::size_t m = code.message_bits(), e = code.unknown_bits();
  if (e > m) throw ConfigError("message positions cannot carry the next block's unknown bits");
  std::vector<std::size_t> out(k, m - e);
  out.back() = m;
  return out;
}

BlockMarkovTx block_markov_encode(const WiretapCode& code, const std::vector<Bits>& messages, Rng& rng) {
  const std::size_t k = messages.size();
  auto sizes = block_markov_payloads(code, k);
  for (std::size_t j = 0; j < k; ++j)
    if (messages[j].size() != sizes[j]) throw std::invalid_argument("block " + std::to_string(j + 1) + " message length mismatch");
  BlockMarkovTx tx;
  tx.map_seed = rng.next();
  const ShapingMap map{tx.map_seed};
  tx.blocks.resize(k);
  Bits carry;  // unknown bits of block j+1
  for (std::size_t j = k; j-- > 0;) {
    Bits full = carry;
    full.insert(full.end(), messages[j].begin(), messages[j].end());
    tx.blocks[j] = encode(code, full, map, rng, j);
    carry = tx.blocks[j].side;
  }
  tx.out_of_band = carry;
  return tx;
}

std::vector<Bits> block_markov_decode(const WiretapCode& code, const std::vector<std::vector<double>>& received,
                                      double sigma_b, const Bits& out_of_band) {
  const std::size_t k = received.size();
  auto sizes = block_markov_payloads(code, k);
  const std::size_t e = code.unknown_bits();
  std::vector<Bits> out(k);
  Bits side = out_of_band;
  for (std::size_t j = 0; j < k; ++j) {
    auto d = sc_decode_multistage(code, received[j], sigma_b, nullptr, &side, j);
    if (j + 1 < k) {
      side.assign(d.message.begin(), d.message.begin() + static_cast<std::ptrdiff_t>(e));
      out[j].assign(d.message.begin() + static_cast<std::ptrdiff_t>(e), d.message.end());
    } else {
      out[j] = d.message;
    }
    if (out[j].size() != sizes[j]) throw std::logic_error("block payload size mismatch");
  }
  return out;
}

namespace {

constexpr char kFrameMagic[4] = {'P', 'L', 'W', 'F'};
constexpr std::uint16_t kFrameVersion = 1;

template <class T>
void put(std::string& s, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

void put_bits(std::string& s, const Bits& b) {
  put<std::uint32_t>(s, static_cast<std::uint32_t>(b.size()));
  std::string packed((b.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
  s += packed;
}

struct Cursor {
  std::string_view s;
  std::size_t pos = 0;
  template <class T>
  T get() {
    if (s.size() - pos < sizeof(T)) throw IntegrityError("frame truncated");
    T v;
    std::memcpy(&v, s.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  Bits bits() {
    auto n = get<std::uint32_t>();
    std::size_t bytes = (std::size_t{n} + 7) / 8;
    if (s.size() - pos < bytes) throw IntegrityError("frame truncated");
    Bits b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = (s[pos + i / 8] >> (i % 8)) & 1;
    pos += bytes;
    return b;
  }
};

std::uint32_t crc(std::string_view s) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

std::string frame_to_bytes(const Frame& f) {
  std::string s(kFrameMagic, 4);
  put<std::uint16_t>(s, kFrameVersion);
  put<std::uint8_t>(s, f.mode == Mode::Shaped ? 1 : 0);
  put<std::uint8_t>(s, f.levels);
  put<std::uint32_t>(s, f.n);
  put<std::uint32_t>(s, static_cast<std::uint32_t>(f.payload.size()));
  put<std::uint64_t>(s, f.code_seed);
  put<std::uint64_t>(s, f.map_seed);
  for (const auto& p : f.payload) put_bits(s, p);
  put_bits(s, f.out_of_band);
  put<std::uint32_t>(s, crc(s));
  return s;
}

Frame frame_from_bytes(std::string_view bytes) {
  if (bytes.size() < 4 + 4 || std::memcmp(bytes.data(), kFrameMagic, 4) != 0) throw IntegrityError("bad frame magic");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (stored != crc(bytes.substr(0, bytes.size() - 4))) throw IntegrityError("frame checksum mismatch");
  Cursor c{bytes.substr(4, bytes.size() - 8)};
  if (c.get<std::uint16_t>() != kFrameVersion) throw IntegrityError("unsupported frame version");
  Frame f;
  auto mode = c.get<std::uint8_t>();
  if (mode > 1) throw IntegrityError("bad frame mode");
  f.mode = mode ? Mode::Shaped : Mode::ModLambda;
  f.levels = c.get<std::uint8_t>();
  f.n = c.get<std::uint32_t>();
  auto k = c.get<std::uint32_t>();
  f.code_seed = c.get<std::uint64_t>();
  f.map_seed = c.get<std::uint64_t>();
  for (std::uint32_t j = 0; j < k; ++j) f.payload.push_back(c.bits());
  f.out_of_band = c.bits();
  if (c.pos != c.s.size()) throw IntegrityError("trailing bytes in frame");
  return f;
}

Bits otp_apply(const Bits& message, const Bits& key) {
  if (key.size() != message.size()) throw std::invalid_argument("one-time pad length mismatch");
  Bits out(message.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = message[i] ^ key[i];
  return out;
}

}  // namespace plw
