#include "plw/construction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plw/detail/classes.hpp"

namespace plw {

using detail::Cls;

namespace {

constexpr std::size_t kMaxFidelity = std::size_t{1} << 16;
constexpr double kDegradeTol = 1e-6;

std::vector<std::vector<Cls>> polarize_path(const std::vector<Cls>& base, int m, std::size_t mu,
                                            bool upgrade) {
  auto merge = [&](const std::vector<Cls>& v) {
    return upgrade ? detail::upgrade_classes(v, mu) : detail::degrade_classes(v, mu);
  };
  std::vector<std::vector<Cls>> cur{merge(base)};
  for (int t = 0; t < m; ++t) {
    std::vector<std::vector<Cls>> next(2 * cur.size());
    parallel_for(cur.size(), [&](std::size_t j) {
      next[2 * j] = merge(detail::minus_classes(cur[j]));
      next[2 * j + 1] = merge(detail::plus_classes(cur[j]));
    });
    cur = std::move(next);
  }
  return cur;
}

std::size_t count(const Bits& b) { return static_cast<std::size_t>(std::count(b.begin(), b.end(), 1)); }

// Indices sorted by key, ties by index; `ascending` picks the smallest keys first.
Bits best_k(const std::vector<double>& key, long k, bool ascending) {
  const std::size_t n = key.size();
  k = std::clamp<long>(k, 0, static_cast<long>(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return ascending ? key[a] < key[b] : key[a] > key[b];
  });
  Bits out(n, 0);
  for (long j = 0; j < k; ++j) out[idx[static_cast<std::size_t>(j)]] = 1;
  return out;
}

double level_capacity(const PartitionChain& chain, int level, double sigma) {
  return mod_capacity(chain.volume(level), sigma) - mod_capacity(chain.volume(level - 1), sigma);
}

}  // namespace

PolarStats polarize_statistics(const BmsChannel& degraded, const BmsChannel& upgraded,
                               std::size_t n, std::size_t mu) {
  if (!is_pow2(n)) throw std::invalid_argument("N must be a power of two");
  if (mu < 2) throw std::invalid_argument("fidelity mu must be at least 2");
  if (mu > kMaxFidelity) throw NumericError("fidelity overflow: mu=" + std::to_string(mu));
  if (!degraded.symmetric() || !upgraded.symmetric())
    throw std::invalid_argument("polarize_statistics needs symmetric channels");
  const int m = log2_exact(n);
  auto up = polarize_path(detail::classes_of(degraded), m, mu, false);
  auto lo = polarize_path(detail::classes_of(upgraded), m, mu, true);
  PolarStats st;
  st.z_upper.resize(n);
  st.z_lower.resize(n);
  st.i_lower.resize(n);
  st.i_upper.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.z_upper[i] = std::min(1.0, detail::classes_z(up[i]));
    st.i_lower[i] = std::clamp(detail::classes_info(up[i]), 0.0, 1.0);
    st.z_lower[i] = std::min(st.z_upper[i], detail::classes_z(lo[i]));
    st.i_upper[i] = std::clamp(detail::classes_info(lo[i]), st.i_lower[i], 1.0);
  }
  return st;
}

PolarStats polarize_statistics(const BmsChannel& ch, std::size_t n, std::size_t mu) {
  return polarize_statistics(ch, ch, n, mu);
}

std::vector<double> bec_bhattacharyya(double eps, std::size_t n) {
  if (!(eps >= 0 && eps <= 1)) throw std::domain_error("erasure probability out of range");
  if (!is_pow2(n)) throw std::invalid_argument("N must be a power of two");
  std::vector<double> z{eps};
  while (z.size() < n) {
    std::vector<double> next(2 * z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      next[2 * j] = 2 * z[j] - z[j] * z[j];
      next[2 * j + 1] = z[j] * z[j];
    }
    z = std::move(next);
  }
  return z;
}

std::string to_string(Mode m) { return m == Mode::Shaped ? "shaped" : "mod-lambda"; }

Mode mode_from_string(const std::string& s) {
  if (s == "mod-lambda") return Mode::ModLambda;
  if (s == "shaped") return Mode::Shaped;
  throw ConfigError("unknown mode '" + s + "'");
}

void CodeParams::validate() const {
  try {
    chain.validate();
    gauss.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  if (!is_pow2(n) || n > (std::size_t{1} << 20)) throw ConfigError("N must be a power of two <= 2^20");
  if (mu < 8 || mu > kMaxFidelity) throw ConfigError("mu must be in [8, 65536]");
  if (mode == Mode::Shaped && !gauss.sigma_s) throw ConfigError("shaped mode requires sigma_s");
  auto unit = [](double d, const char* what) {
    if (!(d > 0 && d < 0.5)) throw ConfigError(std::string(what) + " must be in (0, 0.5)");
  };
  unit(policy.delta_good, "delta_good");
  unit(policy.delta_bad, "delta_bad");
  unit(policy.delta_shape, "delta_shape");
  if (!(policy.beta > 0 && policy.beta < 1)) throw ConfigError("beta must be in (0, 1)");
  if (!(policy.backoff >= 0 && policy.backoff < 1)) throw ConfigError("backoff must be in [0, 1)");
}

std::size_t WiretapCode::message_bits() const {
  std::size_t k = 0;
  for (const auto& l : levels) k += count(l.sets.A);
  return k;
}

std::size_t WiretapCode::unknown_bits() const {
  std::size_t k = 0;
  for (const auto& l : levels) k += count(params.mode == Mode::Shaped ? l.sets.dS : l.sets.D);
  return k;
}

std::vector<std::size_t> WiretapCode::positions(int level, Role r) const {
  const auto& roles = levels.at(static_cast<std::size_t>(level)).roles;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles.size(); ++i)
    if (roles[i] == r) out.push_back(i);
  return out;
}

Bits threshold_good(const std::vector<double>& z_upper, double delta) {
  Bits g(z_upper.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = z_upper[i] <= delta;
  return g;
}

Bits threshold_bad(const std::vector<double>& z_lower, double delta) {
  Bits b(z_lower.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = z_lower[i] >= 1 - delta;
  return b;
}

SecrecySets secrecy_partition_from_sets(const Bits& good, const Bits& bad) {
  if (good.size() != bad.size()) throw std::invalid_argument("set length mismatch");
  const std::size_t n = good.size();
  SecrecySets s{Bits(n), Bits(n), Bits(n), Bits(n)};
  for (std::size_t i = 0; i < n; ++i) {
    s.A[i] = good[i] && bad[i];
    s.B[i] = good[i] && !bad[i];
    s.C[i] = !good[i] && bad[i];
    s.D[i] = !good[i] && !bad[i];
  }
  return s;
}

namespace {
void check_degraded(const PolarStats& bob, const PolarStats& eve) {
  if (bob.z_upper.size() != eve.z_upper.size()) throw std::invalid_argument("statistics length mismatch");
  for (std::size_t i = 0; i < bob.z_lower.size(); ++i)
    if (eve.z_upper[i] < bob.z_lower[i] - kDegradeTol) {
      std::ostringstream os;
      os << "eavesdropper channel not degraded at index " << i << ": Z_eve <= " << eve.z_upper[i]
         << " < Z_bob >= " << bob.z_lower[i];
      throw NumericError(os.str());
    }
}
}  // namespace

SecrecySets secrecy_partition(const PolarStats& bob, const PolarStats& eve, double delta_good,
                              double delta_bad) {
  check_degraded(bob, eve);
  return secrecy_partition_from_sets(threshold_good(bob.z_upper, delta_good),
                                     threshold_bad(eve.z_lower, delta_bad));
}

ShapingSets shaping_partition(const PolarStats& bob, const PolarStats& source, const Bits& good,
                              const Bits& bad, double delta, Bits* s0) {
  const std::size_t n = good.size();
  if (bob.z_upper.size() != n || source.z_upper.size() != n || bad.size() != n)
    throw std::invalid_argument("statistics length mismatch");
  ShapingSets s{Bits(n), Bits(n), Bits(n), Bits(n)};
  Bits base(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Shaping proper: indices the prior does not leave uniform, unless Eve
    // must see them as noise.
    base[i] = source.z_upper[i] < 1 - delta && !bad[i];
    s.F[i] = bob.z_lower[i] >= 1 - delta && bad[i];
    s.I[i] = good[i] && !base[i];
    s.S[i] = !s.F[i] && !s.I[i];
    s.dS[i] = s.S[i] && !(source.z_upper[i] <= delta);
  }
  if (s0) *s0 = std::move(base);
  return s;
}

BmsChannel source_channel(const PartitionChain& chain, double sigma_s, int level, double c) {
  if (level < 1 || level > chain.levels) throw std::domain_error("level out of range");
  auto lm = coset_log_masses(chain, sigma_s, level, c);
  const std::size_t half = lm.size() / 2;
  const double top = *std::max_element(lm.begin(), lm.end());
  double total = 0;
  for (double v : lm) total += std::exp(v - top);
  // Output = prefix x_1..x_{l-1} (low bits of the coset index); input = x_l.
  std::vector<Symbol> joint(half);
  for (std::size_t p = 0; p < half; ++p)
    joint[p] = {std::exp(lm[p] - top) / total, std::exp(lm[p + half] - top) / total};
  double s = 0;
  for (const auto& j : joint) s += j.w0 + j.w1;
  for (auto& j : joint) {
    j.w0 /= s;
    j.w1 /= s;
  }
  return symmetrize_joint(joint);
}

std::vector<Role> roles_for(const IndexSets& s, Mode mode) {
  const std::size_t n = s.A.size();
  std::vector<Role> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mode == Mode::ModLambda) {
      r[i] = s.A[i] ? Role::Message : s.B[i] ? Role::Random : s.C[i] ? Role::Frozen : Role::Side;
    } else if (s.I[i]) {
      r[i] = s.A[i] ? Role::Message : Role::Random;
    } else if (s.F[i]) {
      r[i] = Role::Frozen;
    } else {
      r[i] = s.dS[i] ? Role::ShapeDraw : Role::ShapeMap;
    }
  }
  return r;
}

WiretapCode assemble_code(const CodeParams& params) {
  params.validate();
  const auto& chain = params.chain;
  const int r = chain.levels;
  const std::size_t n = params.n, mu = params.mu;
  const bool shaped = params.mode == Mode::Shaped;
  const double sb = shaped ? params.gauss.sigma_b_tilde() : params.gauss.sigma_b;
  const double se = shaped ? params.gauss.sigma_e_tilde() : params.gauss.sigma_e;

  // Jobs: (level, who) with who = 0 Bob, 1 Eve, 2 source.
  const int who_count = shaped ? 3 : 2;
  std::vector<PolarStats> stats(static_cast<std::size_t>(r * who_count));
  for (int job = 0; job < r * who_count; ++job) {
    const int level = job / who_count + 1, who = job % who_count;
    BmsChannel deg, up;
    if (who == 2) {
      deg = up = source_channel(chain, *params.gauss.sigma_s, level, params.gauss.c);
    } else {
      const double s = who == 0 ? sb : se;
      deg = make_partition_channel(chain, level, s, mu, Quantization::Degraded);
      up = make_partition_channel(chain, level, s, mu, Quantization::Upgraded);
    }
    stats[static_cast<std::size_t>(job)] = polarize_statistics(deg, up, n, mu);
  }
  auto st = [&](int l, int who) -> PolarStats& { return stats[static_cast<std::size_t>(l * who_count + who)]; };

  // Level l is degraded with respect to level l+1 for the same noise, so
  // bounds propagate upward (upper) and downward (lower).
  for (int who = 0; who < 2; ++who) {
    for (int l = 1; l < r; ++l)
      for (std::size_t i = 0; i < n; ++i)
        st(l, who).z_upper[i] = std::min(st(l, who).z_upper[i], st(l - 1, who).z_upper[i]);
    for (int l = r - 2; l >= 0; --l)
      for (std::size_t i = 0; i < n; ++i)
        st(l, who).z_lower[i] = std::max(st(l, who).z_lower[i], st(l + 1, who).z_lower[i]);
  }

  WiretapCode code;
  code.params = params;
  code.map_seed = hash_combine(params.seed, 0x6d61702d73656564ULL);
  code.levels.resize(static_cast<std::size_t>(r));

  const auto& pol = params.policy;
  double dg = pol.delta_good, db = pol.delta_bad, ds = pol.delta_shape;
  if (pol.kind == Policy::Kind::Beta) dg = db = ds = std::exp2(-std::pow(static_cast<double>(n), pol.beta));

  std::vector<Bits> good(static_cast<std::size_t>(r)), bad(static_cast<std::size_t>(r));
  for (int l = 0; l < r; ++l) {
    auto& lc = code.levels[static_cast<std::size_t>(l)];
    lc.cap_bob = level_capacity(chain, l + 1, sb);
    lc.cap_eve = level_capacity(chain, l + 1, se);
    check_degraded(st(l, 0), st(l, 1));
    if (pol.kind == Policy::Kind::RateTarget) {
      const double N = static_cast<double>(n);
      good[l] = best_k(st(l, 0).z_upper, std::lround(N * std::max(0.0, lc.cap_bob - pol.backoff)), true);
      bad[l] = best_k(st(l, 1).z_lower, std::lround(N * (1 - lc.cap_eve)), false);
    } else {
      good[l] = threshold_good(st(l, 0).z_upper, dg);
      bad[l] = threshold_bad(st(l, 1).z_lower, db);
    }
  }
  // Nesting: good sets grow and bad sets shrink with the level.
  for (int l = 1; l < r; ++l)
    for (std::size_t i = 0; i < n; ++i) good[l][i] |= good[l - 1][i];
  for (int l = r - 2; l >= 0; --l)
    for (std::size_t i = 0; i < n; ++i) bad[l][i] |= bad[l + 1][i];

  for (int l = 0; l < r; ++l) {
    auto& lc = code.levels[static_cast<std::size_t>(l)];
    auto sec = secrecy_partition_from_sets(good[l], bad[l]);
    lc.sets.A = sec.A;
    lc.sets.B = sec.B;
    lc.sets.C = sec.C;
    lc.sets.D = sec.D;
    if (shaped) {
      auto sh = shaping_partition(st(l, 0), st(l, 2), good[l], bad[l], ds, &lc.sets.S0);
      lc.sets.F = sh.F;
      lc.sets.I = sh.I;
      lc.sets.S = sh.S;
      lc.sets.dS = sh.dS;
      lc.zs_up = st(l, 2).z_upper;
      lc.zs_lo = st(l, 2).z_lower;
    } else {
      lc.sets.I = good[l];
      lc.sets.F = Bits(n);
      for (std::size_t i = 0; i < n; ++i) lc.sets.F[i] = !good[l][i];
      lc.sets.S = lc.sets.dS = lc.sets.S0 = Bits(n, 0);
      lc.zs_up.assign(n, 1.0);
      lc.zs_lo.assign(n, 1.0);
    }
    lc.roles = roles_for(lc.sets, params.mode);
    lc.zb_up = st(l, 0).z_upper;
    lc.zb_lo = st(l, 0).z_lower;
    lc.ze_up = st(l, 1).z_upper;
    lc.ze_lo = st(l, 1).z_lower;
    Rng fr = Rng(params.seed).substream(1000 + static_cast<std::uint64_t>(l));
    lc.frozen.resize(n);
    for (auto& b : lc.frozen) b = fr.bit();
  }

  if (code.message_bits() == 0 && params.gauss.sigma_b < params.gauss.sigma_e)
    throw ConfigError("empty message set at all levels; relax the policy or increase N");
  return code;
}

Achievable achievable_rate(const PartitionChain& chain, double sigma_b, double sigma_e) {
  chain.validate();
  if (!(sigma_b > 0) || !(sigma_e >= sigma_b)) throw std::domain_error("need 0 < sigma_b <= sigma_e");
  Achievable a;
  const double v0 = chain.alpha, vr = chain.volume(chain.levels);
  a.eps1 = mod_capacity(v0, sigma_b) - mod_capacity(v0, sigma_e);
  a.epsb = aliasing_loss(vr, sigma_b);
  a.epse = aliasing_loss(vr, sigma_e);
  a.capacity_ref = std::log2(sigma_e / sigma_b);
  a.gap = a.eps1 + a.epse - a.epsb;
  a.rate = a.capacity_ref - a.gap;
  return a;
}

Achievable achievable_rate_shaped(const PartitionChain& chain, double sigma_s, double sigma_b,
                                  double sigma_e) {
  return achievable_rate(chain, mmse_sigma(sigma_s, sigma_b), mmse_sigma(sigma_s, sigma_e));
}

int levels_for_aliasing(double alpha, double sigma_e, double tol, int max_levels) {
  for (int r = 1; r <= max_levels; ++r)
    if (aliasing_loss(std::ldexp(alpha, r), sigma_e) < tol) return r;
  throw NumericError("no chain depth reaches the aliasing tolerance");
}

RateReport rate_report(const WiretapCode& code) {
  RateReport rep;
  const double N = static_cast<double>(code.n());
  const auto& g = code.params.gauss;
  for (std::size_t l = 0; l < code.levels.size(); ++l) {
    const auto& lc = code.levels[l];
    LevelRates lr;
    lr.level = static_cast<int>(l) + 1;
    lr.a = count(lc.sets.A);
    lr.b = count(lc.sets.B);
    lr.c = count(lc.sets.C);
    lr.d = count(lc.sets.D);
    lr.f = count(lc.sets.F);
    lr.i = count(lc.sets.I);
    lr.s = count(lc.sets.S);
    lr.ds = count(lc.sets.dS);
    std::size_t rnd = 0, frz = 0, shp = 0;
    for (std::size_t i = 0; i < lc.roles.size(); ++i) {
      switch (lc.roles[i]) {
        case Role::Message:
          rep.union_bound += lc.zb_up[i];
          break;
        case Role::Random:
          rep.union_bound += lc.zb_up[i];
          ++rnd;
          break;
        case Role::Side:
          ++rnd;
          break;
        case Role::Frozen:
          ++frz;
          break;
        case Role::ShapeMap:
          rep.union_bound += lc.zs_up[i];
          ++shp;
          break;
        case Role::ShapeDraw:
          ++shp;
          break;
      }
    }
    lr.message_rate = lr.a / N;
    lr.random_rate = rnd / N;
    lr.frozen_rate = frz / N;
    lr.shaping_rate = shp / N;
    lr.cap_bob = lc.cap_bob;
    lr.cap_eve = lc.cap_eve;
    rep.message_rate += lr.message_rate;
    rep.random_rate += lr.random_rate;
    rep.frozen_rate += lr.frozen_rate;
    rep.shaping_rate += lr.shaping_rate;
    rep.levels.push_back(lr);
  }
  rep.design = code.params.mode == Mode::Shaped
                   ? achievable_rate_shaped(code.params.chain, *g.sigma_s, g.sigma_b, g.sigma_e)
                   : achievable_rate(code.params.chain, g.sigma_b, g.sigma_e);
  rep.gap_code = rep.design.capacity_ref - rep.message_rate;
  return rep;
}

nlohmann::json to_json(const RateReport& r) {
  nlohmann::json j;
  j["message_rate"] = r.message_rate;
  j["random_rate"] = r.random_rate;
  j["frozen_rate"] = r.frozen_rate;
  j["shaping_rate"] = r.shaping_rate;
  j["capacity_ref"] = r.design.capacity_ref;
  j["design_rate"] = r.design.rate;
  j["design_gap"] = r.design.gap;
  j["eps1"] = r.design.eps1;
  j["epsb"] = r.design.epsb;
  j["epse"] = r.design.epse;
  j["gap_code"] = r.gap_code;
  j["union_bound"] = r.union_bound;
  for (const auto& l : r.levels)
    j["levels"].push_back({{"level", l.level},
                           {"A", l.a},
                           {"B", l.b},
                           {"C", l.c},
                           {"D", l.d},
                           {"F", l.f},
                           {"I", l.i},
                           {"S", l.s},
                           {"dS", l.ds},
                           {"message_rate", l.message_rate},
                           {"random_rate", l.random_rate},
                           {"frozen_rate", l.frozen_rate},
                           {"shaping_rate", l.shaping_rate},
                           {"cap_bob", l.cap_bob},
                           {"cap_eve", l.cap_eve}});
  return j;
}

std::vector<std::string> check_invariants(const WiretapCode& code) {
  std::vector<std::string> bad;
  const std::size_t n = code.n();
  const bool shaped = code.params.mode == Mode::Shaped;
  auto fail = [&](std::size_t l, const std::string& what) {
    bad.push_back("level " + std::to_string(l + 1) + ": " + what);
  };
  if (!is_pow2(n)) bad.push_back("N is not a power of two");
  if (code.levels.size() != static_cast<std::size_t>(code.params.chain.levels))
    bad.push_back("level count does not match the chain");
  for (std::size_t l = 0; l < code.levels.size(); ++l) {
    const auto& s = code.levels[l].sets;
    const auto& lc = code.levels[l];
    for (const Bits* b : {&s.A, &s.B, &s.C, &s.D, &s.F, &s.I, &s.S, &s.dS, &s.S0, &lc.frozen})
      if (b->size() != n) {
        fail(l, "set length mismatch");
        goto next_level;
      }
    if (lc.roles.size() != n) {
      fail(l, "role length mismatch");
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (s.A[i] + s.B[i] + s.C[i] + s.D[i] != 1) {
        fail(l, "A,B,C,D do not partition index " + std::to_string(i));
        break;
      }
      if (s.F[i] + s.I[i] + s.S[i] != 1) {
        fail(l, "F,I,S do not partition index " + std::to_string(i));
        break;
      }
      if (s.A[i] && s.S[i]) fail(l, "A meets S at " + std::to_string(i));
      if (s.A[i] && !s.I[i]) fail(l, "A not inside I at " + std::to_string(i));
      if (s.C[i] && s.S0[i]) fail(l, "C meets the shaping set at " + std::to_string(i));
      if (s.dS[i] && !s.S[i]) fail(l, "dS not inside S at " + std::to_string(i));
      if (shaped && s.D[i] && !s.S[i]) fail(l, "D not inside S at " + std::to_string(i));
      if (!shaped && (s.S[i] || s.dS[i])) fail(l, "shaping set in mod-lambda mode");
      if (l + 1 < code.levels.size() && code.levels[l + 1].sets.C.size() == n &&
          code.levels[l + 1].sets.C[i] && !s.C[i])
        fail(l, "C not nested over the next level at " + std::to_string(i));
    }
    if (lc.roles != roles_for(s, code.params.mode)) fail(l, "roles inconsistent with sets");
  next_level:;
  }
  return bad;
}

}  // namespace plw
