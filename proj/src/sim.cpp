#include "plw/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plw/polar.hpp"
#include "plw/quadrature.hpp"

namespace plw {

std::string to_string(DecoderKind d) { return d == DecoderKind::BlockMarkov ? "block-markov" : "shared-map"; }

DecoderKind decoder_from_string(const std::string& s) {
  if (s == "shared-map") return DecoderKind::SharedMap;
  if (s == "block-markov") return DecoderKind::BlockMarkov;
  throw ConfigError("unknown decoder '" + s + "'");
}

Leakage leakage_upper_bound(const WiretapCode& code) {
  Leakage out;
  for (const auto& l : code.levels) {
    if (l.ze_lo.size() != code.n()) throw std::invalid_argument("code has no eavesdropper statistics");
    for (std::size_t i = 0; i < code.n(); ++i)
      if (l.sets.A[i] || l.sets.C[i]) {
        const double z = std::clamp(l.ze_lo[i], 0.0, 1.0);
        out.bits += std::sqrt((1 - z) * (1 + z));
      }
  }
  const std::size_t k = code.message_bits();
  out.per_message_bit = k ? out.bits / static_cast<double>(k) : 0.0;
  return out;
}

namespace {

struct TrialResult {
  std::size_t frames = 0, errors = 0, symbols = 0;
  double p2 = 0, p4 = 0;
};

Bits draw_bits(std::size_t n, Rng& rng) {
  Bits b(n);
  for (auto& v : b) v = rng.bit();
  return b;
}

void tally_points(TrialResult& t, const std::vector<double>& pts) {
  for (double p : pts) {
    t.p2 += p * p;
    t.p4 += p * p * p * p;
  }
  t.symbols += pts.size();
}

std::vector<double> add_noise(const std::vector<double>& pts, double sigma, Rng& rng) {
  std::vector<double> y(pts.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = pts[i] + rng.normal(sigma);
  return y;
}

}  // namespace

SimReport run_trials(const WiretapCode& code, double sigma_b, std::size_t trials, DecoderKind decoder,
                     std::uint64_t seed, std::size_t blocks) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(sigma_b > 0)) throw std::domain_error("sigma_b must be positive");
  const ShapingMap shared{code.map_seed};
  std::vector<TrialResult> res(trials);
  const Rng root(seed);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = root.substream(t);
    TrialResult& r = res[t];
    if (decoder == DecoderKind::SharedMap) {
      Bits m = draw_bits(code.message_bits(), rng);
      auto cw = encode(code, m, shared, rng);
      auto y = add_noise(cw.points, sigma_b, rng);
      // Mod-lambda D bits are shared as side information; shaped mode shares the map.
      const bool shaped = code.params.mode == Mode::Shaped;
      auto d = sc_decode_multistage(code, y, sigma_b, &shared, shaped ? nullptr : &cw.side);
      r.frames = 1;
      r.errors = d.message != m;
      tally_points(r, cw.points);
    } else {
      auto sizes = block_markov_payloads(code, blocks);
      std::vector<Bits> msgs;
      for (auto s : sizes) msgs.push_back(draw_bits(s, rng));
      auto tx = block_markov_encode(code, msgs, rng);
      std::vector<std::vector<double>> rx;
      for (const auto& b : tx.blocks) {
        rx.push_back(add_noise(b.points, sigma_b, rng));
        tally_points(r, b.points);
      }
      auto out = block_markov_decode(code, rx, sigma_b, tx.out_of_band);
      r.frames = blocks;
      for (std::size_t j = 0; j < blocks; ++j) r.errors += out[j] != msgs[j];
    }
  });

  SimReport rep;
  rep.trials = trials;
  rep.sigma_b = sigma_b;
  rep.decoder = decoder;
  rep.blocks = decoder == DecoderKind::BlockMarkov ? blocks : 1;
  rep.seed = seed;
  double p2 = 0, p4 = 0;
  std::size_t symbols = 0;
  for (const auto& r : res) {
    rep.frames += r.frames;
    rep.frame_errors += r.errors;
    p2 += r.p2;
    p4 += r.p4;
    symbols += r.symbols;
  }
  const double f = static_cast<double>(rep.frames);
  rep.fer = rep.frame_errors / f;
  rep.fer_se = std::sqrt(rep.fer * (1 - rep.fer) / f);
  const double s = static_cast<double>(symbols);
  rep.empirical_power = p2 / s;
  rep.power_se = std::sqrt(std::max(0.0, p4 / s - rep.empirical_power * rep.empirical_power) / s);
  rep.leakage = leakage_upper_bound(code);
  rep.rates = rate_report(code);
  return rep;
}

std::string sim_csv_header() {
  return "mode,n,levels,alpha,sigma_b,sigma_e,sigma_s,decoder,blocks,trials,frames,frame_errors,fer,fer_se,"
         "empirical_power,power_se,leakage_bits,leakage_per_message_bit,message_rate,capacity_bits,union_bound,seed";
}

std::string to_csv_row(const WiretapCode& code, const SimReport& r) {
  const auto& p = code.params;
  std::ostringstream os;
  os.precision(10);
  os << to_string(p.mode) << ',' << p.n << ',' << p.chain.levels << ',' << p.chain.alpha << ',' << r.sigma_b << ','
     << p.gauss.sigma_e << ',';
  if (p.gauss.sigma_s) os << *p.gauss.sigma_s;
  os << ',' << to_string(r.decoder) << ',' << r.blocks << ',' << r.trials << ',' << r.frames << ','
     << r.frame_errors << ',' << r.fer << ',' << r.fer_se << ',' << r.empirical_power << ',' << r.power_se << ','
     << r.leakage.bits << ',' << r.leakage.per_message_bit << ',' << r.rates.message_rate << ','
     << r.rates.design.capacity_ref << ',' << r.rates.union_bound << ',' << r.seed;
  return os.str();
}

nlohmann::json to_json(const WiretapCode& code, const SimReport& r) {
  nlohmann::json j;
  j["params"] = params_to_json(code.params);
  j["sigma_b"] = r.sigma_b;
  j["decoder"] = to_string(r.decoder);
  j["blocks"] = r.blocks;
  j["trials"] = r.trials;
  j["frames"] = r.frames;
  j["frame_errors"] = r.frame_errors;
  j["fer"] = r.fer;
  j["fer_se"] = r.fer_se;
  j["empirical_power"] = r.empirical_power;
  j["power_se"] = r.power_se;
  j["leakage_bits"] = r.leakage.bits;
  j["leakage_per_message_bit"] = r.leakage.per_message_bit;
  j["rates"] = to_json(r.rates);
  j["seeds"] = {{"trial_root", r.seed}, {"code", code.params.seed}, {"map", code.map_seed}};
  return j;
}

double discrete_gaussian_mi(double sigma_s, double sigma, double alpha, double window, double tol) {
  if (!(sigma_s > 0 && sigma > 0 && alpha > 0 && window > 0)) throw std::domain_error("parameters must be positive");
  // Support of the input, normalized in the log domain.
  const long K = static_cast<long>(std::ceil(window * sigma_s / alpha));
  std::vector<double> xs, logp;
  for (long k = -K; k <= K; ++k) {
    double x = alpha * static_cast<double>(k);
    xs.push_back(x);
    logp.push_back(-x * x / (2 * sigma_s * sigma_s));
  }
  double top = *std::max_element(logp.begin(), logp.end()), z = 0;
  for (double l : logp) z += std::exp(l - top);
  std::vector<double> p(xs.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logp[i] - top) / z;

  const double s2 = 2 * sigma * sigma, norm = 1 / std::sqrt(M_PI * s2), reach = 40 * sigma;
  auto density = [&](double y) {
    auto lo = std::lower_bound(xs.begin(), xs.end(), y - reach) - xs.begin();
    auto hi = std::upper_bound(xs.begin(), xs.end(), y + reach) - xs.begin();
    double f = 0;
    for (auto i = lo; i < hi; ++i) {
      double d = y - xs[static_cast<std::size_t>(i)];
      f += p[static_cast<std::size_t>(i)] * std::exp(-d * d / s2);
    }
    return f * norm;
  };
  auto integrand = [&](double y) {
    double f = density(y);
    return f > 0 ? -f * std::log2(f) : 0.0;
  };
  // Panels of width ~sigma keep every bump resolved by the adaptive rule.
  const double a = xs.front() - 12 * sigma, b = xs.back() + 12 * sigma;
  const double width = std::min(sigma, alpha);
  const auto panels = static_cast<std::size_t>(std::ceil((b - a) / width));
  double hy = 0;
  for (std::size_t k = 0; k < panels; ++k) {
    double x0 = a + (b - a) * k / panels, x1 = a + (b - a) * (k + 1) / panels;
    hy += adaptive_simpson(integrand, x0, x1, tol / panels);
  }
  const double hn = 0.5 * std::log2(2 * M_PI * M_E * sigma * sigma);
  return std::max(0.0, hy - hn);
}

namespace {

// LLR of u_i given u_0..u_{i-1} for independent positions with LLRs `l`,
// by the recursive SC formula.
double sc_llr(const std::vector<double>& l, const Bits& prefix, std::size_t i) {
  const std::size_t n = l.size();
  if (n == 1) return l[0];
  const std::size_t h = n / 2;
  std::vector<double> c(h);
  if (i < h) {
    for (std::size_t j = 0; j < h; ++j) c[j] = llr_f(l[j], l[j + h]);
    return sc_llr(c, Bits(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(std::min(i, h))), i);
  }
  Bits first(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(h));
  Bits xa = polar_encode(first);
  for (std::size_t j = 0; j < h; ++j) c[j] = llr_g(l[j], l[j + h], xa[j]);
  return sc_llr(c, Bits(prefix.begin() + static_cast<std::ptrdiff_t>(h), prefix.end()), i - h);
}

struct TvWalk {
  const WiretapCode& code;
  const ShapingMap* map;
  std::vector<Bits> xs;
  double acc = 0;

  void level(std::size_t l, double p, double q) {
    if (l == code.levels.size()) {
      acc += std::fabs(p - q);
      return;
    }
    auto prior = prior_llrs(code, static_cast<int>(l), xs);
    Bits u;
    bits(l, prior, u, shaping_context(xs, code.n()), 0, p, q);
  }

  void bits(std::size_t l, const std::vector<double>& prior, Bits& u, std::uint64_t ctx, std::uint64_t rolling,
            double p, double q) {
    const std::size_t i = u.size(), n = code.n();
    if (p == 0 && q == 0) return;
    if (i == n) {
      xs.push_back(polar_encode(u));
      level(l + 1, p, q);
      xs.pop_back();
      return;
    }
    const double L = sc_llr(prior, u, i);
    const double c0 = 1 / (1 + std::exp(-L));
    const Role role = code.levels[l].roles[i];
    for (std::uint8_t b = 0; b < 2; ++b) {
      const double pc = b ? 1 - c0 : c0;
      double qc = 0.5;
      if (role == Role::ShapeMap) {
        qc = (L >= 0 ? 0 : 1) == b;
      } else if (role == Role::ShapeDraw) {
        if (map) {
          const double d = map->draw(static_cast<int>(l), i, shaping_key(ctx, rolling), 0);
          qc = (d < c0 ? 0 : 1) == b;
        } else {
          qc = pc;
        }
      }
      u.push_back(b);
      bits(l, prior, u, ctx, shaping_roll(rolling, b), p * pc, q * qc);
      u.pop_back();
    }
  }
};

}  // namespace

double tv_distance_oracle(const WiretapCode& code, const ShapingMap* map) {
  if (code.params.mode != Mode::Shaped) throw std::invalid_argument("TV oracle needs a shaped code");
  if (code.n() > 8 || code.params.chain.levels > 2) throw ConfigError("TV oracle instance too large (N <= 8, r <= 2)");
  TvWalk w{code, map, {}, 0};
  w.level(0, 1.0, 1.0);
  return std::clamp(0.5 * w.acc, 0.0, 1.0);
}

}  // namespace plw
