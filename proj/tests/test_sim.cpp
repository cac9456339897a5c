#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "plw/polar.hpp"
#include "plw/sim.hpp"

using namespace plw;

namespace {

CodeParams sim_params(Mode mode) {
  CodeParams p;
  p.n = 64;
  p.chain = {1.0, 2};
  p.gauss.sigma_b = 0.25;
  p.gauss.sigma_e = 0.8;
  p.mode = mode;
  p.mu = 16;
  p.seed = 5;
  p.policy.delta_good = p.policy.delta_bad = p.policy.delta_shape = 1e-3;
  if (mode == Mode::Shaped) p.gauss.sigma_s = 1.2;
  return p;
}

WiretapCode tiny_shaped(const std::vector<std::string>& roles, double alpha, double sigma_s) {
  WiretapCode code;
  code.params.n = roles[0].size();
  code.params.chain = {alpha, static_cast<int>(roles.size())};
  code.params.mode = Mode::Shaped;
  code.params.gauss.sigma_s = sigma_s;
  Rng fr(1);
  for (const auto& r : roles) {
    LevelCode lc;
    auto& s = lc.sets;
    const std::size_t n = r.size();
    for (Bits* b : {&s.A, &s.B, &s.C, &s.D, &s.F, &s.I, &s.S, &s.dS, &s.S0}) b->assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      s.A[i] = r[i] == 'M';
      s.B[i] = r[i] == 'R';
      s.C[i] = r[i] == 'F';
      s.D[i] = r[i] == 'd' || r[i] == 's';
      s.I[i] = s.A[i] || s.B[i];
      s.F[i] = s.C[i];
      s.S[i] = s.D[i];
      s.dS[i] = r[i] == 'd';
    }
    lc.roles = roles_for(s, Mode::Shaped);
    lc.frozen.resize(n);
    for (auto& b : lc.frozen) b = fr.bit();
    code.levels.push_back(std::move(lc));
  }
  return code;
}

// Exhaustive TV: P(u) from the product of coset priors over x = uG, and
// conditionals by explicit marginalization over the remaining bits.
double brute_tv(const WiretapCode& code, const ShapingMap* map) {
  const std::size_t n = code.n(), r = code.levels.size();
  const auto& chain = code.params.chain;
  std::vector<std::vector<double>> lm;
  for (std::size_t l = 0; l < r; ++l) lm.push_back(coset_log_masses(chain, *code.params.gauss.sigma_s, int(l) + 1));
  auto px = [&](std::size_t l, std::uint32_t prefix, int bit) {
    auto pr = coset_prior_from_masses(lm[l], prefix);
    return pr[bit];
  };
  auto unpack = [&](unsigned v) {
    Bits b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = (v >> i) & 1;
    return b;
  };
  double tv = 0;
  const unsigned per = 1u << n;
  unsigned total = 1;
  for (std::size_t l = 0; l < r; ++l) total *= per;
  for (unsigned all = 0; all < total; ++all) {
    std::vector<Bits> us, xs;
    for (std::size_t l = 0; l < r; ++l) {
      us.push_back(unpack((all / static_cast<unsigned>(std::pow(per, l))) % per));
      xs.push_back(polar_encode(us.back()));
    }
    double P = 1, Q = 1;
    for (std::size_t l = 0; l < r; ++l) {
      auto prefix = [&](std::size_t j) {
        std::uint32_t p = 0;
        for (std::size_t t = 0; t < l; ++t) p |= std::uint32_t(xs[t][j]) << t;
        return p;
      };
      auto level_prob = [&](const Bits& u) {
        Bits x = polar_encode(u);
        double p = 1;
        for (std::size_t j = 0; j < n; ++j) p *= px(l, prefix(j), x[j]);
        return p;
      };
      std::vector<Bits> lower(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(l));
      const std::uint64_t ctx = shaping_context(lower, n);
      std::uint64_t rolling = 0;
      for (std::size_t i = 0; i < n; ++i) {
        // P(u_i = b | u_<i) by summing over u_>i.
        double m[2] = {0, 0};
        for (int b = 0; b < 2; ++b)
          for (unsigned rest = 0; rest < (1u << (n - i - 1)); ++rest) {
            Bits u = us[l];
            u[i] = static_cast<std::uint8_t>(b);
            for (std::size_t j = i + 1; j < n; ++j) u[j] = (rest >> (j - i - 1)) & 1;
            m[b] += level_prob(u);
          }
        const double c0 = m[0] / (m[0] + m[1]);
        const int bit = us[l][i];
        P *= bit ? 1 - c0 : c0;
        const Role role = code.levels[l].roles[i];
        double q = 0.5;
        if (role == Role::ShapeMap) q = (c0 >= 0.5 ? 0 : 1) == bit;
        if (role == Role::ShapeDraw) {
          if (map) {
            double d = map->draw(int(l), i, shaping_key(ctx, rolling), 0);
            q = (d < c0 ? 0 : 1) == bit;
          } else {
            q = bit ? 1 - c0 : c0;
          }
        }
        Q *= q;
        rolling = shaping_roll(rolling, static_cast<std::uint8_t>(bit));
      }
    }
    tv += std::fabs(P - Q);
  }
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("leakage bound: trivial instances and the threshold formula") {
  auto code = assemble_code(sim_params(Mode::ModLambda));
  auto lk = leakage_upper_bound(code);
  double want = 0;
  std::size_t ac = 0;
  for (const auto& l : code.levels)
    for (std::size_t i = 0; i < code.n(); ++i)
      if (l.sets.A[i] || l.sets.C[i]) {
        want += std::sqrt(1 - l.ze_lo[i] * l.ze_lo[i]);
        ++ac;
      }
  CHECK(lk.bits == doctest::Approx(want).epsilon(1e-12));
  CHECK(lk.bits <= ac * std::sqrt(2 * 1e-3));
  CHECK(lk.per_message_bit == doctest::Approx(lk.bits / code.message_bits()));

  auto useless = code;
  for (auto& l : useless.levels) std::fill(l.ze_lo.begin(), l.ze_lo.end(), 1.0);
  CHECK(leakage_upper_bound(useless).bits == 0.0);

  auto same = code;
  for (auto& l : same.levels) {
    l.ze_lo = l.zb_lo;
    l.sets.A = l.sets.I;  // pretend the good set were declared secure
    std::fill(l.sets.C.begin(), l.sets.C.end(), 0);
  }
  double good = 0;
  for (const auto& l : same.levels)
    for (auto b : l.sets.A) good += b;
  CHECK(leakage_upper_bound(same).bits >= 0.9 * good);

  auto broken = code;
  broken.levels[0].ze_lo.clear();
  CHECK_THROWS(leakage_upper_bound(broken));
}

TEST_CASE("leakage bound: smaller delta_bad never increases it") {
  double prev = -1;
  for (double db : {1e-6, 1e-4, 1e-3, 1e-2}) {
    auto p = sim_params(Mode::ModLambda);
    p.policy.delta_bad = db;
    auto code = assemble_code(p);
    double b = leakage_upper_bound(code).bits;
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("run_trials: noiseless limit, reproducibility, thread independence") {
  for (Mode mode : {Mode::ModLambda, Mode::Shaped}) {
    auto code = assemble_code(sim_params(mode));
    auto r = run_trials(code, 1e-4, 50, DecoderKind::SharedMap, 9);
    CHECK(r.fer == 0.0);
    CHECK(r.frames == 50);
    CHECK(r.empirical_power >= 0.0);
    auto a = run_trials(code, 0.3, 40, DecoderKind::SharedMap, 3);
    setenv("PLW_THREADS", "3", 1);
    auto b = run_trials(code, 0.3, 40, DecoderKind::SharedMap, 3);
    unsetenv("PLW_THREADS");
    CHECK(to_json(code, a) == to_json(code, b));
    CHECK(to_csv_row(code, a) == to_csv_row(code, b));
  }
  CHECK_THROWS(run_trials(assemble_code(sim_params(Mode::ModLambda)), 0.3, 0, DecoderKind::SharedMap, 1));
}

TEST_CASE("run_trials: block-Markov decoder at zero noise") {
  auto p = sim_params(Mode::Shaped);
  p.n = 256;
  p.gauss.sigma_e = 1.5;
  p.policy.delta_good = p.policy.delta_bad = p.policy.delta_shape = 1e-2;
  auto code = assemble_code(p);
  auto r = run_trials(code, 1e-4, 5, DecoderKind::BlockMarkov, 2, 3);
  CHECK(r.frames == 15);
  CHECK(r.fer == 0.0);
  CHECK(r.blocks == 3);
}

TEST_CASE("run_trials: shaped power stays within the shaping variance") {
  auto code = assemble_code(sim_params(Mode::Shaped));
  auto r = run_trials(code, 0.25, 300, DecoderKind::SharedMap, 17);
  const double ss = *code.params.gauss.sigma_s;
  CHECK(r.empirical_power <= ss * ss + 4 * r.power_se);
}

TEST_CASE("CSV header is fixed and rows match it") {
  auto code = assemble_code(sim_params(Mode::ModLambda));
  auto r = run_trials(code, 0.2, 4, DecoderKind::SharedMap, 1);
  auto row = to_csv_row(code, r);
  auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(commas(row) == commas(sim_csv_header()));
  CHECK(sim_csv_header().rfind("mode,n,levels,alpha", 0) == 0);
}

TEST_CASE("discrete Gaussian MI: limits and the lower bound") {
  CHECK(discrete_gaussian_mi(2.0, 500.0, 1.0) < 1e-4);
  CHECK(discrete_gaussian_mi(0.05, 1.0, 1.0) < 1e-6);
  // Continuous-input reference for a flat input: close to the Gaussian capacity.
  double i = discrete_gaussian_mi(6.0, 3.0, 0.5);
  CHECK(i == doctest::Approx(0.5 * std::log2(5.0)).epsilon(1e-3));
  for (double ratio : {2.0, 3.0})
    for (double snr : {1.0, 4.0}) {
      const double alpha = 1.0, ss = ratio * alpha, sigma = ss / std::sqrt(snr);
      const double eps = flatness_factor(alpha, mmse_sigma(ss, sigma));
      REQUIRE(eps < 0.5);
      CHECK(discrete_gaussian_mi(ss, sigma, alpha) >= 0.5 * std::log2(1 + snr) - 5 * eps - 1e-6);
    }
}

TEST_CASE("TV oracle: streaming equals exhaustive enumeration") {
  auto code = tiny_shaped({"dsMF", "FdRs"}, 1.0, 1.0);
  ShapingMap map{12345};
  double s1 = tv_distance_oracle(code, nullptr), b1 = brute_tv(code, nullptr);
  double s2 = tv_distance_oracle(code, &map), b2 = brute_tv(code, &map);
  CHECK(std::fabs(s1 - b1) <= 1e-12);
  CHECK(std::fabs(s2 - b2) <= 1e-12);
  CHECK(s1 > 0);
  CHECK(s2 >= s1);
  auto one = tiny_shaped({"dddddddd"}, 1.0, 0.8);
  CHECK(tv_distance_oracle(one, nullptr) <= 1e-12);
}

TEST_CASE("TV oracle: uniform and deterministic priors give zero") {
  auto flat = tiny_shaped({"MRFM", "RMMF"}, 1.0, 100.0);
  CHECK(tv_distance_oracle(flat, nullptr) == 0.0);
  auto det = tiny_shaped({"ssss", "ssss"}, 1.0, 0.01);
  CHECK(tv_distance_oracle(det, nullptr) == 0.0);
  CHECK(tv_distance_oracle(det, &*std::make_unique<ShapingMap>(ShapingMap{3})) == 0.0);
  auto big = tiny_shaped({"dddddddddddddddd"}, 1.0, 1.0);
  CHECK_THROWS_AS(tv_distance_oracle(big, nullptr), ConfigError);
}

TEST_CASE("conditioning never increases the asymmetric Bhattacharyya parameter") {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const int ny = 1 + static_cast<int>(rng.next() % 4), nz = 1 + static_cast<int>(rng.next() % 3);
    auto row = [&](int k) {
      std::vector<double> w(k);
      double s = 0;
      for (auto& v : w) s += v = rng.uniform() + 1e-3;
      for (auto& v : w) v /= s;
      return w;
    };
    double p0 = 0.05 + 0.9 * rng.uniform();
    auto y0 = row(ny), y1 = row(ny), z0 = row(nz), z1 = row(nz);
    std::vector<Symbol> sy, syz;
    for (int a = 0; a < ny; ++a) {
      sy.push_back({y0[a], y1[a]});
      for (int b = 0; b < nz; ++b) syz.push_back({y0[a] * z0[b], y1[a] * z1[b]});
    }
    AsymPair py{{p0, 1 - p0}, BmsChannel::from_symbols(sy, false)};
    AsymPair pyz{{p0, 1 - p0}, BmsChannel::from_symbols(syz, false)};
    CHECK(asym_bhattacharyya(pyz) <= asym_bhattacharyya(py) + 1e-12);
  }
}
