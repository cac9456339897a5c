#include "plw/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "plw/codec.hpp"
#include "plw/polar.hpp"

namespace plw {

namespace {

namespace fs = std::filesystem;

void only_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

double effective_sigma_e(const CodeParams& p) {
  return p.mode == Mode::Shaped ? p.gauss.sigma_e_tilde() : p.gauss.sigma_e;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + s + "'");
  return v;
}

}  // namespace

Config config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  Config cfg;
  only_keys(j, {"schema", "chain", "noise", "code", "sim", "output"}, "config");
  if (j.value("schema", std::string()) != kConfigSchema)
    throw ConfigError(std::string("config: schema must be \"") + kConfigSchema + "\"");
  try {
    const auto& ch = j.at("chain");
    only_keys(ch, {"alpha", "levels", "aliasing_tol"}, "chain");
    const auto& nz = j.at("noise");
    only_keys(nz, {"sigma_b", "sigma_e", "sigma_s", "center"}, "noise");
    const auto& cj = j.at("code");
    only_keys(cj, {"n", "mode", "mu", "seed", "policy"}, "code");
    if (cj.contains("policy"))
      only_keys(cj["policy"], {"kind", "delta_good", "delta_bad", "delta_shape", "beta", "backoff"}, "code.policy");

    cfg.aliasing_tol = ch.value("aliasing_tol", cfg.aliasing_tol);
    nlohmann::json pj = cj;
    pj["noise"] = nz;
    pj["chain"] = {{"alpha", ch.at("alpha")}, {"levels", 1}};
    const auto& lv = ch.at("levels");
    cfg.levels_auto = lv.is_string();
    if (cfg.levels_auto) {
      if (lv.get<std::string>() != "auto") throw ConfigError("chain.levels: integer or \"auto\"");
      if (!(cfg.aliasing_tol > 0 && cfg.aliasing_tol < 1)) throw ConfigError("chain.aliasing_tol must be in (0,1)");
      CodeParams probe = params_from_json(pj);
      pj["chain"]["levels"] = levels_for_aliasing(probe.chain.alpha, effective_sigma_e(probe), cfg.aliasing_tol);
    } else {
      pj["chain"]["levels"] = lv;
    }
    cfg.code = params_from_json(pj);

    if (j.contains("sim")) {
      const auto& sj = j["sim"];
      only_keys(sj, {"trials", "decoder", "blocks", "sigma_b", "seed"}, "sim");
      cfg.sim.trials = sj.value("trials", cfg.sim.trials);
      cfg.sim.decoder = decoder_from_string(sj.value("decoder", std::string("shared-map")));
      cfg.sim.blocks = sj.value("blocks", cfg.sim.blocks);
      if (sj.contains("sigma_b")) {
        const auto& sb = sj["sigma_b"];
        if (sb.is_array())
          cfg.sim.sigma_b = sb.get<std::vector<double>>();
        else
          cfg.sim.sigma_b = {sb.get<double>()};
      }
      if (sj.contains("seed")) cfg.sim.seed = sj["seed"].get<std::uint64_t>();
      if (cfg.sim.trials == 0) throw ConfigError("sim.trials must be positive");
      if (cfg.sim.blocks < 2) throw ConfigError("sim.blocks must be at least 2");
      for (double s : cfg.sim.sigma_b)
        if (!(s > 0)) throw ConfigError("sim.sigma_b entries must be positive");
    }
    if (j.contains("output")) {
      const auto& oj = j["output"];
      only_keys(oj, {"code", "csv", "json"}, "output");
      cfg.output.code = resolve(base_dir, oj.value("code", std::string()));
      cfg.output.csv = resolve(base_dir, oj.value("csv", std::string()));
      cfg.output.json = resolve(base_dir, oj.value("json", std::string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

Config load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

Sweep parse_sweep(const std::string& spec) {
  Sweep s;
  for (const auto& part : split(spec, ';')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep: expected key=values in '" + part + "'");
    const std::string key = part.substr(0, eq);
    const auto vals = split(part.substr(eq + 1), ',');
    if (vals.empty()) throw ConfigError("sweep: no values for '" + key + "'");
    if (key == "alpha") {
      if (!s.alpha.empty()) throw ConfigError("sweep: alpha given twice");
      for (const auto& v : vals) {
        double a = parse_double(v);
        if (!(a > 0)) throw ConfigError("sweep: alpha must be positive");
        s.alpha.push_back(a);
      }
    } else if (key == "r") {
      if (!s.r.empty()) throw ConfigError("sweep: r given twice");
      for (const auto& v : vals) {
        if (v == "auto") {
          s.r.push_back(std::nullopt);
          continue;
        }
        double r = parse_double(v);
        if (r < 1 || r > 24 || r != std::floor(r)) throw ConfigError("sweep: r must be an integer in [1,24]");
        s.r.push_back(static_cast<int>(r));
      }
    } else {
      throw ConfigError("sweep: unknown key '" + key + "' (use alpha, r)");
    }
  }
  if (s.alpha.empty() && s.r.empty()) throw ConfigError("sweep: empty specification");
  return s;
}

std::vector<RatePoint> rate_sweep(const Config& cfg, const Sweep& sweep) {
  std::vector<double> alphas = sweep.alpha;
  if (alphas.empty()) alphas = {cfg.code.chain.alpha};
  std::vector<std::optional<int>> rs = sweep.r;
  if (rs.empty()) {
    if (cfg.levels_auto)
      rs = {std::nullopt};
    else
      rs = {cfg.code.chain.levels};
  }
  const auto& g = cfg.code.gauss;
  if (g.sigma_b >= g.sigma_e) throw ConfigError("rates: sigma_b must be below sigma_e");
  std::vector<RatePoint> out;
  for (double a : alphas)
    for (const auto& r : rs) {
      RatePoint p;
      p.alpha = a;
      CodeParams probe = cfg.code;
      probe.chain.alpha = a;
      p.r = r ? *r : levels_for_aliasing(a, effective_sigma_e(probe), cfg.aliasing_tol);
      PartitionChain chain{a, p.r};
      p.a = cfg.code.mode == Mode::Shaped ? achievable_rate_shaped(chain, *g.sigma_s, g.sigma_b, g.sigma_e)
                                          : achievable_rate(chain, g.sigma_b, g.sigma_e);
      out.push_back(p);
    }
  return out;
}

std::string rates_csv_header() { return "alpha,r,rate_bits,capacity_bits,gap_bits,eps1,epsb,epse"; }

std::string rates_csv(const std::vector<RatePoint>& pts) {
  std::ostringstream os;
  os.precision(12);
  os << rates_csv_header() << '\n';
  for (const auto& p : pts)
    os << p.alpha << ',' << p.r << ',' << p.a.rate << ',' << p.a.capacity_ref << ',' << p.a.gap << ',' << p.a.eps1
       << ',' << p.a.epsb << ',' << p.a.epse << '\n';
  return os.str();
}

void print_rate_table(std::ostream& os, const WiretapCode& code) {
  const auto rep = rate_report(code);
  const bool shaped = code.params.mode == Mode::Shaped;
  os << std::fixed << std::setprecision(4);
  os << "level      |A|      |B|      |C|      |D|";
  if (shaped) os << "      |F|      |I|      |S|     |dS|";
  os << "   cap_bob   cap_eve  msg_rate\n";
  for (const auto& l : rep.levels) {
    os << std::setw(5) << l.level << std::setw(9) << l.a << std::setw(9) << l.b << std::setw(9) << l.c
       << std::setw(9) << l.d;
    if (shaped) os << std::setw(9) << l.f << std::setw(9) << l.i << std::setw(9) << l.s << std::setw(9) << l.ds;
    os << std::setw(10) << l.cap_bob << std::setw(10) << l.cap_eve << std::setw(10) << l.message_rate << '\n';
  }
  os << "message rate     " << rep.message_rate << " bits/dim\n"
     << "design rate      " << rep.design.rate << " bits/dim\n"
     << "capacity ref     " << rep.design.capacity_ref << " bits/dim\n"
     << "design gap       " << rep.design.gap << " bits/dim\n"
     << "code gap         " << rep.gap_code << " bits/dim\n"
     << "union bound      " << std::scientific << std::setprecision(3) << rep.union_bound << '\n';
  os << std::defaultfloat << std::setprecision(6);
}

std::vector<Check> verify_suite(const Config& cfg, const std::string& code_path) {
  std::vector<Check> out;
  auto run = [&](const std::string& name, const std::function<std::string()>& fn) {
    Check c{name, true, ""};
    try {
      c.detail = fn();
      c.ok = c.detail.empty();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = e.what();
    }
    out.push_back(c);
  };

  CodeParams small = cfg.code;
  small.n = std::min<std::size_t>(small.n, 64);
  small.mu = std::min<std::size_t>(std::max<std::size_t>(small.mu, 8), 32);
  const auto& g = small.gauss;

  run("lattice: capacities in range, sampler reproducible", [&]() -> std::string {
    // Each level carries at most one bit: 0 <= C(Lambda_l) - C(Lambda_{l-1}) <= 1.
    double prev = mod_capacity(small.chain.alpha, g.sigma_b);
    if (prev < -1e-9) return "negative capacity";
    for (int l = 1; l <= small.chain.levels; ++l) {
      const double c = mod_capacity(small.chain.volume(l), g.sigma_b);
      if (c - prev < -1e-9 || c - prev > 1 + 1e-9) return "level " + std::to_string(l) + " capacity outside [0,1]";
      if (aliasing_loss(small.chain.volume(l), g.sigma_b) < -1e-9) return "negative aliasing loss";
      prev = c;
    }
    Rng a(small.seed), b(small.seed);
    for (int i = 0; i < 32; ++i)
      if (sample_discrete_gaussian(small.chain.alpha, 0.0, 1.0, a) !=
          sample_discrete_gaussian(small.chain.alpha, 0.0, 1.0, b))
        return "sampler not reproducible";
    return "";
  });

  run("channel: merges sandwich the partition channel", [&]() -> std::string {
    auto d = make_partition_channel(small.chain, 1, g.sigma_b, small.mu, Quantization::Degraded);
    auto u = make_partition_channel(small.chain, 1, g.sigma_b, small.mu, Quantization::Upgraded);
    if (bhattacharyya(d) + 1e-9 < bhattacharyya(u)) return "degraded channel beats upgraded one";
    auto dd = degrade_merge(d, 8);
    auto uu = upgrade_merge(u, 8);
    if (bhattacharyya(dd) + 1e-12 < bhattacharyya(d) || bhattacharyya(uu) > bhattacharyya(u) + 1e-12)
      return "merge moved Z the wrong way";
    return "";
  });

  run("polar: transform is an involution", [&]() -> std::string {
    Rng rng(small.seed);
    for (std::size_t n = 1; n <= small.n; n *= 2) {
      Bits u(n);
      for (auto& b : u) b = rng.bit();
      if (polar_encode(polar_encode(u)) != u) return "N=" + std::to_string(n);
    }
    return "";
  });

  WiretapCode code;
  run("construction: index-set invariants", [&]() -> std::string {
    code = assemble_code(small);
    std::string msg;
    for (const auto& v : check_invariants(code)) msg += (msg.empty() ? "" : "; ") + v;
    return msg;
  });
  const bool have_code = !code.levels.empty();

  run("construction: reproducible from the seed", [&]() -> std::string {
    if (!have_code) return "no code";
    return code_to_bytes(assemble_code(small)) == code_to_bytes(code) ? "" : "two constructions differ";
  });

  run("code file: round trip and corruption detection", [&]() -> std::string {
    if (!have_code) return "no code";
    const auto bytes = code_to_bytes(code);
    if (code_to_bytes(code_from_bytes(bytes)) != bytes) return "round trip not bit-exact";
    for (std::size_t pos : {std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
      auto bad = bytes;
      bad[pos] ^= 0x10;
      try {
        code_from_bytes(bad);
        return "corruption at byte " + std::to_string(pos) + " not detected";
      } catch (const IntegrityError&) {
      }
    }
    return "";
  });

  run("codec: noiseless round trip", [&]() -> std::string {
    if (!have_code) return "no code";
    auto r = run_trials(code, 1e-6, 10, DecoderKind::SharedMap, small.seed);
    return r.frame_errors == 0 ? "" : std::to_string(r.frame_errors) + " frame errors";
  });

  run("sim: reports independent of thread count", [&]() -> std::string {
    if (!have_code) return "no code";
    const char* old = std::getenv("PLW_THREADS");
    const std::string saved = old ? old : "";
    setenv("PLW_THREADS", "1", 1);
    auto a = run_trials(code, g.sigma_b, 8, DecoderKind::SharedMap, 3);
    setenv("PLW_THREADS", "2", 1);
    auto b = run_trials(code, g.sigma_b, 8, DecoderKind::SharedMap, 3);
    if (old)
      setenv("PLW_THREADS", saved.c_str(), 1);
    else
      unsetenv("PLW_THREADS");
    return to_json(code, a) == to_json(code, b) ? "" : "reports differ";
  });

  run("sim: leakage bound within threshold budget", [&]() -> std::string {
    if (!have_code) return "no code";
    auto lk = leakage_upper_bound(code);
    if (!(lk.bits >= 0) || !std::isfinite(lk.bits)) return "bound not finite";
    if (small.policy.kind != Policy::Kind::Thresholds) return "";
    std::size_t ac = 0;
    for (const auto& l : code.levels)
      for (std::size_t i = 0; i < code.n(); ++i) ac += l.sets.A[i] || l.sets.C[i];
    return lk.bits <= ac * std::sqrt(2 * small.policy.delta_bad) + 1e-12 ? "" : "bound exceeds budget";
  });

  if (!code_path.empty()) {
    run("code file: " + code_path, [&]() -> std::string {
      WiretapCode stored = load_code(code_path);
      std::string msg;
      for (const auto& v : check_invariants(stored)) msg += (msg.empty() ? "" : "; ") + v;
      if (!msg.empty()) return msg;
      if (params_to_json(stored.params) == params_to_json(cfg.code) &&
          code_to_bytes(stored) != code_to_bytes(assemble_code(cfg.code)))
        return "does not match a fresh construction from the config";
      return "";
    });
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
  if (!f) throw ConfigError("write failed: " + path);
}

int cmd_construct(const std::string& config_path, std::string out_path, std::ostream& out, std::ostream& err) {
  Config cfg = load_config(config_path);
  if (out_path.empty()) out_path = cfg.output.code;
  if (out_path.empty()) throw ConfigError("construct: no output path (--out or output.code)");
  if (cfg.code.gauss.sigma_b == cfg.code.gauss.sigma_e) err << "warning: zero secrecy capacity (sigma_b == sigma_e)\n";
  WiretapCode code = assemble_code(cfg.code);
  save_code(code, out_path);
  out << "wrote " << out_path << " (N=" << code.n() << ", levels=" << code.levels.size()
      << ", mode=" << to_string(code.params.mode) << ", message bits=" << code.message_bits() << ")\n";
  print_rate_table(out, code);
  return kExitOk;
}

int cmd_rates(const std::string& config_path, const std::string& sweep, std::string out_path, std::ostream& out) {
  Config cfg = load_config(config_path);
  auto pts = rate_sweep(cfg, parse_sweep(sweep));
  const auto csv = rates_csv(pts);
  if (out_path.empty()) out_path = cfg.output.csv;
  if (out_path.empty() || out_path == "-")
    out << csv;
  else {
    write_text(out_path, csv);
    out << "wrote " << pts.size() << " rows to " << out_path << '\n';
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string code, out, json, sigma_b, decoder = "shared-map";
  std::size_t trials = 0, blocks = 4;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  WiretapCode code = load_code(a.code);
  std::vector<double> sigmas;
  for (const auto& s : split(a.sigma_b, ',')) {
    double v = parse_double(s);
    if (!(v > 0)) throw ConfigError("simulate: sigma_b must be positive");
    sigmas.push_back(v);
  }
  if (sigmas.empty()) sigmas = {code.params.gauss.sigma_b};
  if (a.trials == 0) throw ConfigError("simulate: --trials must be positive");
  const DecoderKind dk = decoder_from_string(a.decoder);
  const std::uint64_t seed = a.seed.value_or(code.params.seed);

  std::ostringstream csv;
  csv << sim_csv_header() << '\n';
  nlohmann::json all = nlohmann::json::array();
  for (double s : sigmas) {
    auto r = run_trials(code, s, a.trials, dk, seed, a.blocks);
    csv << to_csv_row(code, r) << '\n';
    all.push_back(to_json(code, r));
    out << "sigma_b=" << s << " frames=" << r.frames << " errors=" << r.frame_errors << " fer=" << r.fer
        << " (se " << r.fer_se << ")\n";
  }
  if (a.out.empty() || a.out == "-")
    out << csv.str();
  else
    write_text(a.out, csv.str());
  if (!a.json.empty()) write_text(a.json, all.dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(const std::string& config_path, std::string code_path, std::ostream& out) {
  Config cfg = load_config(config_path);
  if (code_path.empty() && !cfg.output.code.empty() && fs::exists(cfg.output.code)) code_path = cfg.output.code;
  auto checks = verify_suite(cfg, code_path);
  std::size_t failed = 0;
  for (const auto& c : checks) {
    out << (c.ok ? "[ok]   " : "[FAIL] ") << c.name;
    if (!c.ok) out << ": " << c.detail;
    out << '\n';
    failed += !c.ok;
  }
  out << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
  return failed ? kExitIntegrity : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polar-lattice wiretap codes: construction, rates, simulation, verification", "plwiretap"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config, out_path, sweep, code_path;
  auto* construct = app.add_subcommand("construct", "Build a code from a config and write the code file");
  construct->add_option("--config", config, "Config JSON")->required();
  construct->add_option("--out", out_path, "Code file (default: output.code)");

  auto* rates = app.add_subcommand("rates", "Achievable-rate sweep as CSV");
  rates->add_option("--config", config, "Config JSON")->required();
  rates->add_option("--sweep", sweep, "e.g. 'alpha=5,2.5,1.25;r=2,3' (r accepts auto)")->required();
  rates->add_option("--out", out_path, "CSV path, '-' for stdout (default: output.csv)");

  SimulateArgs sa;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo FER, power and leakage bound");
  simulate->add_option("--code", sa.code, "Code file")->required();
  simulate->add_option("--trials", sa.trials, "Trials per noise level")->required();
  simulate->add_option("--out", sa.out, "CSV path, '-' for stdout")->required();
  simulate->add_option("--json", sa.json, "Full JSON report");
  simulate->add_option("--sigma-b", sa.sigma_b, "Comma list of Bob noise levels (default: design sigma_b)");
  simulate->add_option("--decoder", sa.decoder, "shared-map or block-markov");
  simulate->add_option("--blocks", sa.blocks, "Blocks per block-Markov frame");
  auto* seed_opt = simulate->add_option("--seed", seed, "Trial seed (default: code seed)");

  auto* verify = app.add_subcommand("verify", "Run the small-N property checks");
  verify->add_option("--config", config, "Config JSON")->required();
  verify->add_option("--code", code_path, "Code file to check (default: output.code if present)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*construct) return cmd_construct(config, out_path, out, err);
    if (*rates) return cmd_rates(config, sweep, out_path, out);
    if (*simulate) {
      if (*seed_opt) sa.seed = seed;
      return cmd_simulate(sa, out);
    }
    if (*verify) return cmd_verify(config, code_path, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace plw
