#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plw/cli.hpp"

using namespace plw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("plw_cli_" + std::to_string(Rng(reinterpret_cast<std::uintptr_t>(this)).next()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

nlohmann::json base_config() {
  return nlohmann::json::parse(R"({
    "schema": "plw-config/1",
    "chain": {"alpha": 1.0, "levels": 2},
    "noise": {"sigma_b": 0.25, "sigma_e": 0.8},
    "code": {"n": 64, "mode": "mod-lambda", "mu": 16, "seed": 4,
             "policy": {"kind": "thresholds", "delta_good": 1e-3, "delta_bad": 1e-3}},
    "sim": {"trials": 20},
    "output": {"code": "c.plwc", "csv": "r.csv"}
  })");
}

std::string write_config(const TempDir& d, const nlohmann::json& j, const std::string& name = "cfg.json") {
  std::ofstream(d.file(name)) << j.dump(2);
  return d.file(name);
}

struct Run {
  int rc;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "plwiretap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config: schema, sections and validation") {
  auto cfg = config_from_json(base_config(), "/base");
  CHECK(cfg.code.n == 64);
  CHECK(cfg.code.chain.levels == 2);
  CHECK(cfg.output.code == "/base/c.plwc");
  CHECK(cfg.sim.trials == 20);

  auto bad = [](auto edit) {
    auto j = base_config();
    edit(j);
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  };
  bad([](auto& j) { j["schema"] = "plw-config/0"; });
  bad([](auto& j) { j["code"]["n"] = 48; });
  bad([](auto& j) { j["code"]["mode"] = "shaped"; });
  bad([](auto& j) { j["noise"]["sigma_e"] = 0.1; });
  bad([](auto& j) { j["extra"] = 1; });
  bad([](auto& j) { j["code"]["policy"]["delta"] = 1e-3; });
  bad([](auto& j) { j["chain"]["levels"] = "many"; });
  bad([](auto& j) { j["sim"]["decoder"] = "guess"; });
  bad([](auto& j) { j["noise"].erase("sigma_b"); });

  auto j = base_config();
  j["chain"]["levels"] = "auto";
  j["noise"]["sigma_e"] = 2.0;
  j["chain"]["alpha"] = 2.5;
  CHECK(config_from_json(j).code.chain.levels == levels_for_aliasing(2.5, 2.0));
}

TEST_CASE("sweep parsing") {
  auto s = parse_sweep("alpha=5,2.5;r=2,auto");
  CHECK(s.alpha == std::vector<double>{5, 2.5});
  REQUIRE(s.r.size() == 2);
  CHECK(s.r[0] == 2);
  CHECK(!s.r[1]);
  CHECK_THROWS_AS(parse_sweep(""), ConfigError);
  CHECK_THROWS_AS(parse_sweep("alpha=x"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("r=1.5"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("gamma=1"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("alpha=-1"), ConfigError);
}

TEST_CASE("rates: fixed header, decreasing gap over alpha, r trend") {
  TempDir d;
  auto j = base_config();
  j["noise"] = {{"sigma_b", 1.0}, {"sigma_e", 2.0}};
  auto path = write_config(d, j);
  auto r = cli({"rates", "--config", path, "--sweep", "alpha=5,2.5,1.25;r=auto", "--out", d.file("a.csv")});
  REQUIRE(r.rc == 0);
  std::istringstream csv(slurp(d.file("a.csv")));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "alpha,r,rate_bits,capacity_bits,gap_bits,eps1,epsb,epse");
  std::vector<double> gaps;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    REQUIRE(f.size() == 8);
    gaps.push_back(std::stod(f[4]));
  }
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[0] > gaps[1]);
  CHECK(gaps[1] > gaps[2]);

  auto pts = rate_sweep(config_from_json(j), parse_sweep("alpha=0.5;r=1,2,3,4,5"));
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].a.gap <= pts[i - 1].a.gap + 1e-12);
  CHECK(pts.back().a.gap < 0.01);

  CHECK(cli({"rates", "--config", path, "--sweep", "beta=1"}).rc == kExitConfig);
}

TEST_CASE("construct: code file, rates table, warning, exit codes") {
  TempDir d;
  auto path = write_config(d, base_config());
  auto r = cli({"construct", "--config", path, "--out", d.file("x.plwc")});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("message rate") != std::string::npos);
  CHECK(r.err.empty());
  // Round trip: the written file equals a fresh construction.
  auto code = load_code(d.file("x.plwc"));
  CHECK(code_to_bytes(code) == code_to_bytes(assemble_code(config_from_json(base_config()).code)));
  // Two runs with equal configs are byte-identical.
  REQUIRE(cli({"construct", "--config", path, "--out", d.file("y.plwc")}).rc == 0);
  CHECK(slurp(d.file("x.plwc")) == slurp(d.file("y.plwc")));
  // Default output path from the config.
  REQUIRE(cli({"construct", "--config", path}).rc == 0);
  CHECK(fs::exists(d.file("c.plwc")));

  auto eq = base_config();
  eq["noise"]["sigma_e"] = 0.25;
  auto r2 = cli({"construct", "--config", write_config(d, eq, "eq.json"), "--out", d.file("eq.plwc")});
  CHECK(r2.rc == 0);
  CHECK(r2.err.find("zero secrecy capacity") != std::string::npos);
  CHECK(fs::exists(d.file("eq.plwc")));

  auto bad = base_config();
  bad["code"]["n"] = 100;
  CHECK(cli({"construct", "--config", write_config(d, bad, "bad.json"), "--out", d.file("b.plwc")}).rc == kExitConfig);
  CHECK(cli({"construct", "--config", d.file("missing.json")}).rc == kExitConfig);
  CHECK(cli({"construct"}).rc == kExitConfig);
  CHECK(cli({}).rc == kExitConfig);

  auto huge = base_config();
  huge["code"]["n"] = 8;
  huge["noise"]["sigma_b"] = 0.79;
  CHECK(cli({"construct", "--config", write_config(d, huge, "starved.json"), "--out", d.file("s.plwc")}).rc ==
        kExitConfig);
}

TEST_CASE("simulate: noiseless row, determinism, corrupted input") {
  TempDir d;
  auto path = write_config(d, base_config());
  REQUIRE(cli({"construct", "--config", path, "--out", d.file("c.plwc")}).rc == 0);
  auto r = cli({"simulate", "--code", d.file("c.plwc"), "--trials", "30", "--out", d.file("s.csv"), "--sigma-b",
                "1e-5", "--json", d.file("s.json")});
  REQUIRE(r.rc == 0);
  std::istringstream csv(slurp(d.file("s.csv")));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header == sim_csv_header());
  CHECK(row.find(",30,30,0,0,0,") != std::string::npos);  // trials, frames, errors, fer, se
  auto js = nlohmann::json::parse(slurp(d.file("s.json")));
  CHECK(js.at(0).at("fer") == 0.0);

  REQUIRE(cli({"simulate", "--code", d.file("c.plwc"), "--trials", "30", "--out", d.file("t.csv"), "--sigma-b",
               "1e-5", "--json", d.file("t.json")}).rc == 0);
  CHECK(slurp(d.file("s.csv")) == slurp(d.file("t.csv")));
  CHECK(slurp(d.file("s.json")) == slurp(d.file("t.json")));

  CHECK(cli({"simulate", "--code", d.file("c.plwc"), "--trials", "0", "--out", "-"}).rc == kExitConfig);
  CHECK(cli({"simulate", "--code", d.file("c.plwc"), "--trials", "3", "--out", "-", "--decoder", "x"}).rc ==
        kExitConfig);

  auto bytes = slurp(d.file("c.plwc"));
  bytes[bytes.size() / 2] ^= 1;
  std::ofstream(d.file("bad.plwc"), std::ios::binary) << bytes;
  CHECK(cli({"simulate", "--code", d.file("bad.plwc"), "--trials", "3", "--out", "-"}).rc == kExitIntegrity);
}

TEST_CASE("verify: pristine passes, corrupted code file exits 4") {
  TempDir d;
  auto path = write_config(d, base_config());
  auto r = cli({"verify", "--config", path});
  CHECK(r.rc == 0);
  CHECK(r.out.find("[FAIL]") == std::string::npos);

  REQUIRE(cli({"construct", "--config", path}).rc == 0);
  auto r2 = cli({"verify", "--config", path});
  CHECK(r2.rc == 0);
  CHECK(r2.out.find("code file") != std::string::npos);

  auto bytes = slurp(d.file("c.plwc"));
  bytes[bytes.size() - 2] ^= 0x40;
  std::ofstream(d.file("c.plwc"), std::ios::binary | std::ios::trunc) << bytes;
  auto r3 = cli({"verify", "--config", path});
  CHECK(r3.rc == kExitIntegrity);
  CHECK(r3.out.find("checksum") != std::string::npos);
}
