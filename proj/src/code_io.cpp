#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "plw/construction.hpp"

namespace plw {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'W', 'C', 'O', 'D', 'E', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "code files assume a little-endian host");

std::string policy_kind(Policy::Kind k) {
  switch (k) {
    case Policy::Kind::Thresholds: return "thresholds";
    case Policy::Kind::RateTarget: return "rate-target";
    case Policy::Kind::Beta: return "beta";
  }
  return "thresholds";
}

Policy::Kind policy_kind_from(const std::string& s) {
  if (s == "thresholds") return Policy::Kind::Thresholds;
  if (s == "rate-target") return Policy::Kind::RateTarget;
  if (s == "beta") return Policy::Kind::Beta;
  throw ConfigError("unknown policy kind '" + s + "'");
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  void doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (double d : v) put(d);
  }
  void bitmap(const Bits& b) {
    put<std::uint64_t>(b.size());
    std::string packed((b.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
    out += packed;
  }
  std::string out;
};

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> doubles(std::size_t expect) {
    auto n = get<std::uint64_t>();
    if (n != expect) throw IntegrityError("code file: vector length mismatch");
    std::vector<double> v(n);
    for (auto& d : v) d = get<double>();
    return v;
  }
  Bits bitmap(std::size_t expect) {
    auto n = get<std::uint64_t>();
    if (n != expect) throw IntegrityError("code file: bitmap length mismatch");
    need((n + 7) / 8);
    Bits b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = (s_[pos_ + i / 8] >> (i % 8)) & 1;
    pos_ += (n + 7) / 8;
    return b;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto v = s_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) {
    if (s_.size() - pos_ < n) throw IntegrityError("code file truncated");
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

nlohmann::json params_to_json(const CodeParams& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["chain"] = {{"alpha", p.chain.alpha}, {"levels", p.chain.levels}};
  j["noise"] = {{"sigma_b", p.gauss.sigma_b}, {"sigma_e", p.gauss.sigma_e}, {"center", p.gauss.c}};
  if (p.gauss.sigma_s) j["noise"]["sigma_s"] = *p.gauss.sigma_s;
  j["mode"] = to_string(p.mode);
  j["policy"] = {{"kind", policy_kind(p.policy.kind)},
                 {"delta_good", p.policy.delta_good},
                 {"delta_bad", p.policy.delta_bad},
                 {"delta_shape", p.policy.delta_shape},
                 {"beta", p.policy.beta},
                 {"backoff", p.policy.backoff}};
  j["mu"] = p.mu;
  j["seed"] = p.seed;
  return j;
}

CodeParams params_from_json(const nlohmann::json& j) {
  CodeParams p;
  try {
    p.n = j.at("n").get<std::size_t>();
    p.chain.alpha = j.at("chain").at("alpha").get<double>();
    p.chain.levels = j.at("chain").at("levels").get<int>();
    const auto& nz = j.at("noise");
    p.gauss.sigma_b = nz.at("sigma_b").get<double>();
    p.gauss.sigma_e = nz.at("sigma_e").get<double>();
    p.gauss.c = nz.value("center", 0.0);
    if (nz.contains("sigma_s") && !nz["sigma_s"].is_null()) p.gauss.sigma_s = nz["sigma_s"].get<double>();
    p.mode = mode_from_string(j.value("mode", std::string("mod-lambda")));
    if (j.contains("policy")) {
      const auto& pj = j["policy"];
      p.policy.kind = policy_kind_from(pj.value("kind", std::string("thresholds")));
      p.policy.delta_good = pj.value("delta_good", p.policy.delta_good);
      p.policy.delta_bad = pj.value("delta_bad", p.policy.delta_bad);
      p.policy.delta_shape = pj.value("delta_shape", p.policy.delta_shape);
      p.policy.beta = pj.value("beta", p.policy.beta);
      p.policy.backoff = pj.value("backoff", p.policy.backoff);
    }
    p.mu = j.value("mu", p.mu);
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("code parameters: ") + e.what());
  }
  p.validate();
  return p;
}

// Layout (little-endian):
//   magic[8] "PLWCODE1" | u32 version | u32 header_len | header JSON
//   u64 body_len | body | u32 crc32 of everything before it
// Body per level: f64 cap_bob, f64 cap_eve, six f64 vectors
// (zb_up, zb_lo, ze_up, ze_lo, zs_up, zs_lo) and ten bitmaps
// (A, B, C, D, F, I, S, dS, S0, frozen); vectors and bitmaps carry a u64 length.
std::string code_to_bytes(const WiretapCode& code) {
  nlohmann::json h;
  h["schema"] = "plw-code/1";
  h["params"] = params_to_json(code.params);
  h["map_seed"] = code.map_seed;
  h["rates"] = to_json(rate_report(code));
  const std::string header = h.dump();

  Writer body;
  for (const auto& l : code.levels) {
    body.put(l.cap_bob);
    body.put(l.cap_eve);
    for (const auto* v : {&l.zb_up, &l.zb_lo, &l.ze_up, &l.ze_lo, &l.zs_up, &l.zs_lo}) body.doubles(*v);
    const auto& s = l.sets;
    for (const auto* b : {&s.A, &s.B, &s.C, &s.D, &s.F, &s.I, &s.S, &s.dS, &s.S0, &l.frozen})
      body.bitmap(*b);
  }

  Writer w;
  w.out.append(kMagic, 8);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(header.size()));
  w.out += header;
  w.put(static_cast<std::uint64_t>(body.out.size()));
  w.out += body.out;
  w.put(crc(w.out));
  return w.out;
}

WiretapCode code_from_bytes(const std::string& bytes) {
  if (bytes.size() < 8 + 4 + 4 + 8 + 4 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw IntegrityError("not a code file (bad magic)");
  const std::string_view all(bytes);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (stored != crc(all.substr(0, bytes.size() - 4))) throw IntegrityError("code file checksum mismatch");

  Reader rd(all.substr(8, bytes.size() - 12));
  if (rd.get<std::uint32_t>() != kVersion) throw IntegrityError("unsupported code file version");
  auto hlen = rd.get<std::uint32_t>();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(rd.bytes(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("code file header: ") + e.what());
  }
  WiretapCode code;
  try {
    if (h.at("schema") != "plw-code/1") throw IntegrityError("unknown code schema");
    code.params = params_from_json(h.at("params"));
    code.map_seed = h.at("map_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("code file header: ") + e.what());
  }
  auto blen = rd.get<std::uint64_t>();
  Reader body(rd.bytes(blen));
  if (!rd.done()) throw IntegrityError("trailing bytes in code file");
  const std::size_t n = code.params.n;
  code.levels.resize(static_cast<std::size_t>(code.params.chain.levels));
  for (auto& l : code.levels) {
    l.cap_bob = body.get<double>();
    l.cap_eve = body.get<double>();
    for (auto* v : {&l.zb_up, &l.zb_lo, &l.ze_up, &l.ze_lo, &l.zs_up, &l.zs_lo}) *v = body.doubles(n);
    auto& s = l.sets;
    for (auto* b : {&s.A, &s.B, &s.C, &s.D, &s.F, &s.I, &s.S, &s.dS, &s.S0, &l.frozen}) *b = body.bitmap(n);
    l.roles = roles_for(s, code.params.mode);
  }
  if (!body.done()) throw IntegrityError("trailing bytes in code body");
  return code;
}

void save_code(const WiretapCode& code, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  const auto bytes = code_to_bytes(code);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("write failed: " + path);
}

WiretapCode load_code(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return code_from_bytes(ss.str());
}

}  // namespace plw
