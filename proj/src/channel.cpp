#include "plw/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "plw/detail/classes.hpp"

namespace plw {

using detail::Cls;

namespace {

constexpr double kFlush = 1e-300;

double flush(double x) { return x < kFlush ? 0.0 : x; }

double xlog2(double x, double y) { return x > 0 ? x * std::log2(x / y) : 0.0; }

// Contribution of one symbol to the uniform-input mutual information.
double sym_info(const Symbol& s) {
  double q = 0.5 * (s.w0 + s.w1);
  if (q <= 0) return 0.0;
  return 0.5 * xlog2(s.w0, q) + 0.5 * xlog2(s.w1, q);
}

double posterior0(const Symbol& s) { return s.w0 / (s.w0 + s.w1); }

std::vector<Symbol> canonical_symbols(std::vector<Symbol> in) {
  std::vector<Symbol> v;
  v.reserve(in.size());
  for (auto s : in) {
    if (!(s.w0 >= 0) || !(s.w1 >= 0) || !std::isfinite(s.w0) || !std::isfinite(s.w1))
      throw std::invalid_argument("likelihoods must be finite and nonnegative");
    s.w0 = flush(s.w0);
    s.w1 = flush(s.w1);
    if (s.w0 + s.w1 > 0) v.push_back(s);
  }
  std::stable_sort(v.begin(), v.end(),
                   [](const Symbol& x, const Symbol& y) { return posterior0(x) > posterior0(y); });
  std::vector<Symbol> out;
  for (const auto& s : v) {
    if (!out.empty() && (out.back().w0 * s.w1 == out.back().w1 * s.w0 ||
                         posterior0(out.back()) == posterior0(s))) {
      out.back().w0 += s.w0;
      out.back().w1 += s.w1;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

void check_sums(const std::vector<Symbol>& v, double tol) {
  double s0 = 0, s1 = 0;
  for (const auto& s : v) {
    s0 += s.w0;
    s1 += s.w1;
  }
  if (std::fabs(s0 - 1) > tol || std::fabs(s1 - 1) > tol) {
    std::ostringstream os;
    os << "likelihood rows must sum to 1 (got " << s0 << ", " << s1 << ")";
    throw std::invalid_argument(os.str());
  }
}

bool pairs_up(const std::vector<Symbol>& v) {
  auto a = v, b = v;
  for (auto& s : b) std::swap(s.w0, s.w1);
  auto lex = [](const Symbol& x, const Symbol& y) {
    return x.w0 != y.w0 ? x.w0 < y.w0 : x.w1 < y.w1;
  };
  std::sort(a.begin(), a.end(), lex);
  std::sort(b.begin(), b.end(), lex);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double scale = std::max({a[i].w0, a[i].w1, 1e-300});
    if (std::fabs(a[i].w0 - b[i].w0) > 1e-12 * scale || std::fabs(a[i].w1 - b[i].w1) > 1e-12 * scale)
      return false;
  }
  return true;
}

// Generic greedy adjacent merge over an LR-sorted list.
template <class T, class CostFn, class CountFn, class MergeFn>
std::vector<T> greedy_adjacent_merge(const std::vector<T>& items, std::size_t target,
                                     CostFn cost, CountFn count, MergeFn merge) {
  const std::size_t n = items.size();
  std::size_t total = 0;
  for (const auto& x : items) total += count(x);
  if (total <= target || n < 2) return items;
  std::vector<T> v = items;
  std::vector<long> prev(n), next(n);
  std::vector<unsigned> version(n, 0);
  std::vector<char> alive(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = static_cast<long>(i) - 1;
    next[i] = (i + 1 < n) ? static_cast<long>(i + 1) : -1;
  }
  struct Entry {
    double cost;
    long i;
    unsigned ver;
    bool operator>(const Entry& o) const { return cost != o.cost ? cost > o.cost : i > o.i; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  auto push = [&](long i) {
    if (i < 0 || next[i] < 0) return;
    heap.push({cost(v[i], v[next[i]]), i, version[i]});
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push(static_cast<long>(i));
  while (total > target && !heap.empty()) {
    auto e = heap.top();
    heap.pop();
    if (!alive[e.i] || e.ver != version[e.i] || next[e.i] < 0) continue;
    long j = next[e.i];
    total -= count(v[e.i]) + count(v[j]);
    v[e.i] = merge(v[e.i], v[j]);
    total += count(v[e.i]);
    alive[j] = 0;
    next[e.i] = next[j];
    if (next[j] >= 0) prev[next[j]] = e.i;
    ++version[e.i];
    push(e.i);
    if (prev[e.i] >= 0) {
      ++version[prev[e.i]];
      push(prev[e.i]);
    }
  }
  std::vector<T> out;
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) out.push_back(v[i]);
  return out;
}

}  // namespace

namespace detail {

double cls_info(const Cls& c) {
  double m = c.a + c.b;
  if (m <= 0) return 0.0;
  return xlog2(c.a, 0.5 * m) + xlog2(c.b, 0.5 * m);
}

double cls_z(const Cls& c) { return 2.0 * std::sqrt(c.a * c.b); }

std::size_t cls_count(const Cls& c) { return c.a == c.b ? 1 : 2; }

std::vector<Cls> canonical_classes(std::vector<Cls> in) {
  std::vector<Cls> v;
  v.reserve(in.size());
  for (auto c : in) {
    c.a = flush(c.a);
    c.b = flush(c.b);
    if (c.a < c.b) std::swap(c.a, c.b);
    if (c.a + c.b > 0) v.push_back(c);
  }
  auto key = [](const Cls& c) { return c.b / (c.a + c.b); };
  std::stable_sort(v.begin(), v.end(), [&](const Cls& x, const Cls& y) { return key(x) < key(y); });
  std::vector<Cls> out;
  out.reserve(v.size());
  for (const auto& c : v) {
    if (!out.empty() && (out.back().a * c.b == out.back().b * c.a || key(out.back()) == key(c))) {
      out.back().a += c.a;
      out.back().b += c.b;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

void normalize(std::vector<Cls>& v) {
  double s = 0;
  for (const auto& c : v) s += c.a + c.b;
  if (s <= 0) throw NumericError("channel has no probability mass");
  for (auto& c : v) {
    c.a /= s;
    c.b /= s;
  }
}

std::vector<Cls> classes_of(const BmsChannel& ch) {
  if (!ch.symmetric()) throw std::invalid_argument("operation requires a symmetric channel");
  std::vector<Cls> v;
  for (const auto& s : ch.symbols()) {
    if (s.w0 > s.w1)
      v.push_back({s.w0, s.w1});
    else if (s.w0 == s.w1)
      v.push_back({0.5 * s.w0, 0.5 * s.w1});
  }
  return v;
}

BmsChannel channel_of(std::vector<Cls> classes) {
  auto v = canonical_classes(std::move(classes));
  std::vector<Symbol> s;
  s.reserve(2 * v.size());
  for (const auto& c : v)
    if (c.a != c.b) s.push_back({c.a, c.b});
  for (const auto& c : v)
    if (c.a == c.b) s.push_back({2 * c.a, 2 * c.b});
  for (auto it = v.rbegin(); it != v.rend(); ++it)
    if (it->a != it->b) s.push_back({it->b, it->a});
  return BmsChannel::from_canonical(std::move(s));
}

std::vector<Cls> degrade_classes(const std::vector<Cls>& v, std::size_t mu) {
  auto cost = [](const Cls& x, const Cls& y) {
    return cls_info(x) + cls_info(y) - cls_info({x.a + y.a, x.b + y.b});
  };
  auto merge = [](const Cls& x, const Cls& y) { return Cls{x.a + y.a, x.b + y.b}; };
  return greedy_adjacent_merge(v, mu, cost, cls_count, merge);
}

std::vector<Cls> upgrade_classes(const std::vector<Cls>& input, std::size_t mu) {
  std::vector<Cls> v = input;
  std::size_t total = 0;
  for (const auto& c : v) total += cls_count(c);
  const std::size_t n = v.size();
  if (total <= mu) return v;
  std::vector<long> prev(n), next(n);
  std::vector<unsigned> version(n, 0);
  std::vector<char> alive(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = static_cast<long>(i) - 1;
    next[i] = (i + 1 < n) ? static_cast<long>(i + 1) : -1;
  }
  auto post = [](const Cls& c) { return c.a / (c.a + c.b); };
  // Moves class j onto its neighbours' LR points.
  auto split = [&](long j, Cls& hi, Cls& lo) {
    const Cls& c = v[j];
    double m = c.a + c.b, ph = post(hi), pl = post(lo);
    double mh = (ph == pl) ? m : (c.a - m * pl) / (ph - pl);
    mh = std::clamp(mh, 0.0, m);
    double ml = m - mh;
    double sh = 1.0 + mh / (hi.a + hi.b), sl = 1.0 + ml / (lo.a + lo.b);
    hi.a *= sh;
    hi.b *= sh;
    lo.a *= sl;
    lo.b *= sl;
  };
  auto cost = [&](long j) {
    Cls hi = v[prev[j]], lo = v[next[j]];
    double before = cls_info(hi) + cls_info(lo) + cls_info(v[j]);
    split(j, hi, lo);
    return cls_info(hi) + cls_info(lo) - before;
  };
  struct Entry {
    double cost;
    long i;
    unsigned ver;
    bool operator>(const Entry& o) const { return cost != o.cost ? cost > o.cost : i > o.i; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  auto push = [&](long j) {
    if (j < 0 || prev[j] < 0 || next[j] < 0) return;
    heap.push({cost(j), j, version[j]});
  };
  for (std::size_t j = 1; j + 1 < n; ++j) push(static_cast<long>(j));
  while (total > mu && !heap.empty()) {
    auto e = heap.top();
    heap.pop();
    long j = e.i;
    if (!alive[j] || e.ver != version[j] || prev[j] < 0 || next[j] < 0) continue;
    long h = prev[j], l = next[j];
    split(j, v[h], v[l]);
    total -= cls_count(v[j]);
    alive[j] = 0;
    next[h] = l;
    prev[l] = h;
    for (long t : {prev[h], h, l, next[l]}) {
      if (t < 0) continue;
      ++version[t];
      push(t);
    }
  }
  std::vector<Cls> out;
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) out.push_back(v[i]);
  if (total > mu) return {Cls{1.0, 0.0}};
  return out;
}

std::vector<Cls> minus_classes(const std::vector<Cls>& v) {
  std::vector<Cls> out;
  out.reserve(v.size() * (v.size() + 1) / 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& x = v[i];
    out.push_back({x.a * x.a + x.b * x.b, 2 * x.a * x.b});
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const auto& y = v[j];
      out.push_back({2 * (x.a * y.a + x.b * y.b), 2 * (x.a * y.b + x.b * y.a)});
    }
  }
  auto c = canonical_classes(std::move(out));
  normalize(c);
  return c;
}

std::vector<Cls> plus_classes(const std::vector<Cls>& v) {
  std::vector<Cls> out;
  out.reserve(v.size() * (v.size() + 1));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& x = v[i];
    out.push_back({x.a * x.a, x.b * x.b});
    out.push_back({x.a * x.b, x.a * x.b});
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const auto& y = v[j];
      out.push_back({2 * x.a * y.a, 2 * x.b * y.b});
      out.push_back({2 * x.a * y.b, 2 * x.b * y.a});
    }
  }
  auto c = canonical_classes(std::move(out));
  normalize(c);
  return c;
}

double classes_z(const std::vector<Cls>& v) {
  double z = 0;
  for (const auto& c : v) z += cls_z(c);
  return std::min(1.0, z);
}

double classes_info(const std::vector<Cls>& v) {
  double s = 0;
  for (const auto& c : v) s += cls_info(c);
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace detail

BmsChannel BmsChannel::from_canonical(std::vector<Symbol> s) {
  BmsChannel ch;
  ch.symbols_ = std::move(s);
  ch.symmetric_ = true;
  return ch;
}

BmsChannel BmsChannel::from_symbols(std::vector<Symbol> symbols, bool symmetric) {
  auto v = canonical_symbols(std::move(symbols));
  check_sums(v, 1e-12);
  if (!symmetric) {
    BmsChannel ch;
    ch.symbols_ = std::move(v);
    return ch;
  }
  if (!pairs_up(v)) throw std::invalid_argument("symbols do not pair up under conjugation");
  BmsChannel tmp;
  tmp.symbols_ = std::move(v);
  tmp.symmetric_ = true;
  return detail::channel_of(detail::classes_of(tmp));
}

BmsChannel BmsChannel::bsc(double p) {
  if (!(p >= 0 && p <= 1)) throw std::domain_error("crossover must be in [0,1]");
  return from_symbols({{1 - p, p}, {p, 1 - p}}, true);
}

BmsChannel BmsChannel::bec(double eps) {
  if (!(eps >= 0 && eps <= 1)) throw std::domain_error("erasure probability must be in [0,1]");
  return from_symbols({{1 - eps, 0}, {eps, eps}, {0, 1 - eps}}, true);
}

BmsChannel BmsChannel::perfect() { return from_symbols({{1, 0}, {0, 1}}, true); }

void AsymPair::validate() const {
  if (!(prior[0] >= 0 && prior[1] >= 0) || std::fabs(prior[0] + prior[1] - 1) > 1e-12)
    throw std::invalid_argument("prior must be a probability pair");
  check_sums(channel.symbols(), 1e-12);
}

double bhattacharyya(const BmsChannel& ch) {
  double z = 0;
  for (const auto& s : ch.symbols()) z += std::sqrt(s.w0 * s.w1);
  return std::min(1.0, z);
}

double mutual_information(const BmsChannel& ch) {
  double i = 0;
  for (const auto& s : ch.symbols()) i += sym_info(s);
  return std::clamp(i, 0.0, 1.0);
}

double asym_bhattacharyya(const AsymPair& pair) {
  double z = 0;
  for (const auto& s : pair.channel.symbols())
    z += std::sqrt(pair.prior[0] * s.w0 * pair.prior[1] * s.w1);
  return std::min(1.0, 2.0 * z);
}

BmsChannel symmetrize_joint(const std::vector<Symbol>& joint) {
  std::vector<Cls> v;
  double total = 0;
  for (const auto& s : joint) {
    if (!(s.w0 >= 0 && s.w1 >= 0)) throw std::invalid_argument("joint masses must be nonnegative");
    v.push_back({s.w0, s.w1});
    total += s.w0 + s.w1;
  }
  if (std::fabs(total - 1) > 1e-12) throw std::invalid_argument("joint masses must sum to 1");
  return detail::channel_of(std::move(v));
}

BmsChannel symmetrize(const AsymPair& pair) {
  pair.validate();
  std::vector<Symbol> joint;
  for (const auto& s : pair.channel.symbols())
    joint.push_back({pair.prior[0] * s.w0, pair.prior[1] * s.w1});
  return symmetrize_joint(joint);
}

BmsChannel degrade_merge(const BmsChannel& ch, std::size_t mu) {
  if (mu < 2) throw std::domain_error("mu must be at least 2");
  if (ch.symmetric()) return detail::channel_of(detail::degrade_classes(detail::classes_of(ch), mu));
  auto cost = [](const Symbol& x, const Symbol& y) {
    return sym_info(x) + sym_info(y) - sym_info({x.w0 + y.w0, x.w1 + y.w1});
  };
  auto count = [](const Symbol&) -> std::size_t { return 1; };
  auto merge = [](const Symbol& x, const Symbol& y) { return Symbol{x.w0 + y.w0, x.w1 + y.w1}; };
  return BmsChannel::from_symbols(greedy_adjacent_merge(ch.symbols(), mu, cost, count, merge), false);
}

BmsChannel upgrade_merge(const BmsChannel& ch, std::size_t mu) {
  if (mu < 2) throw std::domain_error("mu must be at least 2");
  return detail::channel_of(detail::upgrade_classes(detail::classes_of(ch), mu));
}

BmsChannel polar_minus(const BmsChannel& ch) {
  return detail::channel_of(detail::minus_classes(detail::classes_of(ch)));
}

BmsChannel polar_plus(const BmsChannel& ch) {
  return detail::channel_of(detail::plus_classes(detail::classes_of(ch)));
}

std::pair<BmsChannel, BmsChannel> polar_split(const BmsChannel& ch) {
  auto c = detail::classes_of(ch);
  return {detail::channel_of(detail::minus_classes(c)), detail::channel_of(detail::plus_classes(c))};
}

// ---- partition channels ----

namespace {

double std_normal_interval(double lo, double hi) {
  constexpr double r = std::numbers::sqrt2;
  if (lo >= 0) return 0.5 * (std::erfc(lo / r) - std::erfc(hi / r));
  if (hi <= 0) return 0.5 * (std::erfc(-hi / r) - std::erfc(-lo / r));
  return 1.0 - 0.5 * std::erfc(-lo / r) - 0.5 * std::erfc(hi / r);
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double target,
              bool increasing) {
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    bool below = f(mid) < target;
    if (below == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double periodic_gauss_mass(double z1, double z2, double offset, double period, double sigma) {
  if (!(z2 >= z1)) throw std::domain_error("interval must be ordered");
  if (sigma / period > 0.4) {
    const double a = 2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma / (period * period);
    double s = (z2 - z1) / period;
    for (int t = 1;; ++t) {
      double q = std::exp(-a * t * t);
      if (q < 1e-16) break;
      double w = 2.0 * std::numbers::pi * t / period;
      s += q / (std::numbers::pi * t) * (std::sin(w * (z2 - offset)) - std::sin(w * (z1 - offset)));
    }
    return std::max(0.0, s);
  }
  long lo = static_cast<long>(std::floor((z1 - offset - 40 * sigma) / period));
  long hi = static_cast<long>(std::ceil((z2 - offset + 40 * sigma) / period));
  double s = 0;
  for (long k = lo; k <= hi; ++k) {
    double c = offset + static_cast<double>(k) * period;
    s += std_normal_interval((z1 - c) / sigma, (z2 - c) / sigma);
  }
  return s;
}

BmsChannel make_partition_channel(const PartitionChain& chain, int level, double sigma,
                                  std::size_t mu, Quantization q, double max_loss) {
  chain.validate();
  if (level < 1 || level > chain.levels) throw std::domain_error("level out of range");
  if (!(sigma > 0)) throw std::domain_error("sigma must be positive");
  if (mu < 8) throw std::domain_error("mu must be at least 8");
  const double d = chain.volume(level - 1), P = 2 * d, half = 0.5 * d;
  const std::size_t K = 4 * mu;

  auto mass = [&](double z) {
    return periodic_gauss_mass(0, z, 0, P, sigma) + periodic_gauss_mass(0, z, d, P, sigma);
  };
  auto llr = [&](double z) {
    return log_periodic_gaussian(z, P, sigma) - log_periodic_gaussian(z - d, P, sigma);
  };
  auto post = [&](double z) { return 1.0 / (1.0 + std::exp(-llr(z))); };

  std::vector<double> cuts{0.0, half};
  double total = mass(half);
  for (std::size_t j = 1; j < K; ++j)
    cuts.push_back(bisect(mass, 0, half, total * static_cast<double>(j) / K, true));
  double ptop = post(0);
  if (ptop > 0.5) {
    for (std::size_t j = 1; j < K; ++j)
      cuts.push_back(bisect(post, 0, half, ptop - (ptop - 0.5) * static_cast<double>(j) / K, false));
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> z{cuts.front()};
  for (double c : cuts)
    if (c - z.back() > 1e-14 * d) z.push_back(c);
  if (z.back() != half) z.back() = half;

  std::vector<Cls> fine;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    double a = 2 * periodic_gauss_mass(z[i], z[i + 1], 0, P, sigma);
    double b = 2 * periodic_gauss_mass(z[i], z[i + 1], d, P, sigma);
    fine.push_back({a, b});
  }
  // Upgraded fine channel: each bin's mass split onto its boundary LRs.
  std::vector<double> pz(z.size()), mz(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) pz[i] = post(z[i]);
  pz.back() = 0.5;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    Cls c = fine[i];
    if (c.a < c.b) std::swap(c.a, c.b);
    double m = c.a + c.b, ph = std::max(pz[i], pz[i + 1]), pl = std::min(pz[i], pz[i + 1]);
    double mh = (ph > pl) ? std::clamp((c.a - m * pl) / (ph - pl), 0.0, m) : m;
    std::size_t ih = pz[i] >= pz[i + 1] ? i : i + 1;
    mz[ih] += mh;
    mz[ih == i ? i + 1 : i] += m - mh;
  }
  std::vector<Cls> fine_up;
  for (std::size_t i = 0; i < z.size(); ++i) fine_up.push_back({mz[i] * pz[i], mz[i] * (1 - pz[i])});

  auto deg = detail::canonical_classes(std::move(fine));
  auto up = detail::canonical_classes(std::move(fine_up));
  detail::normalize(deg);
  detail::normalize(up);
  double i_deg = detail::classes_info(deg), i_up = detail::classes_info(up);
  std::vector<Cls> out;
  double loss;
  if (q == Quantization::Degraded) {
    out = detail::degrade_classes(deg, mu);
    loss = i_up - detail::classes_info(out);
  } else {
    out = detail::upgrade_classes(up, mu);
    loss = detail::classes_info(out) - i_deg;
  }
  if (loss > max_loss) {
    std::ostringstream os;
    os << "mu=" << mu << " cannot represent level " << level << " channel: capacity loss " << loss;
    throw QuantizationError(os.str(), loss);
  }
  return detail::channel_of(std::move(out));
}

BmsChannel make_equivalent_channel(const PartitionChain& chain, int level, double sigma,
                                   std::size_t bins, std::size_t mu) {
  chain.validate();
  if (level < 1 || level > chain.levels) throw std::domain_error("level out of range");
  const double region = chain.volume(chain.levels), period = chain.volume(level);
  const std::size_t prefixes = std::size_t{1} << (level - 1);
  if (!is_pow2(bins) || bins < (std::size_t{1} << chain.levels))
    throw std::domain_error("bins must be a power of two covering the level-r cells");
  const double w = region / static_cast<double>(bins);
  const double scale = std::ldexp(1.0, -(chain.levels - 1));
  std::vector<Cls> v;
  v.reserve(prefixes * bins);
  for (std::size_t j = 0; j < prefixes; ++j) {
    double off0 = chain.alpha * static_cast<double>(j);
    double off1 = off0 + chain.volume(level - 1);
    for (std::size_t b = 0; b < bins; ++b) {
      double z1 = w * static_cast<double>(b), z2 = z1 + w;
      double w0 = scale * periodic_gauss_mass(z1, z2, off0, period, sigma);
      double w1 = scale * periodic_gauss_mass(z1, z2, off1, period, sigma);
      // each output and its shifted twin contribute half a class
      v.push_back({0.5 * std::max(w0, w1), 0.5 * std::min(w0, w1)});
    }
  }
  auto c = detail::canonical_classes(std::move(v));
  detail::normalize(c);
  return detail::channel_of(detail::degrade_classes(c, mu));
}

// ---- serialization ----

namespace {

constexpr char kChannelMagic[4] = {'B', 'M', 'S', 'C'};
constexpr std::uint32_t kChannelVersion = 1;

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IntegrityError("truncated channel table");
  char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

std::string channel_to_binary(const BmsChannel& ch) {
  std::string out(kChannelMagic, 4);
  put_le<std::uint32_t>(out, kChannelVersion);
  put_le<std::uint8_t>(out, ch.symmetric() ? 1 : 0);
  put_le<std::uint64_t>(out, ch.size());
  for (const auto& s : ch.symbols()) {
    put_le(out, s.w0);
    put_le(out, s.w1);
  }
  return out;
}

BmsChannel channel_from_binary(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kChannelMagic, 4) != 0)
    throw IntegrityError("bad channel table magic");
  std::size_t pos = 4;
  if (get_le<std::uint32_t>(bytes, pos) != kChannelVersion)
    throw IntegrityError("unsupported channel table version");
  bool sym = get_le<std::uint8_t>(bytes, pos) != 0;
  auto n = get_le<std::uint64_t>(bytes, pos);
  if (n > (bytes.size() - pos) / 16) throw IntegrityError("truncated channel table");
  std::vector<Symbol> s(n);
  for (auto& x : s) {
    x.w0 = get_le<double>(bytes, pos);
    x.w1 = get_le<double>(bytes, pos);
  }
  if (pos != bytes.size()) throw IntegrityError("trailing bytes after channel table");
  return BmsChannel::from_symbols(std::move(s), sym);
}

nlohmann::json channel_to_json(const BmsChannel& ch) {
  nlohmann::json j;
  j["symmetric"] = ch.symmetric();
  auto& arr = j["symbols"] = nlohmann::json::array();
  for (const auto& s : ch.symbols()) arr.push_back({s.w0, s.w1});
  return j;
}

BmsChannel channel_from_json(const nlohmann::json& j) {
  std::vector<Symbol> s;
  for (const auto& p : j.at("symbols")) s.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return BmsChannel::from_symbols(std::move(s), j.at("symmetric").get<bool>());
}

}  // namespace plw
