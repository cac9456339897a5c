#include "plw/quadrature.hpp"

#include <cmath>
#include <sstream>

#include "plw/common.hpp"

namespace plw {
namespace {

struct Simpson {
  const std::function<double(double)>& f;
  int max_depth;
  bool failed = false;
  double worst_a = 0, worst_b = 0;

  double rec(double a, double fa, double b, double fb, double m, double fm, double whole,
             double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0) {
      if (std::fabs(delta) > 15.0 * tol && !failed) {
        failed = true;
        worst_a = a;
        worst_b = b;
      }
      return left + right + delta / 15.0;
    }
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return rec(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           rec(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  Simpson s{f, max_depth};
  // Start from 8 panels so narrow features are not skipped by the first test.
  const int panels = 8;
  double h = (b - a) / panels, total = 0;
  for (int p = 0; p < panels; ++p) {
    double x0 = a + p * h, x1 = (p + 1 == panels) ? b : x0 + h, xm = 0.5 * (x0 + x1);
    double f0 = f(x0), f1 = f(x1), fm = f(xm);
    double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += s.rec(x0, f0, x1, f1, xm, fm, whole, tol / panels, max_depth);
  }
  if (s.failed || !std::isfinite(total)) {
    std::ostringstream os;
    os << "adaptive Simpson did not converge on [" << a << ", " << b << "], first failing panel ["
       << s.worst_a << ", " << s.worst_b << "], estimate " << total;
    throw NumericError(os.str());
  }
  return total;
}

double periodic_trapezoid(const std::function<double(double)>& f, double a, double period,
                          double tol, int min_nodes, int max_nodes, double rel) {
  int n = min_nodes;
  double h = period / n, sum = 0;
  for (int i = 0; i < n; ++i) sum += f(a + i * h);
  double est = sum * h;
  while (n < max_nodes) {
    double add = 0;
    for (int i = 0; i < n; ++i) add += f(a + (i + 0.5) * h);
    sum += add;
    n *= 2;
    h *= 0.5;
    double next = sum * h;
    if (!std::isfinite(next)) break;
    if (std::fabs(next - est) <= std::max(tol, rel * std::fabs(next))) return next;
    est = next;
  }
  std::ostringstream os;
  os << "periodic trapezoid did not converge: period " << period << ", nodes " << n
     << ", estimate " << est;
  throw NumericError(os.str());
}

}  // namespace plw
