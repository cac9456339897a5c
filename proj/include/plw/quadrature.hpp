#pragma once

#include <functional>

namespace plw {

// Adaptive Simpson on [a,b] to absolute tolerance `tol`. Throws NumericError
// when the recursion depth limit is reached.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 48);

// Trapezoid rule over one period [a, a+period), doubling the node count
// until two successive estimates agree to `tol` (absolute) or rel*|I|.
// Spectrally accurate for smooth periodic integrands.
double periodic_trapezoid(const std::function<double(double)>& f, double a, double period,
                          double tol, int min_nodes = 64, int max_nodes = 1 << 22,
                          double rel = 1e-13);

}  // namespace plw
