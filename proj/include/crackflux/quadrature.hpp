#pragma once

#include <functional>
#include <vector>

namespace crackflux {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss_legendre(int n);

// Fixed-order Gauss-Legendre on [a, b].
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n = 20);

struct Integral1D {
    double value = 0;
    double error = 0;
};

// Adaptive Gauss-Kronrod (15 point) on [a, b].
Integral1D adaptive_1d(const std::function<double(double)>& f, double a, double b, double tol,
                       unsigned max_depth = 30);

// Pairwise summation in the given order.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace crackflux
