#pragma once

#include "crackflux/geom.hpp"
#include "crackflux/types.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace crackflux {

// Symmetric 2x2 coefficient field A(x).
class TensorField {
public:
    virtual ~TensorField() = default;

    virtual Mat2 eval(const Vec2& x) const = 0;
    // d A / d x_k for k = 0, 1. Central differences unless overridden.
    virtual std::array<Mat2, 2> grad(const Vec2& x) const;
    virtual bool is_constant() const { return false; }
    virtual bool is_identity() const { return false; }
    virtual std::string kind() const = 0;
    virtual std::vector<double> params() const { return {}; }

    double fd_step() const { return h_; }
    void set_fd_step(double h) { h_ = h; }

private:
    double h_ = 1e-6;
};

using FieldPtr = std::shared_ptr<const TensorField>;

FieldPtr make_identity();
FieldPtr make_diagonal(double a11, double a22);
FieldPtr make_constant(const Mat2& A);
// I + amp sin(freq x1) diag(1, -1)
FieldPtr make_sinusoidal(double amp, double freq);
// R(theta) diag(l1, l2) R(theta)^T with theta = theta0 + slope x1 (derivatives by differences)
FieldPtr make_rotated(double l1, double l2, double theta0, double slope);

struct SqrtPair {
    Mat2 half;      // M^{1/2}
    Mat2 inv_half;  // M^{-1/2}
};

// Closed-form square roots of a symmetric positive definite 2x2 matrix.
SqrtPair spd_sqrt(const Mat2& M);

// Eigenvalues (ascending) of a symmetric 2x2 matrix.
std::array<double, 2> sym_eigenvalues(const Mat2& M);

// Time-dependent tip quantities.
double a_factor(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A);
// |A^{-1/2} gamma'| sqrt(det A): tip flux factor of k S(Phi) when Phi normalizes A to I at the tip.
// Differs from a_factor by the factor |A^{1/2} n|.
double a_factor_chart(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A);
double transported_speed(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A);

// Minimum eigenvalue of A over an n x n grid of [lo, hi] (points outside `domain` are skipped when given).
double ellipticity_margin(const TensorField& A, const Vec2& lo, const Vec2& hi, int n = 100,
                          const Domain* domain = nullptr);

}  // namespace crackflux
