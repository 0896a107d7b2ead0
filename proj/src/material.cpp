#include "crackflux/material.hpp"

#include <cmath>
#include <sstream>

namespace crackflux {

std::array<Mat2, 2> TensorField::grad(const Vec2& x) const {
    std::array<Mat2, 2> g;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e(k) = h_;
        g[k] = (eval(x + e) - eval(x - e)) / (2 * h_);
    }
    return g;
}

namespace {

class ConstantField final : public TensorField {
public:
    ConstantField(const Mat2& A, std::string kind) : A_(A), kind_(std::move(kind)) {}
    Mat2 eval(const Vec2&) const override { return A_; }
    std::array<Mat2, 2> grad(const Vec2&) const override { return {Mat2::Zero(), Mat2::Zero()}; }
    bool is_constant() const override { return true; }
    bool is_identity() const override { return A_ == Mat2::Identity(); }
    std::string kind() const override { return kind_; }
    std::vector<double> params() const override { return {A_(0, 0), A_(0, 1), A_(1, 1)}; }

private:
    Mat2 A_;
    std::string kind_;
};

class SinusoidalField final : public TensorField {
public:
    SinusoidalField(double amp, double freq) : amp_(amp), w_(freq) {}
    Mat2 eval(const Vec2& x) const override {
        const double s = amp_ * std::sin(w_ * x.x());
        return Mat2{{1 + s, 0}, {0, 1 - s}};
    }
    std::array<Mat2, 2> grad(const Vec2& x) const override {
        const double c = amp_ * w_ * std::cos(w_ * x.x());
        return {Mat2{{c, 0}, {0, -c}}, Mat2::Zero()};
    }
    std::string kind() const override { return "sinusoidal"; }
    std::vector<double> params() const override { return {amp_, w_}; }

private:
    double amp_, w_;
};

class RotatedField final : public TensorField {
public:
    RotatedField(double l1, double l2, double th0, double slope) : l1_(l1), l2_(l2), th0_(th0), k_(slope) {}
    Mat2 eval(const Vec2& x) const override {
        const double th = th0_ + k_ * x.x();
        const double c = std::cos(th), s = std::sin(th);
        Mat2 R{{c, -s}, {s, c}};
        return R * Vec2(l1_, l2_).asDiagonal() * R.transpose();
    }
    bool is_constant() const override { return k_ == 0; }
    std::string kind() const override { return "rotated"; }
    std::vector<double> params() const override { return {l1_, l2_, th0_, k_}; }

private:
    double l1_, l2_, th0_, k_;
};

}  // namespace

FieldPtr make_identity() { return std::make_shared<ConstantField>(Mat2::Identity(), "identity"); }

FieldPtr make_diagonal(double a11, double a22) {
    return std::make_shared<ConstantField>(Mat2{{a11, 0}, {0, a22}}, "diagonal");
}

FieldPtr make_constant(const Mat2& A) {
    if (std::abs(A(0, 1) - A(1, 0)) > 1e-14) throw ParameterError("constant coefficient matrix must be symmetric");
    return std::make_shared<ConstantField>(A, "constant");
}

FieldPtr make_sinusoidal(double amp, double freq) { return std::make_shared<SinusoidalField>(amp, freq); }

FieldPtr make_rotated(double l1, double l2, double theta0, double slope) {
    if (!(l1 > 0 && l2 > 0)) throw ParameterError("rotated field eigenvalues must be positive");
    return std::make_shared<RotatedField>(l1, l2, theta0, slope);
}

std::array<double, 2> sym_eigenvalues(const Mat2& M) {
    const double m = 0.5 * (M(0, 0) + M(1, 1));
    const double d = std::hypot(0.5 * (M(0, 0) - M(1, 1)), M(0, 1));
    return {m - d, m + d};
}

SqrtPair spd_sqrt(const Mat2& M) {
    if (std::abs(M(0, 1) - M(1, 0)) > 1e-12 * M.norm()) throw MatrixDomainError("matrix is not symmetric");
    const auto ev = sym_eigenvalues(M);
    if (!(ev[0] > 0)) {
        std::ostringstream os;
        os << "matrix is not positive definite (eigenvalue " << ev[0] << ")";
        throw MatrixDomainError(os.str());
    }
    // sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)), by Cayley-Hamilton.
    const double det = ev[0] * ev[1];
    const double s = std::sqrt(det);
    const double t = std::sqrt(M.trace() + 2 * s);
    SqrtPair r;
    r.half = (M + s * Mat2::Identity()) / t;
    r.half(1, 0) = r.half(0, 1);
    Mat2 adj{{r.half(1, 1), -r.half(0, 1)}, {-r.half(1, 0), r.half(0, 0)}};
    r.inv_half = adj / s;  // det(M^{1/2}) = sqrt(det M)
    return r;
}

double a_factor(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A) {
    const CurvePoint c = path.at(law.eval(t).s);
    const Mat2 Ar = A.eval(c.p);
    const SqrtPair sq = spd_sqrt(Ar);
    return (sq.inv_half * c.d1).norm() * (sq.half * c.normal()).norm() * std::sqrt(Ar.determinant());
}

double a_factor_chart(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A) {
    const CurvePoint c = path.at(law.eval(t).s);
    const Mat2 Ar = A.eval(c.p);
    return (spd_sqrt(Ar).inv_half * c.d1).norm() * std::sqrt(Ar.determinant());
}

double transported_speed(double t, const CrackPath& path, const GrowthLaw& law, const TensorField& A) {
    const GrowthState g = law.eval(t);
    const CurvePoint c = path.at(g.s);
    return (spd_sqrt(A.eval(c.p)).inv_half * c.d1).norm() * g.sd;
}

double ellipticity_margin(const TensorField& A, const Vec2& lo, const Vec2& hi, int n, const Domain* domain) {
    double m = 1e300;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 x(lo.x() + (hi.x() - lo.x()) * i / (n - 1), lo.y() + (hi.y() - lo.y()) * j / (n - 1));
            if (domain && !domain->contains(x)) continue;
            m = std::min(m, sym_eigenvalues(A.eval(x))[0]);
        }
    return m;
}

}  // namespace crackflux
