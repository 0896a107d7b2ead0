#pragma once

#include "crackflux/charts.hpp"
#include "crackflux/cutoff.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace crackflux {

// Scalar value with gradient and Hessian.
struct SJet {
    double v = 0;
    Vec2 g = Vec2::Zero();
    Mat2 h = Mat2::Zero();
};

// S(y) = Im sqrt(y1 + i y2). A signed zero in y2 selects the lip on the negative axis.
SJet S_eval(const Vec2& y);

// Tip singular field evaluated through the linearized chart M(t) = L R Q at the tip.
class SingularField {
public:
    explicit SingularField(ProblemPtr pb);

    struct Frame {
        double t = 0, s = 0, alpha = 1, v = 0;
        Vec2 r = Vec2::Zero(), rdot = Vec2::Zero();
        Mat2 M = Mat2::Identity(), Mdot = Mat2::Zero();
    };
    Frame frame(double t) const;

    // Value, gradient and Hessian (x off the crack, x != r(t)).
    SJet eval(double t, const Vec2& x) const;
    SJet eval(const Frame& f, const Vec2& x) const;
    double time_derivative(double t, const Vec2& x) const;

    // Crack angle in tip coordinates at radius rho (pi for a straight crack).
    double crack_angle(const Frame& f, double rho) const;
    // Jump upper minus lower lip at arc length `back` behind the tip.
    double lip_jump(double t, double back) const;
    // Point r + alpha gamma' (for reports).
    Vec2 anchor(double t) const;

    const Problem& problem() const { return *pb_; }

private:
    ProblemPtr pb_;
    Frame raw_frame(double t) const;
};

struct KJet {
    double k = 0, kd = 0, kdd = 0;
};

// Time profile of the stress intensity factor used by the manufactured solution.
class KLaw {
public:
    enum class Mode { Constant, Griffith, Polynomial };
    static KLaw constant(double k0);
    static KLaw griffith(ProblemPtr pb);  // k = 2 / sqrt(pi a(t))
    static KLaw polynomial(std::vector<double> coeffs);

    KJet eval(double t) const;
    Mode mode() const { return mode_; }
    std::string name() const;

private:
    Mode mode_ = Mode::Constant;
    double k0_ = 1;
    std::vector<double> c_;
    ProblemPtr pb_;
};

// Manufactured displacement u = k xi(Phi) S(Phi) and its derivatives.
struct MmsSample {
    double u = 0, ut = 0, utt = 0, div = 0;
    Vec2 grad = Vec2::Zero();
    double f() const { return utt - div; }
};

class MmsField {
public:
    MmsField(std::shared_ptr<const Pipeline> pl, KLaw k, double xi_eps);

    MmsSample eval(double t, const Vec2& x) const;
    // Same field built from a given chart window (t may sit on the window's closed ends).
    MmsSample eval(const ChartWindow& w, double t, const Vec2& x) const;
    // Radius around r(t) containing the support of u(t, .)
    double support_radius(double t) const;
    double support_radius(const ChartWindow& w, double t) const;
    double xi_eps() const { return xi_.eps; }
    const Pipeline& pipeline() const { return *pl_; }
    const KLaw& klaw() const { return k_; }

private:
    std::shared_ptr<const Pipeline> pl_;
    KLaw k_;
    TensorCutoff xi_;
};

// w = S(Phi) - Shat near the tip.
struct WSample {
    double value = 0;
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
};
WSample w_eval(const Pipeline& pl, const SingularField& sf, double t, const Vec2& x);

struct WBoundAudit {
    std::vector<double> radius, max_hess, max_value;
    double hess_exponent = 0, hess_constant = 0, value_exponent = 0;
};
// Log-log fit of max |D2 w| and max |w| over circles r in [r_min, r_max] around r(t).
WBoundAudit w_bound_audit(const Pipeline& pl, double t, double r_min = 1e-4, double r_max = 1e-1, int nr = 13,
                          int nth = 48);

}  // namespace crackflux
