#pragma once

#include "crackflux/cutoff.hpp"
#include "crackflux/jet.hpp"
#include "crackflux/problem.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace crackflux {

struct ChartConfig {
    double rho = 0;              // window length; 0 picks it from the tip-to-boundary distance
    double eta = 0;              // P-chart radius; 0 picks it automatically
    double chi_ratio = 6;        // outer / core radius of the chi blend
    double chi_room = 0.9;       // chi outer radius as a fraction of the available room
    double lambda_in = 0.35;     // Lambda blend radii as fractions of the reference radius
    double lambda_out = 0.7;
    double psi_margin = 0;       // extra Psi core radius beyond eta + crack increment
    int max_halvings = 12;
};

// Derivatives of a planar curve b(sigma) (any speed).
struct CurveJet {
    Vec2 b, b1, b2, b3;
};

// Moving frame of a curve: unit tangent u, normal nu = rot(u), speed L and their derivatives.
struct CurveFrame {
    Vec2 u, u1, u2, nu, nu1, nu2;
    double L, L1, L2;
};
CurveFrame curve_frame(const CurveJet& c);

// Inverse tube coordinates w = (sigma, tau) of G(sigma, tau) = b(sigma) + tau nu(sigma), with
// first and second derivatives with respect to the ambient point.
struct TubeCoords {
    Vec2 w;
    Mat2 J;
    std::array<Mat2, 2> H;
};
TubeCoords tube_coords(const CurveJet& c, double sigma, const Vec2& z);

// Damped Newton inversion of a map with analytic Jacobian.
Vec2 newton_invert(const std::function<Jet(const Vec2&)>& f, const Vec2& y, Vec2 seed, double tol,
                   int max_iter = 50);

// Transported tip motion in the straightened frame.
struct Motion {
    double s = 0, sd = 0;        // physical arc length and speed
    double delta = 0;            // s1(t) - s1(t0)
    double v = 0, acc = 0, jerk = 0;  // transported speed and its derivatives
    double alpha = 1, alpha_d = 0, alpha_dd = 0;
};

// Coefficients of the transformed equation at a physical point.
struct Coefficients {
    Vec2 y;
    Mat2 A4;
    Vec2 p, q;
    double J = 1;  // det D(Phi^{-1})
};

// Charts chi, Lambda, Psi(t), P(t) built for one time window [t0, t1].
class ChartWindow {
public:
    ChartWindow(ProblemPtr problem, double t0, double t1, const ChartConfig& cfg);

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    double eta() const { return eta_; }
    double eta_ellipticity() const { return eta_ell_; }
    double sigma_anchor() const { return sa_; }
    double c1() const { return c1_; }
    const Problem& problem() const { return *pb_; }

    Jet chi(const Vec2& x) const;
    Jet lambda(const Vec2& z) const;
    Jet psi(double t, const Vec2& w) const;
    Jet pchart(double t, const Vec2& w) const;
    Jet phi(double t, const Vec2& x) const;

    Vec2 chi_inverse(const Vec2& z) const;
    Vec2 lambda_inverse(const Vec2& w) const;
    Vec2 psi_inverse(double t, const Vec2& w) const;
    Vec2 pchart_inverse(double t, const Vec2& y) const;
    Vec2 phi_inverse(double t, const Vec2& y) const;

    Motion motion(double t) const;
    double d_of(double t, double r) const;

    // A(4) = F A F^T - ydot ydot^T at y = Phi(t, x).
    Mat2 a4_at_x(double t, const Vec2& x) const;
    Coefficients coefficients_at_x(double t, const Vec2& x) const;
    Coefficients coefficients(double t, const Vec2& y) const { return coefficients_at_x(t, phi_inverse(t, y)); }

    // Image of the crack path under chi and its arc length from the anchor.
    CurveJet image_curve(double sigma) const;
    double image_arclength(double sigma) const;

    struct Radii {
        double chi_core = 0, chi_out = 0, lambda_in = 0, lambda_out = 0, psi_core = 0, psi_out = 0;
        bool chi_identity = true, chi_linear = false, lambda_rigid = true;
    };
    const Radii& radii() const { return R_; }

private:
    ProblemPtr pb_;
    ChartConfig cfg_;
    std::uint64_t id_;
    double t0_, t1_, sa_, sb_, c1_;
    Vec2 xa_;
    Mat2 Q0_, R0_;
    Radii R_;
    double eta_ = 0, eta_ell_ = 0, dmax_ = 0;
    double lam_window_ = 0;

    struct QJet {
        Mat2 q, q1, q2, q3;
    };
    QJet q_along(double sigma) const;
    Jet chi_target(const Vec2& x) const;
    Jet lambda_target(const Vec2& z) const;
    double image_project(const Vec2& z) const;
    void choose_radii();
    double ellipticity_radius() const;
    double min_a4_sample(double eta) const;
};

// Sequence of chart windows covering [0, T].
class Pipeline {
public:
    Pipeline(ProblemPtr problem, const ChartConfig& cfg);

    const ChartWindow& window(double t) const;
    const std::vector<ChartWindow>& windows() const { return w_; }
    double rho() const { return rho_; }
    int halvings() const { return halvings_; }
    const Problem& problem() const { return *pb_; }
    ProblemPtr problem_ptr() const { return pb_; }

    Jet phi(double t, const Vec2& x) const { return window(t).phi(t, x); }
    Vec2 phi_inverse(double t, const Vec2& y) const { return window(t).phi_inverse(t, y); }

private:
    ProblemPtr pb_;
    std::vector<ChartWindow> w_;
    double rho_ = 0;
    int halvings_ = 0;
};

// Largest transported speed over [0, T] (sampled).
double max_transported_speed(const Problem& pb, int samples = 201);

struct EllipticityAudit {
    double c4 = 0;                 // min eigenvalue of A4 over the grid
    double claim2_residual = 0;    // max |A4(t, 0) - I|
    double symmetry_residual = 0;
    double worst_t = 0;
    Vec2 worst_x = Vec2::Zero();
    std::vector<double> t, min_eig, claim2;  // per time sample
    double eta = 0, rho = 0, c1 = 0, c2 = 0;
};

// Samples A4 on nt x nx x ny points of the domain (bounding box restricted to the domain).
EllipticityAudit ellipticity_audit(const Pipeline& pl, int nt, int nx, int ny);

}  // namespace crackflux
