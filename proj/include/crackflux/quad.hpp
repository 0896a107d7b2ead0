#pragma once

#include "crackflux/fields.hpp"
#include "crackflux/problem.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace crackflux {

using Integrand = std::function<double(const Vec2&)>;

// Smooth parametrization of part of the plane over a parameter box.
// map returns false when the point carries zero weight (the integrand is then not evaluated).
struct Patch {
    std::function<bool(double u, double v, Vec2& x, double& jac_weight)> map;
    std::vector<double> u_breaks, v_breaks;  // initial cell edges, including both ends
    std::string tag;
    int mono_dir = 0;  // parameter along which x moves on a line (0: u, 1: v), used for clipping
};

// Triangle with a Duffy collapse at vertex a: (u, v) -> a + u((b - a) + v(c - b)).
Patch duffy_patch(const Vec2& a, const Vec2& b, const Vec2& c, std::string tag = "duffy");
// Polar sector around c for radius in [r0, r1] and angle in [th0, th1].
Patch polar_patch(const Vec2& c, double r0, double r1, double th0, double th1, std::string tag = "polar");

struct QuadOptions {
    double tol = 1e-10;             // absolute target on the summed error estimate
    std::size_t max_cells = 200000;
    bool throw_on_budget = true;    // budget exhaustion with error above 10 tol raises
};

struct QuadResult {
    double value = 0, error = 0;
    std::size_t cells = 0, evaluations = 0;
    bool converged = true;
};

// Globally adaptive tensor Gauss-Kronrod (3/7) cubature over a set of patches.
QuadResult integrate_patches(const std::vector<Patch>& patches, const Integrand& f, const QuadOptions& opt = {});

// Cell partition of a slit domain: a polar disk around the tip (r = w^2, angle measured from
// the crack so the cut sits on the cell edges), a band of (arc length, offset) cells on each
// side of the crack, and Duffy triangles for the remaining polygon. Smooth cutoffs split the
// integrand between the three parts.
class SlitQuadrature {
public:
    // Whole polygon, no crack.
    static SlitQuadrature polygon(const Domain& d);
    // Disk of radius R around c cut along the ray at angle `cut_angle(rho)` (distance rho).
    static SlitQuadrature disk(const Vec2& c, double R, std::function<double(double)> cut_angle);
    // Disk around the tip of the problem at time t, cut along Gamma(t).
    static SlitQuadrature tip_disk(const Problem& pb, double t, double R);
    // Omega minus Gamma(t). r_cut and band default from the geometry.
    static SlitQuadrature cracked(const Problem& pb, double t, double r_cut = 0, double band = 0);

    // Keep only {x : dot(n, x) <= c}.
    SlitQuadrature clipped(const Vec2& n, double c) const;

    const std::vector<Patch>& patches() const { return patches_; }
    double r_cut() const { return r_cut_; }
    double band() const { return band_; }
    // Analytic area of the covered region (unclipped), for the partition check.
    double nominal_area() const { return area_; }

private:
    std::vector<Patch> patches_;
    double r_cut_ = 0, band_ = 0, area_ = 0;
};

QuadResult integrate_cracked(const Integrand& f, const SlitQuadrature& q, double tol, std::size_t max_cells = 200000);

// Angle of the crack point at distance rho from the tip (crack Gamma(t) of the problem).
double crack_cut_angle(const Problem& pb, double t, double rho);

// Ear-clipping triangulation of a simple polygon (counterclockwise output).
std::vector<std::array<Vec2, 3>> triangulate(const std::vector<Vec2>& poly);

// ---------------------------------------------------------------- half-plane limit lemma

// theta(eps) = |pi - int_0^1 [atan(b/(eps s)) - atan(a/(eps s))] ds| in closed form.
double fondlem_theta(double a, double b, double eps);
// (1/eps) int_0^eps int_a^b g x2 / |x|^2 dx1 dx2.
QuadResult fondlem_value(const Integrand& g, double a, double b, double eps, double tol = 1e-11);
double fondlem_bound(double g_sup, const std::function<double(double)>& omega, double a, double b, double eps);

struct FondlemRow {
    double eps = 0, value = 0, error = 0, bound = 0, deviation = 0;
    bool within = false;
};
struct FondlemTable {
    std::vector<FondlemRow> rows;
    double limit = 0, target = 0;  // extrapolated limit and pi g(0, 0)
    bool all_within = true;
};
FondlemTable fondlem_audit(const Integrand& g, double g_sup, const std::function<double(double)>& omega, double a,
                           double b, const std::vector<double>& eps_seq);

// Least-squares fit of value(eps) = L + c1 sqrt(eps) + c2 eps; returns L.
double richardson_limit(const std::vector<double>& eps, const std::vector<double>& values);

// ---------------------------------------------------------------- tubes

// One side of the eps-tube around the segment [p0, p1]: flat strip plus the two quarter disks.
struct TubeRegion {
    Vec2 p0 = Vec2::Zero(), p1 = Vec2::Zero();
    int side = +1;  // +1: left of p0 -> p1
    double eps = 0;

    double length() const { return (p1 - p0).norm(); }
    double area() const;  // L eps + pi eps^2 / 2
    std::vector<Patch> strip_patches(const Vec2* split = nullptr) const;
    std::vector<Patch> cap_patches() const;
    // |grad phi_eps| direction: e2-type normal on the strip, radial on the caps
    Vec2 grad_phi(const Vec2& x) const;
};

struct TubeIntegral {
    double strip = 0, caps = 0, total = 0, error = 0;
};
// int_{tube} u v |grad phi_eps| = (1/eps) int_{tube} u v.
TubeIntegral tube_integral(const Integrand& uv, const TubeRegion& tube, double tol = 1e-11);

// ---------------------------------------------------------------- tip flux

struct TipFluxSetup {
    ProblemPtr problem;           // straight crack with A = I
    KLaw k = KLaw::constant(1);
    double zeta_radius = 0.5;     // zeta = plateau(|(Phi1, x2)|, R/2, R)
    double tbar = 1;              // tube around Gamma(tbar) minus Gamma(0)
};

struct TipFluxRow {
    double eps = 0, plus = 0, minus = 0, total = 0, x1_term = 0;
};
struct TipFluxResult {
    double t = 0;
    std::vector<TipFluxRow> rows;
    double limit_plus = 0, limit_minus = 0, limit = 0, limit_x1 = 0;
    double target = 0;  // (pi / 4) k^2 sdot
};

// I_eps(t) for one side, with the three-region gradient of phi_eps; x1_term gets the
// acceleration-weighted part alone.
TipFluxRow tip_flux(const TipFluxSetup& s, double t, double eps, double tol = 1e-10);
TipFluxResult tip_flux_limit(const TipFluxSetup& s, double t, const std::vector<double>& eps_seq, double tol = 1e-10);

}  // namespace crackflux
