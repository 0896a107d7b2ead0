#pragma once

#include "crackflux/types.hpp"

namespace crackflux {

// Value and first two derivatives of a scalar profile.
struct Profile {
    double v = 0, d1 = 0, d2 = 0;
};

// Scalar function of x with gradient and Hessian.
struct ScalarJet {
    double v = 0;
    Vec2 g = Vec2::Zero();
    Mat2 h = Mat2::Zero();
};

// C3 septic step: 0 at u<=0, 1 at u>=1, derivatives up to order 3 vanish at both ends.
Profile smoothstep7(double u);

// 1 for r <= r_in, 0 for r >= r_out, septic transition in between.
Profile plateau(double r, double r_in, double r_out);

// Same transition but in log r.
Profile log_plateau(double r, double r_in, double r_out);

// k_eta of the P chart: 1 below eta/2, cubic on [eta/2, eta), 0 beyond. Only C1.
Profile k_eta(double tau, double eta);

// Radial cutoff around a center.
struct RadialCutoff {
    Vec2 center = Vec2::Zero();
    double r_in = 0, r_out = 0;
    bool log_radius = false;

    ScalarJet eval(const Vec2& x) const;
};

// xi(y) = phi(y1) phi(y2), phi = 1 on |s| <= eps/2 and 0 on |s| >= eps.
struct TensorCutoff {
    double eps = 0;

    ScalarJet eval(const Vec2& y) const;
    bool vanishes(const Vec2& y) const { return std::abs(y.x()) >= eps || std::abs(y.y()) >= eps; }
};

// Lift a radial profile f(|x - c|) to a ScalarJet.
ScalarJet radial_jet(const Profile& f, const Vec2& d, double r);

}  // namespace crackflux
