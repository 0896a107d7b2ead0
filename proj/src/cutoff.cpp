#include "crackflux/cutoff.hpp"

#include <cmath>

namespace crackflux {

Profile smoothstep7(double u) {
    if (u <= 0) return {0, 0, 0};
    if (u >= 1) return {1, 0, 0};
    const double u2 = u * u, u3 = u2 * u, w = 1 - u;
    Profile p;
    p.v = u2 * u2 * (35 - 84 * u + 70 * u2 - 20 * u3);
    p.d1 = 140 * u3 * w * w * w;
    p.d2 = 420 * u2 * w * w * (1 - 2 * u);
    return p;
}

Profile plateau(double r, double r_in, double r_out) {
    if (r <= r_in) return {1, 0, 0};
    if (r >= r_out) return {0, 0, 0};
    const double L = r_out - r_in;
    const Profile s = smoothstep7((r - r_in) / L);
    return {1 - s.v, -s.d1 / L, -s.d2 / (L * L)};
}

Profile log_plateau(double r, double r_in, double r_out) {
    if (r <= r_in) return {1, 0, 0};
    if (r >= r_out) return {0, 0, 0};
    const double L = std::log(r_out / r_in);
    const Profile s = smoothstep7(std::log(r / r_in) / L);
    const double g1 = -s.d1 / L, g2 = -s.d2 / (L * L);
    return {1 - s.v, g1 / r, (g2 - g1) / (r * r)};
}

Profile k_eta(double tau, double eta) {
    if (tau < eta / 2) return {1, 0, 0};
    if (tau >= eta) return {0, 0, 0};
    const double u = tau / eta;
    Profile p;
    p.v = 4 * (u - 1) * (u - 1) * (4 * u - 1);
    p.d1 = 24 * (u - 1) * (2 * u - 1) / eta;
    p.d2 = 24 * (4 * u - 3) / (eta * eta);
    return p;
}

ScalarJet radial_jet(const Profile& f, const Vec2& d, double r) {
    ScalarJet j;
    j.v = f.v;
    if (r <= 0 || (f.d1 == 0 && f.d2 == 0)) return j;
    const Vec2 e = d / r;
    j.g = f.d1 * e;
    const Mat2 ee = e * e.transpose();
    j.h = f.d2 * ee + (f.d1 / r) * (Mat2::Identity() - ee);
    return j;
}

ScalarJet RadialCutoff::eval(const Vec2& x) const {
    const Vec2 d = x - center;
    const double r = d.norm();
    const Profile f = log_radius ? log_plateau(r, r_in, r_out) : plateau(r, r_in, r_out);
    return radial_jet(f, d, r);
}

ScalarJet TensorCutoff::eval(const Vec2& y) const {
    auto phi = [&](double s) {
        Profile p = plateau(std::abs(s), eps / 2, eps);
        if (s < 0) p.d1 = -p.d1;
        return p;
    };
    const Profile a = phi(y.x()), b = phi(y.y());
    ScalarJet j;
    j.v = a.v * b.v;
    j.g = {a.d1 * b.v, a.v * b.d1};
    j.h << a.d2 * b.v, a.d1 * b.d1, a.d1 * b.d1, a.v * b.d2;
    return j;
}

}  // namespace crackflux
