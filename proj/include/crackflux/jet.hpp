#pragma once

#include "crackflux/cutoff.hpp"
#include "crackflux/types.hpp"

#include <array>

namespace crackflux {

// Value and derivatives of a time-dependent planar map y(t, x).
struct Jet {
    Vec2 y = Vec2::Zero();
    Mat2 J = Mat2::Identity();               // dy_a / dx_b
    std::array<Mat2, 2> H{Mat2::Zero(), Mat2::Zero()};  // H[a](b, c) = d2 y_a / dx_b dx_c
    Vec2 yt = Vec2::Zero();                  // dy / dt
    Vec2 ytt = Vec2::Zero();                 // d2y / dt2
    Mat2 Jt = Mat2::Zero();                  // d(dy_a/dt) / dx_b

    static Jet identity(const Vec2& x) {
        Jet j;
        j.y = x;
        return j;
    }
    // Time-independent affine map y = b + M (x - x0).
    static Jet affine(const Vec2& b, const Mat2& M, const Vec2& x, const Vec2& x0) {
        Jet j;
        j.y = b + M * (x - x0);
        j.J = M;
        return j;
    }
};

// outer o inner, with `outer` evaluated at inner.y.
Jet compose(const Jet& outer, const Jet& inner);

// base + kappa (target - base) for a time-independent kappa(x).
Jet blend(const Jet& base, const Jet& target, const ScalarJet& kappa);

}  // namespace crackflux
