#include "crackflux/jet.hpp"

namespace crackflux {

Jet compose(const Jet& O, const Jet& I) {
    Jet r;
    r.y = O.y;
    r.J = O.J * I.J;
    for (int a = 0; a < 2; ++a) {
        r.H[a] = I.J.transpose() * O.H[a] * I.J;
        for (int m = 0; m < 2; ++m) r.H[a] += O.J(a, m) * I.H[m];
    }
    r.yt = O.yt + O.J * I.yt;
    // d/dx of (O_t(I) + F_O(I) I_t)
    r.Jt = O.Jt * I.J + O.J * I.Jt;
    for (int a = 0; a < 2; ++a)
        for (int m = 0; m < 2; ++m) r.Jt.row(a) += I.yt(m) * (O.H[a].row(m) * I.J);
    r.ytt = O.ytt + 2 * O.Jt * I.yt + O.J * I.ytt;
    for (int a = 0; a < 2; ++a) r.ytt(a) += I.yt.dot(O.H[a] * I.yt);
    return r;
}

Jet blend(const Jet& b, const Jet& t, const ScalarJet& k) {
    if (k.v == 1 && k.g.isZero()) return t;
    if (k.v == 0 && k.g.isZero()) return b;
    Jet r;
    const Vec2 dy = t.y - b.y;
    const Mat2 dJ = t.J - b.J;
    r.y = b.y + k.v * dy;
    r.J = b.J + k.v * dJ + dy * k.g.transpose();
    for (int a = 0; a < 2; ++a) {
        const Vec2 row = dJ.row(a).transpose();
        r.H[a] = b.H[a] + k.v * (t.H[a] - b.H[a]) + row * k.g.transpose() + k.g * row.transpose() + dy(a) * k.h;
    }
    const Vec2 dyt = t.yt - b.yt;
    r.yt = b.yt + k.v * dyt;
    r.ytt = b.ytt + k.v * (t.ytt - b.ytt);
    r.Jt = b.Jt + k.v * (t.Jt - b.Jt) + dyt * k.g.transpose();
    return r;
}

}  // namespace crackflux
