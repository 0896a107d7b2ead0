#include <doctest.h>

#include "crackflux/charts.hpp"
#include "crackflux/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace crackflux;
using doctest::Approx;

namespace {

ProblemPtr straight_problem(std::vector<double> coeffs, double T, FieldPtr A = make_identity(), double c0 = 1,
                            double delta = 0.5) {
    auto p = std::make_shared<Problem>();
    p->domain = Domain({{-2, -2}, {2, -2}, {2, 2}, {-2, 2}});
    p->path = std::make_shared<SegmentPath>(Vec2(-2, 0), Vec2(1, 0), 4);
    p->law = GrowthLaw(std::move(coeffs), T);
    p->A = std::move(A);
    p->c0 = c0;
    p->delta = delta;
    return p;
}

ProblemPtr arc_problem(FieldPtr A = make_identity(), double c0 = 1, double delta = 0.5) {
    auto p = std::make_shared<Problem>();
    const double top = 2 - std::sqrt(2.0);
    p->domain = Domain({{-3, -3}, {3, -3}, {3, top}, {-3, top}});
    p->path = std::make_shared<ArcPath>(Vec2(0, 2), 2, 5 * std::numbers::pi / 4, true, std::numbers::pi);
    p->law = GrowthLaw({1.2, 0.3}, 1);
    p->A = std::move(A);
    p->c0 = c0;
    p->delta = delta;
    return p;
}

// central differences of the forward map
void check_jet_fd(const ChartWindow& w, double t, const Vec2& x, double rel) {
    const Jet j = w.phi(t, x);
    const double h = 1e-6;
    Mat2 Jfd;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e(k) = h;
        Jfd.col(k) = (w.phi(t, x + e).y - w.phi(t, x - e).y) / (2 * h);
    }
    const double scale = std::max(1.0, j.J.norm());
    CHECK((Jfd - j.J).norm() <= rel * scale);
    const double ht = 1e-6;
    const Vec2 ytfd = (w.phi(t + ht, x).y - w.phi(t - ht, x).y) / (2 * ht);
    CHECK((ytfd - j.yt).norm() <= rel * std::max(1.0, j.yt.norm()));
    // second derivatives against differences of the analytic Jacobian
    const double h2 = 1e-5;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e(k) = h2;
        const Mat2 dJ = (w.phi(t, x + e).J - w.phi(t, x - e).J) / (2 * h2);
        for (int a = 0; a < 2; ++a) CHECK((dJ.row(a).transpose() - j.H[a].col(k)).norm() <= 1e-5 * std::max(1.0, j.H[a].norm()));
        CHECK((j.Jt.col(k) - (w.phi(t, x + e).yt - w.phi(t, x - e).yt) / (2 * h2)).norm() <= 1e-5 * std::max(1.0, j.Jt.norm()));
    }
    const double ht2 = 1e-4;
    const Vec2 yttfd = (w.phi(t + ht2, x).yt - w.phi(t - ht2, x).yt) / (2 * ht2);
    CHECK((yttfd - j.ytt).norm() <= 1e-5 * std::max(1.0, j.ytt.norm()));
}

}  // namespace

TEST_CASE("jet composition matches differences") {
    auto inner = [](const Vec2& x, double t) { return Vec2(x.x() + t * x.y() * x.y(), std::sin(x.x()) * (1 + t)); };
    auto outer = [](const Vec2& x, double t) { return Vec2(x.x() * x.y() + t * t, x.x() - t * x.y() * x.x()); };
    auto jet_of = [](auto f, const Vec2& x, double t) {
        Jet j;
        const double h = 1e-4;
        j.y = f(x, t);
        for (int k = 0; k < 2; ++k) {
            Vec2 e = Vec2::Zero();
            e(k) = h;
            j.J.col(k) = (f(x + e, t) - f(x - e, t)) / (2 * h);
            j.Jt.col(k) = (f(x + e, t + h) - f(x + e, t - h) - f(x - e, t + h) + f(x - e, t - h)) / (4 * h * h);
            for (int l = 0; l < 2; ++l) {
                Vec2 g = Vec2::Zero();
                g(l) = h;
                const Vec2 d = (f(x + e + g, t) - f(x + e - g, t) - f(x - e + g, t) + f(x - e - g, t)) / (4 * h * h);
                for (int a = 0; a < 2; ++a) j.H[a](k, l) = d(a);
            }
        }
        j.yt = (f(x, t + h) - f(x, t - h)) / (2 * h);
        j.ytt = (f(x, t + h) - 2 * f(x, t) + f(x, t - h)) / (h * h);
        return j;
    };
    const Vec2 x(0.3, -0.4);
    const double t = 0.7;
    const Jet in = jet_of(inner, x, t);
    const Jet c = compose(jet_of(outer, in.y, t), in);
    const Jet ref = jet_of([&](const Vec2& p, double s) { return outer(inner(p, s), s); }, x, t);
    CHECK((c.J - ref.J).norm() < 1e-6);
    CHECK((c.yt - ref.yt).norm() < 1e-6);
    CHECK((c.Jt - ref.Jt).norm() < 1e-5);
    CHECK((c.ytt - ref.ytt).norm() < 1e-5);
    for (int a = 0; a < 2; ++a) CHECK((c.H[a] - ref.H[a]).norm() < 1e-5);
}

TEST_CASE("k_eta profile values") {
    CHECK(k_eta(0.5, 1).v == Approx(1));
    CHECK(k_eta(1, 1).v == 0);
    CHECK(k_eta(0.75, 1).v == Approx(0.5));
    CHECK(k_eta(0.2, 1).v == 1);
}

TEST_CASE("closed form near the tip for a straight crack") {
    // tip at origin at t = 0, s(t) - s(0) = 0.1 at t = 1/6
    auto pb = straight_problem({2, 0.6}, 1.0 / 6);
    Pipeline pl(pb, {});
    const ChartWindow& w = pl.window(1.0 / 6);
    const Jet j = w.phi(1.0 / 6, {0.1, 0.2});
    CHECK(std::abs(j.y.x()) < 1e-14);
    CHECK(j.y.y() == Approx(0.2).epsilon(1e-14));
    CHECK(j.J(0, 0) == Approx(1 / 0.8).epsilon(1e-13));
    CHECK(std::abs(j.J(0, 1)) < 1e-14);
    CHECK(j.J(1, 1) == Approx(1).epsilon(1e-14));
    // Psi-dot at the tip
    const Jet ps = w.psi(1.0 / 6, {0.1, 0});
    CHECK(ps.yt.x() == Approx(-0.6).epsilon(1e-14));
    CHECK(w.psi(0, {0.3, 0.4}).y == Vec2(0.3, 0.4));
    // claim2 at the tip
    CHECK((w.a4_at_x(1.0 / 6, {0.1, 0}) - Mat2::Identity()).norm() < 1e-10);
}

TEST_CASE("static straight crack has identity charts near the tip") {
    auto pb = straight_problem({2}, 1);
    Pipeline pl(pb, {});
    const Jet j = pl.phi(0.5, {0.1, -0.05});
    CHECK((j.y - Vec2(0.1, -0.05)).norm() < 1e-14);
    CHECK((j.J - Mat2::Identity()).norm() < 1e-14);
    const Coefficients c = pl.window(0.5).coefficients_at_x(0.5, {0.1, -0.05});
    CHECK((c.A4 - Mat2::Identity()).norm() < 1e-14);
    CHECK(c.p.norm() < 1e-12);
    CHECK(c.q.norm() < 1e-14);
}

TEST_CASE("chi satisfies D chi = Q on the crack") {
    SUBCASE("constant diagonal") {
        auto pb = straight_problem({2, 0.3}, 1, make_diagonal(4, 1), 1, 0.5);
        Pipeline pl(pb, {});
        const ChartWindow& w = pl.windows().front();
        for (double x1 : {-0.01, 0.0, 0.02}) {
            const Jet j = w.chi({x1, 0});
            CHECK((j.J - Mat2{{0.5, 0}, {0, 1}}).norm() <= 1e-8);
        }
    }
    SUBCASE("variable coefficients on a curved crack") {
        auto pb = arc_problem(make_sinusoidal(0.3, 1.0), 0.7, 0.3);
        Pipeline pl(pb, {});
        const ChartWindow& w = pl.windows().front();
        const double sa = w.sigma_anchor();
        for (double ds : {-0.01, 0.0, 0.004}) {
            const CurvePoint c = pb->path->at(sa + ds);
            const Mat2 Q = spd_sqrt(pb->A->eval(c.p)).inv_half;
            CHECK((w.chi(c.p).J - Q).norm() <= 1e-8);
            // chi is C1: difference quotients agree with the analytic Jacobian
            const double h = 1e-6;
            Mat2 fd;
            for (int k = 0; k < 2; ++k) {
                Vec2 e = Vec2::Zero();
                e(k) = h;
                fd.col(k) = (w.chi(c.p + 0.01 * c.normal() + e).y - w.chi(c.p + 0.01 * c.normal() - e).y) / (2 * h);
            }
            CHECK((fd - w.chi(c.p + 0.01 * c.normal()).J).norm() < 1e-6);
        }
        // arc length of the image curve equals the integral of |Q gamma'|
        const double s1 = sa + 0.05;
        const double ref = gauss_integrate(
            [&](double s) {
                const CurvePoint c = pb->path->eval(s);
                return (spd_sqrt(pb->A->eval(c.p)).inv_half * c.d1).norm();
            },
            sa, s1, 40);
        double poly = 0;
        Vec2 prev = w.chi(pb->path->at(sa).p).y;
        for (int i = 1; i <= 2000; ++i) {
            const Vec2 cur = w.chi(pb->path->at(sa + 0.05 * i / 2000).p).y;
            poly += (cur - prev).norm();
            prev = cur;
        }
        CHECK(w.image_arclength(s1) == Approx(ref).epsilon(1e-12));
        CHECK(poly == Approx(ref).epsilon(1e-7));
    }
}

TEST_CASE("identity coefficients give the identity chi") {
    auto pb = arc_problem();
    Pipeline pl(pb, {});
    const Vec2 x(0.3, -0.2);
    CHECK(pl.windows().front().chi(x).y == x);
    CHECK(pl.windows().front().chi(x).J == Mat2::Identity());
}

TEST_CASE("Lambda straightens a circular crack") {
    auto pb = arc_problem();
    Pipeline pl(pb, {});
    for (const ChartWindow& w : pl.windows()) {
        const double sa = w.sigma_anchor();
        CHECK(w.lambda(pb->path->at(sa).p).y.norm() < 1e-13);
        for (int i = 0; i < 50; ++i) {
            const double s = sa - 0.05 + 0.1 * i / 49;
            const CurvePoint c = pb->path->at(s);
            const Jet j = w.lambda(c.p);
            CHECK(std::abs(j.y.y()) < 1e-12);
            CHECK(j.y.x() == Approx(s - sa).epsilon(1e-12));
            CHECK((j.J * j.J.transpose() - Mat2::Identity()).norm() < 1e-8);
            CHECK(j.J.determinant() == Approx(1).epsilon(1e-8));
            const Vec2 back = w.lambda_inverse(j.y + Vec2(0, 0.01));
            CHECK((w.lambda(back).y - j.y - Vec2(0, 0.01)).norm() < 1e-10);
        }
    }
}

TEST_CASE("composed chart: differences, inverse, pinning, flattening") {
    SUBCASE("arc, identity coefficients") {
        auto pb = arc_problem();
        Pipeline pl(pb, {});
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> U(-1, 1);
        for (int n = 0; n < 100; ++n) {
            const double t = 0.05 + 0.9 * (U(rng) + 1) / 2;
            const ChartWindow& w = pl.window(t);
            const Vec2 r = pb->tip(t);
            const Vec2 x = r + 0.4 * Vec2(U(rng), U(rng));
            if (!pb->domain.contains(x)) continue;
            check_jet_fd(w, t, x, 1e-6);
            const Vec2 y = w.phi(t, x).y;
            CHECK((w.phi(t, w.phi_inverse(t, y)).y - y).norm() <= 1e-10 * pb->domain.diameter());
        }
        for (int i = 0; i <= 10; ++i) {
            const double t = i / 10.0;
            const ChartWindow& w = pl.window(t);
            CHECK(w.phi(t, pb->tip(t)).y.norm() <= 1e-10);
            const double s0 = pb->law.eval(w.t0()).s, s = pb->law.eval(t).s;
            for (int k = 0; k <= 5; ++k) {
                const double sig = s0 - 0.02 + (s - s0 + 0.02) * k / 5;
                CHECK(std::abs(w.phi(t, pb->path->at(sig).p).y.y()) <= 1e-8);
            }
        }
    }
    SUBCASE("rotated variable coefficients") {
        auto pb = arc_problem(make_rotated(1.5, 1.0, 0.3, 0.2), 0.9, 0.5);
        Pipeline pl(pb, {});
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> U(-1, 1);
        for (int n = 0; n < 20; ++n) {
            const double t = 0.5 + 0.45 * U(rng);
            const ChartWindow& w = pl.window(t);
            const Vec2 x = pb->tip(t) + 0.3 * Vec2(U(rng), U(rng));
            check_jet_fd(w, t, x, 1e-6);
            const Vec2 y = w.phi(t, x).y;
            CHECK((w.phi(t, w.phi_inverse(t, y)).y - y).norm() <= 1e-10 * pb->domain.diameter());
        }
        const double t = 0.4;
        const ChartWindow& w = pl.window(t);
        CHECK((w.a4_at_x(t, pb->tip(t)) - Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("transformed drift matches the divergence form") {
    // p = -[A4 grad J + d/dt (q J)] / J with J = det D(Phi^{-1}), derivatives at fixed y
    auto pb = arc_problem(make_sinusoidal(0.2, 1.0), 0.8, 0.4);
    Pipeline pl(pb, {});
    const double t = 0.55;
    const ChartWindow& w = pl.window(t);
    for (const Vec2& off : {Vec2(0.05, 0.07), Vec2(-0.1, -0.04), Vec2(0.2, 0.1)}) {
        const Vec2 y = w.phi(t, pb->tip(t) + off).y;
        const Coefficients c = w.coefficients(t, y);
        const double h = 1e-5;
        Vec2 gJ;
        for (int k = 0; k < 2; ++k) {
            Vec2 e = Vec2::Zero();
            e(k) = h;
            gJ(k) = (w.coefficients(t, y + e).J - w.coefficients(t, y - e).J) / (2 * h);
        }
        const Vec2 dqJ = (w.coefficients(t + h, y).q * w.coefficients(t + h, y).J -
                          w.coefficients(t - h, y).q * w.coefficients(t - h, y).J) /
                         (2 * h);
        const Vec2 ref = -(c.A4 * gJ + dqJ) / c.J;
        CHECK((c.p - ref).norm() <= 1e-5 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("ellipticity audit of the moving straight crack") {
    auto pb = straight_problem({1.4, 0.6}, 1);
    Pipeline pl(pb, {});
    const EllipticityAudit au = ellipticity_audit(pl, 5, 20, 20);
    CHECK(au.c4 > 0);
    CHECK(au.claim2_residual <= 1e-10);
    CHECK(au.symmetry_residual <= 1e-12);
    auto pb0 = straight_problem({1.4}, 1, make_identity(), 1, 1);
    const EllipticityAudit a0 = ellipticity_audit(Pipeline(pb0, {}), 3, 10, 10);
    CHECK(a0.c4 == Approx(1).epsilon(1e-12));
}
