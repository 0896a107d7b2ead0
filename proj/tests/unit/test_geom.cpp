#include <doctest.h>

#include "crackflux/geom.hpp"
#include "crackflux/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace crackflux;
using doctest::Approx;

TEST_CASE("segment evaluation and frame") {
    SegmentPath p({-1, 0}, {1, 0}, 2);
    const CurvePoint c = p.at(1);
    CHECK(c.p.norm() == Approx(0).epsilon(1e-15));
    CHECK(c.d1.x() == 1);
    CHECK(c.normal().y() == 1);
    CHECK_THROWS_AS(p.at(2.5), RangeError);
    CHECK_THROWS_AS(p.at(-0.1), RangeError);
}

TEST_CASE("arc matches analytic circle") {
    // gamma(s) = (2 sin(s/2), 2 - 2 cos(s/2)): center (0,2), start angle -pi/2, ccw
    ArcPath p({0, 2}, 2, -std::numbers::pi / 2, true, 3);
    for (double s : {0.0, 0.7, 1.3, 2.9}) {
        const CurvePoint c = p.at(s);
        CHECK(c.p.x() == Approx(2 * std::sin(s / 2)).epsilon(1e-14));
        CHECK(c.p.y() == Approx(2 - 2 * std::cos(s / 2)).epsilon(1e-14));
        CHECK(c.d1.x() == Approx(std::cos(s / 2)).epsilon(1e-14));
        CHECK(c.d2.x() == Approx(-0.5 * std::sin(s / 2)).epsilon(1e-14));
        CHECK(c.d2.y() == Approx(0.5 * std::cos(s / 2)).epsilon(1e-14));
        CHECK(c.d3.x() == Approx(-0.25 * std::cos(s / 2)).epsilon(1e-14));
    }
    const CurvePoint top = ArcPath({0, 2}, 2, -std::numbers::pi / 2, true, 4).at(std::numbers::pi);
    CHECK(top.p.x() == Approx(2));
    CHECK(top.p.y() == Approx(2));
    CHECK(std::abs(top.d1.x()) < 1e-14);
    CHECK(top.d1.y() == Approx(1));
}

TEST_CASE("frame invariants on sampled paths") {
    ArcPath a({0, 2}, 2, -std::numbers::pi / 2, true, 3);
    for (int i = 0; i <= 1000; ++i) {
        const CurvePoint c = a.at(3.0 * i / 1000);
        CHECK(std::abs(c.normal().norm() - 1) < 1e-12);
        CHECK(std::abs(c.normal().dot(c.d1)) < 1e-12);
    }
}

TEST_CASE("spline through arc samples is arc-length parametrized") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 12; ++i) {
        const double s = 3.0 * i / 12;
        pts.emplace_back(2 * std::sin(s / 2), 2 - 2 * std::cos(s / 2));
    }
    SplinePath sp(pts);
    // independent arc length of the circle
    CHECK(sp.length() == Approx(3).epsilon(1e-5));
    double worst = 0, worst_pos = 0;
    for (int i = 0; i <= 1000; ++i) {
        const double s = sp.length() * i / 1000;
        const CurvePoint c = sp.at(s);
        worst = std::max(worst, std::abs(c.d1.norm() - 1));
        worst_pos = std::max(worst_pos, std::abs((c.p - Vec2(0, 2)).norm() - 2));
    }
    CHECK(worst <= 1e-6);
    CHECK(worst_pos <= 1e-5);
    // derivative consistency against central differences
    const double h = 1e-4;
    for (double s : {0.4, 1.5, 2.6}) {
        const CurvePoint c = sp.at(s), cp = sp.at(s + h), cm = sp.at(s - h);
        CHECK((c.d2 - (cp.d1 - cm.d1) / (2 * h)).norm() < 1e-6);
        CHECK((c.d3 - (cp.d2 - cm.d2) / (2 * h)).norm() < 1e-5);
    }
}

TEST_CASE("spline reparametrization of a straight polyline is idempotent") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 6; ++i) pts.emplace_back(0.3 * i, 0.1 * i);
    SplinePath sp(pts);
    SegmentPath seg({0, 0}, {3, 1}, std::hypot(1.8, 0.6));
    CHECK(sp.length() == Approx(seg.length()).epsilon(1e-12));
    for (int i = 0; i <= 50; ++i) {
        const double s = seg.length() * i / 50;
        CHECK((sp.at(s).p - seg.at(s).p).norm() < 1e-8);
    }
}

TEST_CASE("projection onto paths") {
    ArcPath a({0, 2}, 2, -std::numbers::pi / 2, true, 4);
    const CurvePoint c = a.at(1.2);
    const Vec2 x = c.p + 0.1 * c.normal();
    CHECK(a.project(x, 1.0, 0.5) == Approx(1.2).epsilon(1e-12));
    CHECK(a.CrackPath::project(x, 1.0, 0.5) == Approx(1.2).epsilon(1e-10));
}

TEST_CASE("growth law evaluation") {
    GrowthLaw g({0.3, 0.2}, 1);
    auto s = g.eval(0.5);
    CHECK(s.s == Approx(0.4));
    CHECK(s.sd == Approx(0.2));
    CHECK(s.sdd == 0);
    GrowthLaw arrested({0.3}, 1);
    CHECK(arrested.eval(0.7).s == Approx(0.3));
    CHECK(arrested.eval(0.7).sd == 0);
    GrowthLaw q({0.3, 0, 0.1}, 1);
    s = q.eval(1);
    CHECK(s.s == Approx(0.4));
    CHECK(s.sd == Approx(0.2));
    CHECK(s.sdd == Approx(0.2));
    GrowthLaw c({0, 0, 0, 2}, 2);
    CHECK(c.eval(1).sddd == Approx(12));
    CHECK_THROWS_AS(g.eval(1.5), RangeError);
}

TEST_CASE("tip position is monotone for nondecreasing growth") {
    ArcPath a({0, 2}, 2, -std::numbers::pi / 2, true, 4);
    GrowthLaw g({0.5, 0.4, 0.1}, 2);
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
        const double s = g.eval(2.0 * i / 100).s;
        CHECK(s >= prev);
        prev = s;
        (void)a.at(s);
    }
}

TEST_CASE("domain queries") {
    Domain d({{0, 0}, {0, 1}, {1, 1}, {1, 0}}, {0});  // clockwise input
    CHECK(d.area() == Approx(1));
    CHECK(d.contains({0.5, 0.5}));
    CHECK_FALSE(d.contains({1.5, 0.5}));
    CHECK(d.boundary_distance({0.5, 0.25}) == Approx(0.25));
    CHECK(d.is_simple());
    CHECK(d.diameter() == Approx(std::sqrt(2.0)));
    // edge {0,0}-{0,1} keeps its Dirichlet flag after reorientation
    const auto& v = d.vertices();
    const int e = d.dirichlet_edges()[0];
    const Vec2 a = v[e], b = v[(e + 1) % v.size()];
    CHECK(a.x() == 0);
    CHECK(b.x() == 0);
    Domain bow({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
    CHECK_FALSE(bow.is_simple());
}
