#include <doctest.h>

#include "crackflux/material.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace crackflux;
using doctest::Approx;

TEST_CASE("spd_sqrt examples") {
    auto r = spd_sqrt(Mat2::Identity());
    CHECK((r.half - Mat2::Identity()).norm() < 1e-15);
    CHECK((r.inv_half - Mat2::Identity()).norm() < 1e-15);
    r = spd_sqrt(Mat2{{4, 0}, {0, 1}});
    CHECK((r.half - Mat2{{2, 0}, {0, 1}}).norm() < 1e-15);
    CHECK((r.inv_half - Mat2{{0.5, 0}, {0, 1}}).norm() < 1e-15);
    const Mat2 M{{2, 1}, {1, 2}};
    r = spd_sqrt(M);
    CHECK((r.half * r.half - M).norm() < 1e-12);
    // eigendecomposition oracle: eigenvalues 1 and 3 along (1,-1), (1,1)
    const Eigen::SelfAdjointEigenSolver<Mat2> es(M);
    const Mat2 ref = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    CHECK((r.half - ref).norm() < 1e-14);
    CHECK((r.half * r.inv_half - Mat2::Identity()).norm() < 1e-14);
    CHECK_THROWS_AS(spd_sqrt(Mat2{{1, 0}, {0, -1}}), MatrixDomainError);
    CHECK_THROWS_AS(spd_sqrt(Mat2{{1, 0.5}, {0, 1}}), MatrixDomainError);
}

TEST_CASE("spd_sqrt round trip on random matrices") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(0, std::numbers::pi), lg(-3, 3);
    for (int i = 0; i < 1000; ++i) {
        const double th = ang(rng), l1 = std::pow(10.0, lg(rng)), l2 = std::pow(10.0, lg(rng));
        const Mat2 R{{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}};
        Mat2 M = R * Vec2(l1, l2).asDiagonal() * R.transpose();
        M(1, 0) = M(0, 1);
        const auto r = spd_sqrt(M);
        CHECK((r.half * r.half - M).norm() <= 1e-10 * M.norm());
        CHECK(sym_eigenvalues(r.half)[0] > 0);
        CHECK(std::abs(r.half(0, 1) - r.half(1, 0)) == 0);
    }
}

TEST_CASE("anisotropy factor and transported speed") {
    SegmentPath horiz({-1, 0}, {1, 0}, 2), vert({0, -1}, {0, 1}, 2);
    GrowthLaw g({0.5, 0.4}, 1);
    auto I = make_identity();
    auto D = make_diagonal(4, 1);
    CHECK(a_factor(0.3, horiz, g, *I) == 1);
    CHECK(std::abs(a_factor(0.3, horiz, g, *D) - 1) <= 1e-12);
    CHECK(std::abs(a_factor(0.3, vert, g, *D) - 4) <= 1e-12);
    CHECK(transported_speed(0.3, horiz, g, *I) == Approx(0.4));
    CHECK(transported_speed(0.3, horiz, g, *D) == Approx(0.2));
    GrowthLaw still({0.5}, 1);
    CHECK(transported_speed(0.3, horiz, still, *D) == 0);
    // scale law a(lambda A) = lambda a(A)
    ArcPath arc({0, 2}, 2, -std::numbers::pi / 2, true, 3);
    auto rot = make_rotated(3, 1, 0.3, 0);
    auto rot5 = make_rotated(15, 5, 0.3, 0);
    CHECK(a_factor(0.5, arc, g, *rot5) == Approx(5 * a_factor(0.5, arc, g, *rot)).epsilon(1e-12));
}

TEST_CASE("chart flux factor") {
    SegmentPath horiz({-1, 0}, {1, 0}, 2), vert({0, -1}, {0, 1}, 2);
    GrowthLaw g({0.5, 0.4}, 1);
    // isotropic c I: time rescaling by sqrt(c) gives the factor sqrt(c)
    for (double c : {0.25, 1.0, 4.0, 9.0})
        CHECK(a_factor_chart(0.3, horiz, g, *make_diagonal(c, c)) == Approx(std::sqrt(c)).epsilon(1e-14));
    CHECK(a_factor_chart(0.3, horiz, g, *make_diagonal(1, 4)) == Approx(2).epsilon(1e-14));
    CHECK(a_factor_chart(0.3, vert, g, *make_diagonal(4, 1)) == Approx(2).epsilon(1e-14));
    CHECK(a_factor_chart(0.3, horiz, g, *make_diagonal(4, 1)) == Approx(1).epsilon(1e-14));
    // ratio to a_factor is |A^{1/2} n|; oracle through an explicit eigen decomposition
    ArcPath arc({0, 2}, 2, -std::numbers::pi / 2, true, 3);
    auto rot = make_rotated(3, 1, 0.3, 0.2);
    const CurvePoint c = arc.at(g.eval(0.5).s);
    Eigen::SelfAdjointEigenSolver<Mat2> es(rot->eval(c.p));
    const Mat2 half = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    CHECK(a_factor(0.5, arc, g, *rot) / a_factor_chart(0.5, arc, g, *rot) ==
          Approx((half * c.normal()).norm()).epsilon(1e-12));
}

TEST_CASE("ellipticity margin") {
    CHECK(ellipticity_margin(*make_identity(), {0, 0}, {1, 1}) == 1);
    CHECK(ellipticity_margin(*make_diagonal(4, 1), {0, 0}, {1, 1}) == 1);
    const double m = ellipticity_margin(*make_sinusoidal(0.5, 1), {0, 0}, {std::numbers::pi, std::numbers::pi}, 101);
    CHECK(m == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("finite-difference derivatives of A") {
    auto s = make_sinusoidal(0.5, 1.3);
    auto r = make_rotated(2, 1, 0.2, 0.7);
    const Vec2 x(0.4, -0.2);
    const auto ga = s->grad(x);
    const auto gf = s->TensorField::grad(x);
    CHECK((ga[0] - gf[0]).norm() < 1e-8);
    const auto gr = r->grad(x);
    CHECK(std::abs(gr[0](0, 1) - gr[0](1, 0)) < 1e-14);
    CHECK(gr[1].norm() == 0);
}
