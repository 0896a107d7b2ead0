#include <doctest.h>

#include "crackflux/quad.hpp"
#include "crackflux/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace crackflux;
using doctest::Approx;

namespace {

const double pi = std::numbers::pi;

ProblemPtr straight(std::vector<double> coeffs, std::vector<int> dirichlet = {}) {
    auto p = std::make_shared<Problem>();
    p->domain = Domain({{-2, -1.5}, {2, -1.5}, {2, 1.5}, {-2, 1.5}}, std::move(dirichlet));
    p->path = std::make_shared<SegmentPath>(Vec2(-2, 0), Vec2(1, 0), 4);
    p->law = GrowthLaw(std::move(coeffs), 1);
    p->A = make_identity();
    return p;
}

RectSlit unit_slit() {
    RectSlit r;
    r.x0 = 0;
    r.x1 = 1;
    r.y0 = -0.5;
    r.y1 = 0.5;
    r.tip_x = 0.5;
    return r;
}

double observed_order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

}  // namespace

TEST_CASE("slit mesh construction") {
    const SlitMesh m = SlitMesh::build(unit_slit(), 0.1, 0.1 / 16);
    const MeshStats st = m.stats();
    CHECK(st.min_angle_deg >= 20);
    CHECK(m.area() == Approx(1).epsilon(1e-13));
    CHECK(st.h_min <= 0.1 / 16);
    REQUIRE(m.tip_vertex() >= 0);
    CHECK(m.vertices()[m.tip_vertex()].isApprox(Vec2(0.5, 0)));
    int at_tip = 0;
    for (const Vec2& x : m.vertices()) at_tip += (x - Vec2(0.5, 0)).norm() < 1e-14;
    CHECK(at_tip == 1);

    // lip pairs: equal coordinates, opposite sides, the boundary vertex included
    CHECK(!m.lip_pairs().empty());
    bool boundary_pair = false;
    for (auto [u, l] : m.lip_pairs()) {
        CHECK(m.vertices()[u] == m.vertices()[l]);
        CHECK(m.side()[u] == 1);
        CHECK(m.side()[l] == -1);
        CHECK(m.vertices()[u].x() < 0.5);
        boundary_pair |= m.vertices()[u].x() == 0;
    }
    CHECK(boundary_pair);
    // no element crosses the slit and lip copies are used on their own side only
    for (const auto& t : m.triangles()) {
        double cy = 0;
        for (int v : t) cy += m.vertices()[v].y() / 3;
        for (int v : t) {
            CHECK(m.vertices()[v].y() * cy >= 0);
            if (m.side()[v] != 0) CHECK(m.side()[v] * cy > 0);
        }
    }
    // grading: edge length near the tip grows geometrically
    const SlitMesh fine = SlitMesh::build(unit_slit(), 0.1, 0.1 / 64);
    CHECK(fine.stats().h_min <= 0.1 / 64);
    CHECK(fine.stats().vertices < 4 * m.stats().vertices);

    CHECK_THROWS_AS(SlitMesh::build(unit_slit(), 0.1, 0.2), ParameterError);

    std::stringstream ss;
    m.write(ss);
    const SlitMesh r = SlitMesh::read(ss);
    CHECK(r.vertices().size() == m.vertices().size());
    CHECK(r.triangles() == m.triangles());
    CHECK(r.lip_pairs() == m.lip_pairs());
    CHECK(r.tip_vertex() == m.tip_vertex());
    std::stringstream bad("crackflux-mesh 1\nrect 0 1");
    CHECK_THROWS_AS(SlitMesh::read(bad), ParseError);

    // location with side selection on the slit
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 300; ++i) {
        const Vec2 y(U(rng), U(rng) - 0.5);
        const int e = m.locate(y);
        REQUIRE(e >= 0);
        const Eigen::Vector3d l = m.barycentric(e, y);
        CHECK(l.minCoeff() >= -1e-10);
    }
    const int eu = m.locate(Vec2(0.25, 0.0)), el = m.locate(Vec2(0.25, -0.0));
    double cu = 0, cl = 0;
    for (int v : m.triangles()[eu]) cu += m.vertices()[v].y();
    for (int v : m.triangles()[el]) cl += m.vertices()[v].y();
    CHECK(cu > 0);
    CHECK(cl < 0);
    CHECK(m.locate(Vec2(2, 0)) == -1);
}

TEST_CASE("assembly") {
    auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(unit_slit(), 0.1, 0.1 / 8));
    WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>());
    const Operators op = ws.assemble(0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.K.rows());
    CHECK((op.K * one).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(one.dot(ws.mass() * one) == Approx(1).epsilon(1e-13));
    CHECK(op.P.norm() == 0);
    CHECK(op.Q.norm() == 0);

    SUBCASE("moving straight crack: energy of y1 equals the integral of A4_11") {
        auto pb = straight({1.5, 0.6});
        Pipeline pl(pb, ChartConfig{});
        const ChartWindow& w = pl.windows()[0];
        const RectSlit r = transformed_domain(w);
        auto m2 = std::make_shared<SlitMesh>(SlitMesh::build(r, 0.25, 0.25 / 16));
        WaveSolver s2(m2, std::make_shared<ChartCoefficients>(w));
        const double t = 0.5 * (w.t0() + w.t1());
        const Operators o2 = s2.assemble(t);
        const Eigen::VectorXd v = s2.interpolate([](const Vec2& y) { return y.x(); });
        const double discrete = 0.5 * v.dot(o2.K * v);
        // oracle: adaptive cubature of A4_11 over the rectangle
        Patch rect;
        rect.u_breaks = {r.x0, -0.5, 0, 0.5, r.x1};
        rect.v_breaks = {r.y0, 0, r.y1};
        rect.map = [](double u, double vv, Vec2& x, double& jw) {
            x = Vec2(u, vv);
            jw = 1;
            return true;
        };
        const QuadResult q = integrate_patches(
            {rect}, [&](const Vec2& y) { return w.coefficients(t, y).A4(0, 0); }, {1e-7, 200000, true});
        CHECK(discrete == Approx(0.5 * q.value).epsilon(2e-3));
        // the transformed crack line carries a diagonal A4 (conormal = A4_22 d/dy2)
        for (double y1 : {-1.5, -0.3, -0.05, -0.01})
            CHECK(std::abs(w.coefficients(t, Vec2(y1, 0)).A4(0, 1)) < 1e-10);
    }
}

TEST_CASE("time stepping: zero data, energy, standing mode") {
    RectSlit sq{0, 1, 0, 1, 0, {false, false, false, false}};
    SUBCASE("zero data stays zero") {
        auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(unit_slit(), 0.1, 0.1 / 8));
        WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>());
        const Eigen::Index n = Eigen::Index(mesh->vertices().size());
        WaveState s = ws.initial(0, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
        for (int k = 0; k < 10; ++k) s = ws.step(s, 0.05);
        CHECK(s.v.cwiseAbs().maxCoeff() == 0);
        CHECK(s.vd.cwiseAbs().maxCoeff() == 0);
    }
    SUBCASE("undriven energy is conserved") {
        auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(unit_slit(), 0.1, 0.1 / 8));
        WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>(Mat2{{1.5, 0.2}, {0.2, 1}}));
        WaveState s = ws.initial(0, ws.interpolate([](const Vec2& y) { return std::exp(-20 * (y - Vec2(0.7, 0.2)).squaredNorm()); }),
                                 ws.interpolate([](const Vec2& y) { return y.y(); }));
        const double E0 = ws.energy(s);
        const double dt = 0.02;
        double worst = 0;
        for (int k = 0; k < 100; ++k) {
            s = ws.step(s, dt);
            worst = std::max(worst, std::abs(ws.energy(s) - E0) / E0);
            CHECK(ws.last_residual() <= 1e-10);
        }
        CHECK(worst <= 1e-8);
    }
    SUBCASE("standing mode converges at second order") {
        std::vector<double> err;
        for (int n : {8, 16, 32}) {
            auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(sq, 1.0 / n, 1.0 / n));
            WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>());
            const Eigen::Index nv = Eigen::Index(mesh->vertices().size());
            WaveState s = ws.initial(0, ws.interpolate([](const Vec2& y) { return std::cos(pi * y.x()); }),
                                     Eigen::VectorXd::Zero(nv));
            const int steps = 2 * n;
            for (int k = 0; k < steps; ++k) s = ws.step(s, 1.0 / steps);
            err.push_back(ws.l2_error(s.v, [](const Vec2& y) { return std::cos(pi * y.x()) * std::cos(pi); }));
        }
        CHECK(observed_order(err[0], err[1]) >= 1.8);
        CHECK(observed_order(err[1], err[2]) >= 1.8);
    }
}

TEST_CASE("lip decoupling") {
    // static Laplace problem on a fully cut rectangle: forcing on the upper lip only
    RectSlit r = unit_slit();
    r.tip_x = r.x1;
    r.dirichlet = {true, false, true, false};
    const SlitMesh m = SlitMesh::build(r, 0.1, 0.1);
    auto mesh = std::make_shared<SlitMesh>(m);
    WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>());
    SpMat K = ws.assemble(0).K;
    Eigen::VectorXd F = Eigen::VectorXd::Zero(K.rows());
    for (auto [u, l] : m.lip_pairs()) F(u) = 1 + m.vertices()[u].x();
    for (Eigen::Index k = 0; k < K.outerSize(); ++k)
        for (SpMat::InnerIterator it(K, k); it; ++it)
            if (m.dirichlet()[it.row()]) it.valueRef() = it.row() == it.col() ? 1 : 0;
    for (Eigen::Index i = 0; i < F.size(); ++i)
        if (m.dirichlet()[i]) F(i) = 0;
    Eigen::SparseLU<SpMat> lu(K);
    const Eigen::VectorXd v = lu.solve(F);
    double upper = 0, lower = 0;
    for (auto [u, l] : m.lip_pairs()) {
        upper = std::max(upper, std::abs(v(u)));
        lower = std::max(lower, std::abs(v(l)));
    }
    CHECK(upper > 1e-2);
    CHECK(lower == 0);
}

TEST_CASE("transformed-domain manufactured solution and pullback") {
    auto pb = straight({1.5, 0.5}, {0, 1, 2, 3});
    auto pl = std::make_shared<Pipeline>(pb, ChartConfig{});
    const ChartWindow& w = pl->windows()[0];
    const RectSlit r = transformed_domain(w);
    CHECK(r.dirichlet == std::array<bool, 4>{true, true, true, true});
    CHECK(r.tip_x == 0);
    const double W = r.x1 - r.x0, H = r.y1;
    REQUIRE(r.y0 == Approx(-H));
    // smooth, vanishing on the boundary, even in y2
    const VField vf = [=](double t, const Vec2& y) {
        const double a = pi / W, b = pi / (2 * H);
        const double X = std::sin(a * (y.x() - r.x0)), Xp = a * std::cos(a * (y.x() - r.x0)), Xpp = -a * a * X;
        const double Y = std::cos(b * y.y()), Yp = -b * std::sin(b * y.y()), Ypp = -b * b * Y;
        const double T = std::cos(2 * t), Tt = -2 * std::sin(2 * t), Ttt = -4 * T;
        VJet j;
        j.v = T * X * Y;
        j.vt = Tt * X * Y;
        j.vtt = Ttt * X * Y;
        j.g = T * Vec2(Xp * Y, X * Yp);
        j.gt = Tt * Vec2(Xp * Y, X * Yp);
        j.H << T * Xpp * Y, T * Xp * Yp, T * Xp * Yp, T * X * Ypp;
        return j;
    };
    auto coef = std::make_shared<ChartCoefficients>(w, [&](double t, const Vec2& x) { return forcing_from_v(w, vf, t, x); });
    const double T = w.t1();
    std::vector<double> err;
    std::vector<std::shared_ptr<WaveSolver>> solvers;
    std::vector<WaveState> finals;
    for (double h : {0.4, 0.2, 0.1}) {
        auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(r, h, h));
        auto ws = std::make_shared<WaveSolver>(mesh, coef);
        WaveState s = ws->initial(w.t0(), ws->interpolate([&](const Vec2& y) { return vf(w.t0(), y).v; }),
                                  ws->interpolate([&](const Vec2& y) { return vf(w.t0(), y).vt; }));
        const int steps = int(std::lround((T - w.t0()) / (0.5 * h)));
        for (int k = 0; k < steps; ++k) s = ws->step(s, (T - w.t0()) / steps);
        err.push_back(ws->l2_error(s.v, [&](const Vec2& y) { return vf(T, y).v; }));
        solvers.push_back(ws);
        finals.push_back(s);
    }
    MESSAGE("mms errors ", err[0], " ", err[1], " ", err[2]);
    CHECK(observed_order(err[0], err[1]) >= 1.8);
    CHECK(observed_order(err[1], err[2]) >= 1.8);

    // pullback on the finest run: value, chain-rule velocity, gradient against differences
    const WaveSolver& ws = *solvers.back();
    const WaveState& s = finals.back();
    for (const Vec2 x : {Vec2(0.3, 0.4), Vec2(-1.2, -0.7), Vec2(0.01, 0.02)}) {
        const PullbackSample p = pullback(ws, s, w, x);
        const Jet j = w.phi(T, x);
        const VJet e = vf(T, j.y);
        CHECK(std::abs(p.u - e.v) < 2e-2);
        CHECK(std::abs(p.ut - (e.vt + e.g.dot(j.yt))) < 0.15);
        const double hh = 1e-3;
        const Vec2 fd((pullback(ws, s, w, x + Vec2(hh, 0)).u - pullback(ws, s, w, x - Vec2(hh, 0)).u) / (2 * hh),
                      (pullback(ws, s, w, x + Vec2(0, hh)).u - pullback(ws, s, w, x - Vec2(0, hh)).u) / (2 * hh));
        CHECK((fd - j.J.transpose() * e.g).norm() < 0.15);
    }
    CHECK_THROWS_AS(pullback(ws, s, w, Vec2(5, 0)), LocateError);
}
