#include "crackflux/studies.hpp"

#include "crackflux/sif.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crackflux {

namespace {

constexpr double pi = std::numbers::pi;

Eigen::Index nverts(const WaveSolver& s) { return Eigen::Index(s.mesh().vertices().size()); }

std::shared_ptr<WaveSolver> make_solver(const ChartWindow& w, const VField& v, double h, double h_tip) {
    const RectSlit r = transformed_domain(w);
    auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(r, h, h_tip));
    auto coef = std::make_shared<ChartCoefficients>(w, [&w, v](double t, const Vec2& x) { return forcing_from_v(w, v, t, x); });
    return std::make_shared<WaveSolver>(mesh, coef);
}

WaveState start(WaveSolver& ws, const VField& v, double t0) {
    return ws.initial(t0, ws.interpolate([&](const Vec2& y) { return v(t0, y).v; }),
                      ws.interpolate([&](const Vec2& y) { return v(t0, y).vt; }));
}

}  // namespace

VField smooth_mode(const RectSlit& r) {
    const double W = r.x1 - r.x0, H = r.y1;
    return [=](double t, const Vec2& y) {
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
}

VField singular_mode(double k, double r_in, double r_out) {
    return [=](double, const Vec2& y) {
        VJet j;
        const double r = y.norm();
        if (r == 0 || r >= r_out) return j;
        const SJet S = S_eval(y);
        double c = 1, c1 = 0, c2 = 0;
        if (r > r_in) {
            const double L = r_out - r_in, s = (r - r_in) / L;
            c = 1 - s * s * s * (10 - 15 * s + 6 * s * s);
            c1 = -30 * s * s * (1 - s) * (1 - s) / L;
            c2 = -60 * s * (1 - s) * (1 - 2 * s) / (L * L);
        }
        const Vec2 e = y / r;
        const Vec2 gc = c1 * e;
        const Mat2 Hc = c2 * e * e.transpose() + (c1 / r) * (Mat2::Identity() - e * e.transpose());
        j.v = k * c * S.v;
        j.g = k * (S.v * gc + c * S.g);
        j.H = k * (S.v * Hc + gc * S.g.transpose() + S.g * gc.transpose() + c * S.h);
        return j;
    };
}

ConvergenceStudy mms_convergence(const ChartWindow& w, const std::vector<double>& hs) {
    ConvergenceStudy out;
    const VField v = smooth_mode(transformed_domain(w));
    const double t0 = w.t0(), t1 = w.t1();
    out.min_order = INFINITY;
    for (double h : hs) {
        auto ws = make_solver(w, v, h, h);
        WaveState s = start(*ws, v, t0);
        SolveRun run;
        run.h = run.h_tip = h;
        run.steps = std::max(1, int(std::lround((t1 - t0) / (0.5 * h))));
        run.dt = (t1 - t0) / run.steps;
        run.vertices = ws->mesh().vertices().size();
        run.triangles = ws->mesh().triangles().size();
        for (int i = 0; i < run.steps; ++i) {
            s = ws->step(s, run.dt);
            run.max_residual = std::max(run.max_residual, ws->last_residual());
        }
        run.l2_error = ws->l2_error(s.v, [&](const Vec2& y) { return v(t1, y).v; });
        if (!out.runs.empty()) {
            const SolveRun& prev = out.runs.back();
            run.order = std::log(prev.l2_error / run.l2_error) / std::log(prev.h / h);
            out.min_order = std::min(out.min_order, run.order);
        }
        out.runs.push_back(run);
    }
    if (out.runs.size() < 2) out.min_order = 0;
    return out;
}

ZeroRun zero_data_run(const ChartWindow& w, double h, int steps) {
    ZeroRun out;
    auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(transformed_domain(w), h, h / 8));
    WaveSolver ws(mesh, std::make_shared<ChartCoefficients>(w));
    const Eigen::Index n = nverts(ws);
    WaveState s = ws.initial(w.t0(), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
    const double dt = (w.t1() - w.t0()) / steps;
    for (int i = 0; i <= steps; ++i) {
        if (i > 0) s = ws.step(s, dt);
        out.t.push_back(s.t);
        out.energy.push_back(ws.energy(s));
        out.max_abs.push_back(std::max(s.v.cwiseAbs().maxCoeff(), s.vd.cwiseAbs().maxCoeff()));
    }
    return out;
}

SingularStudy singular_sif_study(std::shared_ptr<const Pipeline> pl, int window, double k, const std::vector<double>& hs,
                                 double rho1, double rho2, double tip_ratio) {
    const ChartWindow& w = pl->windows().at(std::size_t(window));
    const RectSlit r = transformed_domain(w);
    // cutoff well inside the rectangle
    const double room = std::min({-r.x0, r.x1, -r.y0, r.y1});
    const VField v = singular_mode(k, 0.4 * room, 0.8 * room);
    SingularStudy out;
    out.t = w.t1();
    out.k_exact = k;
    out.rho1 = rho1;
    out.rho2 = rho2;
    const SingularField sf(pl->problem_ptr());
    const SingularBasis basis = [&w, t = out.t](const Vec2& x) { return S_eval(w.phi(t, x).y).v; };
    for (double h : hs) {
        auto ws = make_solver(w, v, h, h / tip_ratio);
        WaveState s = start(*ws, v, w.t0());
        SingularRun run;
        run.h = h;
        run.h_tip = h / tip_ratio;
        run.vertices = ws->mesh().vertices().size();
        run.steps = std::max(1, int(std::lround((w.t1() - w.t0()) / (0.5 * h))));
        const double dt = (w.t1() - w.t0()) / run.steps;
        for (int i = 0; i < run.steps; ++i) {
            s = ws->step(s, dt);
            out.max_residual = std::max(out.max_residual, ws->last_residual());
        }
        const ScalarField u = [&](const Vec2& x) { return pullback(*ws, s, w, x).u; };
        run.projection = extract_sif_projection(u, sf, out.t, rho1, rho2, {}, basis);
        run.jump = extract_sif_jump(u, sf, out.t, rho1, rho2);
        out.runs.push_back(run);
    }
    if (out.runs.size() >= 2) {
        const double a = out.runs.back().projection.k, b = out.runs[out.runs.size() - 2].projection.k;
        out.mesh_change = std::abs(a - b) / std::abs(a);
    }
    return out;
}

}  // namespace crackflux
