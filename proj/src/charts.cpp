#include "crackflux/charts.hpp"

#include "crackflux/parallel.hpp"
#include "crackflux/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace crackflux {

CurveFrame curve_frame(const CurveJet& c) {
    CurveFrame f;
    f.L = c.b1.norm();
    f.u = c.b1 / f.L;
    f.L1 = f.u.dot(c.b2);
    f.u1 = (c.b2 - f.u * f.L1) / f.L;
    f.L2 = f.u1.dot(c.b2) + f.u.dot(c.b3);
    f.u2 = (c.b3 - f.u1 * f.L1 - f.u * f.L2) / f.L - (c.b2 - f.u * f.L1) * f.L1 / (f.L * f.L);
    f.nu = rot90(f.u);
    f.nu1 = rot90(f.u1);
    f.nu2 = rot90(f.u2);
    return f;
}

TubeCoords tube_coords(const CurveJet& c, double sigma, const Vec2& z) {
    const CurveFrame f = curve_frame(c);
    const double tau = (z - c.b).dot(f.nu);
    Mat2 DG;
    DG.col(0) = c.b1 + tau * f.nu1;
    DG.col(1) = f.nu;
    const Vec2 Gss = c.b2 + tau * f.nu2, Gst = f.nu1;
    TubeCoords t;
    t.w = {sigma, tau};
    t.J = DG.inverse();
    std::array<Mat2, 2> HG;
    for (int a = 0; a < 2; ++a) HG[a] << Gss(a), Gst(a), Gst(a), 0;
    for (int i = 0; i < 2; ++i) {
        t.H[i] = Mat2::Zero();
        for (int a = 0; a < 2; ++a) t.H[i] -= t.J(i, a) * (t.J.transpose() * HG[a] * t.J);
    }
    return t;
}

Vec2 newton_invert(const std::function<Jet(const Vec2&)>& f, const Vec2& y, Vec2 x, double tol, int max_iter) {
    Jet j = f(x);
    double rn = (y - j.y).norm();
    for (int it = 0; it < max_iter && rn > tol; ++it) {
        const double det = j.J.determinant();
        if (!(std::abs(det) > 0)) break;
        const Vec2 step = j.J.inverse() * (y - j.y);
        double lam = 1;
        for (;;) {
            const Vec2 xn = x + lam * step;
            const Jet jn = f(xn);
            const double rnn = (y - jn.y).norm();
            if (rnn < (1 - 1e-4 * lam) * rn || lam < 1e-6) {
                x = xn;
                j = jn;
                rn = rnn;
                break;
            }
            lam *= 0.5;
        }
    }
    if (!(rn <= tol * 100)) throw GeometryError("chart inversion did not converge (residual " + std::to_string(rn) + ")");
    return x;
}

namespace {

double project_on(const std::function<CurveJet(double)>& curve, const Vec2& z, double seed, double window) {
    const double lo = seed - window, hi = seed + window;
    auto newton = [&](double s) -> std::pair<bool, double> {
        for (int it = 0; it < 60; ++it) {
            const CurveJet c = curve(s);
            const Vec2 d = z - c.b;
            const double f = d.dot(c.b1);
            double fp = -c.b1.squaredNorm() + d.dot(c.b2);
            if (fp > -1e-3 * c.b1.squaredNorm()) fp = -c.b1.squaredNorm();
            const double step = std::clamp(-f / fp, -0.25 * window, 0.25 * window);
            s = std::clamp(s + step, lo, hi);
            if (std::abs(step) <= 1e-15 * (1 + std::abs(s))) return {true, s};
        }
        return {false, s};
    };
    auto [ok, s] = newton(seed);
    if (ok) return s;
    double best = seed, bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 64; ++i) {
        const double q = lo + (hi - lo) * i / 64.0;
        const double d = (curve(q).b - z).squaredNorm();
        if (d < bd) bd = d, best = q;
    }
    return newton(best).second;
}

CurveJet path_jet(const CurvePoint& c) { return {c.p, c.d1, c.d2, c.d3}; }

std::atomic<std::uint64_t> next_window_id{1};

struct MotionCache {
    std::uint64_t owner = 0;
    double t = std::numeric_limits<double>::quiet_NaN();
    Motion m;
};
thread_local MotionCache motion_cache;

}  // namespace

// ------------------------------------------------------------------ window

ChartWindow::ChartWindow(ProblemPtr problem, double t0, double t1, const ChartConfig& cfg)
    : pb_(std::move(problem)), cfg_(cfg), id_(next_window_id++), t0_(t0), t1_(t1) {
    const Problem& P = *pb_;
    c1_ = P.c1();
    sa_ = P.law.eval(t0).s;
    sb_ = P.law.eval(t1).s;
    const CurvePoint ca = P.path->at(sa_);
    xa_ = ca.p;
    R_.chi_identity = P.A->is_identity();
    R_.chi_linear = !R_.chi_identity && P.A->is_constant();
    Q0_ = spd_sqrt(P.A->eval(xa_)).inv_half;
    const Vec2 u0 = (Q0_ * ca.d1).normalized();
    R0_.row(0) = u0.transpose();
    R0_.row(1) = rot90(u0).transpose();
    choose_radii();
}

ChartWindow::QJet ChartWindow::q_along(double sigma) const {
    auto q = [&](double s) { return spd_sqrt(pb_->A->eval(pb_->path->eval(s).p)).inv_half; };
    const double h = 1e-3;
    const Mat2 m2 = q(sigma - 2 * h), m1 = q(sigma - h), q0 = q(sigma), p1 = q(sigma + h), p2 = q(sigma + 2 * h);
    QJet r;
    r.q = q0;
    r.q1 = (8 * (p1 - m1) - (p2 - m2)) / (12 * h);
    r.q2 = (-p2 + 16 * p1 - 30 * q0 + 16 * m1 - m2) / (12 * h * h);
    r.q3 = (p2 - 2 * p1 + 2 * m1 - m2) / (2 * h * h * h);
    return r;
}

CurveJet ChartWindow::image_curve(double sigma) const {
    const CurvePoint g = pb_->path->eval(sigma);
    if (R_.chi_identity) return path_jet(g);
    if (R_.chi_linear) return {xa_ + Q0_ * (g.p - xa_), Q0_ * g.d1, Q0_ * g.d2, Q0_ * g.d3};
    const QJet q = q_along(sigma);
    CurveJet c;
    c.b1 = q.q * g.d1;
    c.b2 = q.q1 * g.d1 + q.q * g.d2;
    c.b3 = q.q2 * g.d1 + 2 * q.q1 * g.d2 + q.q * g.d3;
    Vec2 acc = Vec2::Zero();
    if (sigma != sa_) {
        const GaussRule& gr = gauss_legendre(24);
        const double m = 0.5 * (sigma + sa_), hw = 0.5 * (sigma - sa_);
        for (std::size_t i = 0; i < gr.x.size(); ++i) {
            const CurvePoint p = pb_->path->eval(m + hw * gr.x[i]);
            acc += gr.w[i] * (spd_sqrt(pb_->A->eval(p.p)).inv_half * p.d1);
        }
        acc *= hw;
    }
    c.b = xa_ + acc;
    return c;
}

double ChartWindow::image_arclength(double sigma) const {
    if (R_.chi_identity) return sigma - sa_;
    if (sigma == sa_) return 0;
    auto speed = [&](double s) {
        const CurvePoint p = pb_->path->eval(s);
        const Mat2 q = R_.chi_linear ? Q0_ : spd_sqrt(pb_->A->eval(p.p)).inv_half;
        return (q * p.d1).norm();
    };
    if (R_.chi_linear && pb_->path->is_straight()) return (sigma - sa_) * speed(sa_);
    return gauss_integrate(speed, sa_, sigma, 24);
}

double ChartWindow::image_project(const Vec2& z) const {
    if (R_.chi_identity) return pb_->path->project(z, sa_, lam_window_);
    return project_on([&](double s) { return image_curve(s); }, z, sa_, lam_window_);
}

Jet ChartWindow::chi_target(const Vec2& x) const {
    if (R_.chi_linear) return Jet::affine(xa_, Q0_, x, xa_);
    const double sigma = pb_->path->project(x, sa_, 2 * R_.chi_out + (sb_ - sa_));
    const CurvePoint g = pb_->path->eval(sigma);
    const TubeCoords tc = tube_coords(path_jet(g), sigma, x);
    const double tau = tc.w(1);
    const CurveJet c = image_curve(sigma);
    const QJet q = q_along(sigma);
    const Vec2 n = g.normal(), n1 = rot90(g.d2), n2 = rot90(g.d3);
    const Vec2 m = q.q * n, m1 = q.q1 * n + q.q * n1, m2 = q.q2 * n + 2 * q.q1 * n1 + q.q * n2;
    Mat2 DT;
    DT.col(0) = c.b1 + tau * m1;
    DT.col(1) = m;
    Jet j;
    j.y = c.b + tau * m;
    j.J = DT * tc.J;
    for (int a = 0; a < 2; ++a) {
        Mat2 HT;
        HT << c.b2(a) + tau * m2(a), m1(a), m1(a), 0;
        j.H[a] = tc.J.transpose() * HT * tc.J + DT(a, 0) * tc.H[0] + DT(a, 1) * tc.H[1];
    }
    return j;
}

Jet ChartWindow::chi(const Vec2& x) const {
    if (R_.chi_identity) return Jet::identity(x);
    const ScalarJet k = RadialCutoff{xa_, R_.chi_core, R_.chi_out, true}.eval(x);
    if (k.v == 0 && k.g.isZero()) return Jet::identity(x);
    return blend(Jet::identity(x), chi_target(x), k);
}

Jet ChartWindow::lambda_target(const Vec2& z) const {
    const double sigma = image_project(z);
    const CurveJet c = image_curve(sigma);
    const TubeCoords tc = tube_coords(c, sigma, z);
    const CurveFrame f = curve_frame(c);
    Jet j;
    j.y = {image_arclength(sigma), tc.w(1)};
    const Vec2 gs = tc.J.row(0).transpose();
    j.J.row(0) = f.L * tc.J.row(0);
    j.J.row(1) = tc.J.row(1);
    j.H[0] = f.L1 * gs * gs.transpose() + f.L * tc.H[0];
    j.H[1] = tc.H[1];
    return j;
}

Jet ChartWindow::lambda(const Vec2& z) const {
    const Jet rig = Jet::affine(Vec2::Zero(), R0_, z, xa_);
    if (R_.lambda_rigid) return rig;
    const ScalarJet k = RadialCutoff{xa_, R_.lambda_in, R_.lambda_out, false}.eval(z);
    if (k.v == 0 && k.g.isZero()) return rig;
    return blend(rig, lambda_target(z), k);
}

Motion ChartWindow::motion(double t) const {
    MotionCache& mc = motion_cache;
    if (mc.owner == id_ && mc.t == t) return mc.m;
    const GrowthState g = pb_->law.eval_unchecked(t);
    const CurveFrame f = curve_frame(image_curve(g.s));
    Motion m;
    m.s = g.s;
    m.sd = g.sd;
    m.delta = image_arclength(g.s);
    const double h = f.L, h1 = f.L1, h2 = f.L2;
    m.v = h * g.sd;
    m.acc = h1 * g.sd * g.sd + h * g.sdd;
    m.jerk = h2 * g.sd * g.sd * g.sd + 3 * h1 * g.sd * g.sdd + h * g.sddd;
    if (!(m.v < 1)) throw ValidationError("transported speed reaches 1");
    m.alpha = std::sqrt(1 - m.v * m.v);
    m.alpha_d = -m.v * m.acc / m.alpha;
    const double va = m.v * m.acc;
    m.alpha_dd = -(m.acc * m.acc + m.v * m.jerk) / m.alpha - va * va / (m.alpha * m.alpha * m.alpha);
    mc.owner = id_;
    mc.t = t;
    mc.m = m;
    return m;
}

Jet ChartWindow::psi(double t, const Vec2& w) const {
    const Motion m = motion(t);
    const ScalarJet k = RadialCutoff{Vec2::Zero(), R_.psi_core, R_.psi_out, false}.eval(w);
    Jet j = Jet::identity(w);
    const Vec2 e1(1, 0);
    j.y = w - k.v * m.delta * e1;
    j.J -= m.delta * e1 * k.g.transpose();
    j.H[0] = -m.delta * k.h;
    j.yt = -k.v * m.v * e1;
    j.ytt = -k.v * m.acc * e1;
    j.Jt = -m.v * e1 * k.g.transpose();
    return j;
}

double ChartWindow::d_of(double t, double r) const {
    const Motion m = motion(t);
    return c1_ + (m.alpha - c1_) * k_eta(r, eta_).v;
}

Jet ChartWindow::pchart(double t, const Vec2& w) const {
    const Motion m = motion(t);
    const double r = w.norm();
    const Profile k = k_eta(r, eta_);
    const ScalarJet kj = radial_jet(k, w, r);
    const double ac = m.alpha - c1_;
    const double d = c1_ + ac * k.v;
    const Vec2 gd = ac * kj.g;
    const Mat2 hd = ac * kj.h;
    const double dd = m.alpha_d * k.v, ddd = m.alpha_dd * k.v;
    const Vec2 gdd = m.alpha_d * kj.g;
    const double x1 = w.x(), d2 = d * d, d3 = d2 * d;
    const Vec2 e1(1, 0);
    Jet j;
    j.y = {x1 / d, w.y()};
    j.J.row(0) = (e1 / d - x1 * gd / d2).transpose();
    j.J.row(1) << 0, 1;
    j.H[0] = -(e1 * gd.transpose() + gd * e1.transpose()) / d2 - x1 * hd / d2 + 2 * x1 * gd * gd.transpose() / d3;
    j.yt = {-x1 * dd / d2, 0};
    j.ytt = {-x1 * ddd / d2 + 2 * x1 * dd * dd / d3, 0};
    j.Jt.row(0) = (-dd * e1 / d2 - x1 * gdd / d2 + 2 * x1 * dd * gd / d3).transpose();
    return j;
}

Jet ChartWindow::phi(double t, const Vec2& x) const {
    const Jet a = chi(x);
    const Jet b = compose(lambda(a.y), a);
    const Jet c = compose(psi(t, b.y), b);
    return compose(pchart(t, c.y), c);
}

Vec2 ChartWindow::pchart_inverse(double t, const Vec2& y) const {
    const Motion m = motion(t);
    const double x2 = y.y();
    if (y.x() == 0) return {0, x2};
    const double dlo = std::min(m.alpha, c1_), dhi = std::max(m.alpha, c1_);
    double lo = y.x() * dlo, hi = y.x() * dhi;
    if (lo > hi) std::swap(lo, hi);
    auto g = [&](double x1) { return x1 / d_of(t, std::hypot(x1, x2)) - y.x(); };
    double x1 = std::clamp(y.x() * d_of(t, y.norm()), lo, hi);
    double glo = g(lo);
    for (int it = 0; it < 100; ++it) {
        const Jet j = pchart(t, {x1, x2});
        const double gv = j.y.x() - y.x();
        if (std::abs(gv) <= 1e-15 * (1 + std::abs(y.x()))) break;
        if ((gv < 0) == (glo < 0)) lo = x1, glo = gv;
        else hi = x1;
        double xn = x1 - gv / j.J(0, 0);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x1) <= 1e-16 * (1 + std::abs(x1))) {
            x1 = xn;
            break;
        }
        x1 = xn;
    }
    return {x1, x2};
}

Vec2 ChartWindow::psi_inverse(double t, const Vec2& w) const {
    const Motion m = motion(t);
    if (m.delta == 0) return w;
    Vec2 seed = w + Vec2(m.delta, 0);
    if (seed.norm() > R_.psi_core) seed = w;
    return newton_invert([&](const Vec2& z) { return psi(t, z); }, w, seed, 1e-14 * (1 + w.norm()));
}

Vec2 ChartWindow::lambda_inverse(const Vec2& w) const {
    const Vec2 seed = xa_ + R0_.transpose() * w;
    if (R_.lambda_rigid) return seed;
    return newton_invert([&](const Vec2& z) { return lambda(z); }, w, seed, 1e-14 * (1 + w.norm() + xa_.norm()));
}

Vec2 ChartWindow::chi_inverse(const Vec2& z) const {
    if (R_.chi_identity) return z;
    const double tol = 1e-14 * (1 + z.norm());
    auto f = [&](const Vec2& x) { return chi(x); };
    const Vec2 lin = xa_ + spd_sqrt(pb_->A->eval(xa_)).half * (z - xa_);
    try {
        return newton_invert(f, z, (z - xa_).norm() < R_.chi_out ? lin : z, tol);
    } catch (const GeometryError&) {
        return newton_invert(f, z, z, tol);
    }
}

Vec2 ChartWindow::phi_inverse(double t, const Vec2& y) const {
    Vec2 x = chi_inverse(lambda_inverse(psi_inverse(t, pchart_inverse(t, y))));
    const double scale = 1 + y.norm();
    if ((phi(t, x).y - y).norm() > 1e-13 * scale)
        x = newton_invert([&](const Vec2& p) { return phi(t, p); }, y, x, 1e-14 * scale);
    return x;
}

Mat2 ChartWindow::a4_at_x(double t, const Vec2& x) const {
    const Jet j = phi(t, x);
    return j.J * pb_->A->eval(x) * j.J.transpose() - j.yt * j.yt.transpose();
}

Coefficients ChartWindow::coefficients_at_x(double t, const Vec2& x) const {
    const Jet j = phi(t, x);
    const Mat2 A = pb_->A->eval(x);
    const auto gA = pb_->A->grad(x);
    const Mat2& F = j.J;
    const Mat2 Fi = F.inverse();
    Coefficients c;
    c.y = j.y;
    c.A4 = F * A * F.transpose() - j.yt * j.yt.transpose();
    std::array<Mat2, 2> dM;
    for (int k = 0; k < 2; ++k) {
        Mat2 dF;
        for (int a = 0; a < 2; ++a) dF.row(a) = j.H[a].col(k).transpose();
        const Vec2 dyt = j.Jt.col(k);
        dM[k] = dF * A * F.transpose() + F * gA[k] * F.transpose() + F * A * dF.transpose() - dyt * j.yt.transpose() -
                j.yt * dyt.transpose();
    }
    Vec2 divA4 = Vec2::Zero(), divAgrad = Vec2::Zero();
    for (int m = 0; m < 2; ++m) {
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) divA4(m) += Fi(k, i) * dM[k](i, m);
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) divAgrad(m) += gA[k](k, l) * F(m, l);
        divAgrad(m) += A.cwiseProduct(j.H[m]).sum();
    }
    c.p = j.ytt - divAgrad + divA4;
    c.q = -j.yt;
    c.J = 1 / F.determinant();
    return c;
}

double ChartWindow::ellipticity_radius() const {
    const Problem& P = *pb_;
    const double room = P.domain.boundary_distance(xa_);
    const double bound = 1 - c1_ * c1_ / 2;
    double fail = 10 * room;
    for (int i = 0; i < 40; ++i) {
        const double r = room * std::pow(1e-3, 1 - i / 39.0);
        for (int k = 0; k < 32; ++k) {
            const double th = 2 * M_PI * (k + 0.5) / 32;
            const Vec2 x = xa_ + r * Vec2(std::cos(th), std::sin(th));
            if (!P.domain.contains(x)) continue;
            const Jet a = chi(x);
            const Jet b = compose(lambda(a.y), a);
            const Mat2 A2 = b.J * P.A->eval(x) * b.J.transpose();
            if (sym_eigenvalues(A2)[0] < bound) fail = std::min(fail, b.y.norm());
        }
    }
    return fail;
}

double ChartWindow::min_a4_sample(double eta) const {
    double m = std::numeric_limits<double>::infinity();
    const double span = 2 * (eta + dmax_) * std::max(1.0, std::sqrt(sym_eigenvalues(pb_->A->eval(xa_))[1]));
    for (double t : {t0_, 0.5 * (t0_ + t1_), t1_}) {
        const Vec2 r = pb_->tip(t);
        for (int i = 0; i < 17; ++i)
            for (int k = 0; k < 17; ++k) {
                const Vec2 x = r + span * Vec2(-1 + i / 8.0, -1 + k / 8.0);
                if (!pb_->domain.contains(x)) continue;
                m = std::min(m, sym_eigenvalues(a4_at_x(t, x))[0]);
            }
    }
    (void)eta;
    return m;
}

void ChartWindow::choose_radii() {
    const Problem& P = *pb_;
    const double dist = P.domain.boundary_distance(xa_);
    const double kap = P.path->max_curvature();
    const double room = kap > 0 ? std::min(dist, 0.5 / kap) : dist;
    R_.lambda_rigid = P.path->is_straight() && (R_.chi_identity || R_.chi_linear);
    double rz = room, hmin = 1;
    if (!R_.chi_identity) {
        const double lmax = sym_eigenvalues(P.A->eval(xa_))[1];
        hmin = 1 / std::sqrt(lmax);
        double ratio = cfg_.chi_ratio;
        R_.chi_out = cfg_.chi_room * room;
        bool ok = false;
        for (int attempt = 0; attempt < 6 && !ok; ++attempt, ratio *= 1.5) {
            R_.chi_core = R_.chi_out / ratio;
            ok = true;
            for (int i = 0; i <= 24 && ok; ++i) {
                const double r = R_.chi_core * std::pow(ratio, i / 24.0);
                for (int k = 0; k < 48; ++k) {
                    const double th = 2 * M_PI * k / 48;
                    if (chi(xa_ + r * Vec2(std::cos(th), std::sin(th))).J.determinant() <= 0) {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if (!ok) throw GeometryError("chi blend is not injective for any tried radius ratio");
        if ((P.path->at(sb_).p - xa_).norm() >= 0.5 * R_.chi_core)
            throw WindowError("crack increment leaves the chi core; use a smaller window");
        rz = (R_.chi_linear ? 0.9 : 0.8) * R_.chi_core * hmin;
    }
    double limit = rz;
    if (!R_.lambda_rigid) {
        lam_window_ = 2 * rz / hmin + (sb_ - sa_);
        double kimg = 0;
        for (int i = 0; i <= 64; ++i) {
            const double s = sa_ - lam_window_ + (2 * lam_window_ + (sb_ - sa_)) * i / 64.0;
            const CurveJet c = image_curve(s);
            kimg = std::max(kimg, std::abs(cross(c.b1, c.b2)) / std::pow(c.b1.norm(), 3));
        }
        const double rref = kimg > 0 ? std::min(rz, 0.5 / kimg) : rz;
        R_.lambda_in = cfg_.lambda_in * rref;
        R_.lambda_out = cfg_.lambda_out * rref;
        lam_window_ = 2 * R_.lambda_out / hmin + (sb_ - sa_);
        limit = R_.lambda_in;
    }
    dmax_ = image_arclength(sb_);
    const double margin = cfg_.psi_margin;
    const double eta_fit = std::min(limit - 4.375 * dmax_, limit / 1.5) - dmax_ - margin;
    auto set_eta = [&](double eta) {
        eta_ = eta;
        R_.psi_core = dmax_ + eta + margin;
        R_.psi_out = R_.psi_core + std::max(4.375 * dmax_, 0.5 * R_.psi_core);
    };
    eta_ell_ = ellipticity_radius();
    if (cfg_.eta > 0) {
        if (cfg_.eta > eta_fit) throw WindowError("eta does not fit inside the tip-shift core; use a smaller window");
        set_eta(cfg_.eta);
        return;
    }
    double eta = std::min(eta_ell_, eta_fit);
    if (!(eta > 1e-8 * P.domain.diameter())) throw WindowError("no room for the tip-shift chart; use a smaller window");
    set_eta(eta);
    for (int h = 0; h < 8 && min_a4_sample(eta_) <= 0; ++h) set_eta(0.5 * eta_);
}

// ------------------------------------------------------------------ pipeline

double max_transported_speed(const Problem& pb, int samples) {
    double m = 0;
    for (int i = 0; i < samples; ++i)
        m = std::max(m, transported_speed(pb.T() * i / (samples - 1), *pb.path, pb.law, *pb.A));
    return m;
}

Pipeline::Pipeline(ProblemPtr problem, const ChartConfig& cfg) : pb_(std::move(problem)) {
    const double T = pb_->T();
    const double vmax = max_transported_speed(*pb_);
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20; ++i) dist = std::min(dist, pb_->domain.boundary_distance(pb_->tip(T * i / 20)));
    rho_ = cfg.rho > 0 ? cfg.rho : (vmax > 0 ? std::min(T, 0.5 * dist / vmax) : T);
    std::string last;
    for (halvings_ = 0; halvings_ <= cfg.max_halvings; ++halvings_) {
        const int n = std::max(1, static_cast<int>(std::ceil(T / rho_ - 1e-9)));
        try {
            std::vector<ChartWindow> ws;
            for (int k = 0; k < n; ++k) ws.emplace_back(pb_, T * k / n, T * (k + 1) / n, cfg);
            w_ = std::move(ws);
            rho_ = T / n;
            return;
        } catch (const WindowError& e) {
            last = e.what();
        } catch (const GeometryError& e) {
            last = e.what();
        }
        rho_ *= 0.5;
    }
    throw WindowError("window subdivision failed after " + std::to_string(cfg.max_halvings) + " halvings: " + last);
}

const ChartWindow& Pipeline::window(double t) const {
    const int n = static_cast<int>(w_.size());
    const int k = std::clamp(static_cast<int>(std::floor(t / pb_->T() * n)), 0, n - 1);
    return w_[k];
}

EllipticityAudit ellipticity_audit(const Pipeline& pl, int nt, int nx, int ny) {
    const Problem& P = pl.problem();
    EllipticityAudit au;
    au.t.resize(nt);
    au.min_eig.assign(nt, 0);
    au.claim2.assign(nt, 0);
    std::vector<double> sym(nt, 0);
    std::vector<Vec2> worst(nt);
    const Vec2 lo = P.domain.lo(), hi = P.domain.hi();
    for (int i = 0; i < nt; ++i) au.t[i] = nt == 1 ? 0 : P.T() * i / (nt - 1);
    parallel_for(nt, [&](std::size_t i) {
        const double t = au.t[i];
        const ChartWindow& w = pl.window(t);
        double m = std::numeric_limits<double>::infinity(), s = 0;
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < ny; ++b) {
                const Vec2 x(lo.x() + (hi.x() - lo.x()) * (a + 0.5) / nx, lo.y() + (hi.y() - lo.y()) * (b + 0.5) / ny);
                if (!P.domain.contains(x)) continue;
                const Mat2 M = w.a4_at_x(t, x);
                s = std::max(s, std::abs(M(0, 1) - M(1, 0)));
                const double e = sym_eigenvalues(0.5 * (M + M.transpose()))[0];
                if (e < m) m = e, worst[i] = x;
            }
        const Mat2 M0 = w.a4_at_x(t, P.tip(t));
        au.min_eig[i] = m;
        au.claim2[i] = (M0 - Mat2::Identity()).cwiseAbs().maxCoeff();
        sym[i] = std::max(s, std::abs(M0(0, 1) - M0(1, 0)));
    });
    au.c4 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nt; ++i) {
        if (au.min_eig[i] < au.c4) au.c4 = au.min_eig[i], au.worst_t = au.t[i], au.worst_x = worst[i];
        au.claim2_residual = std::max(au.claim2_residual, au.claim2[i]);
        au.symmetry_residual = std::max(au.symmetry_residual, sym[i]);
        au.c2 = std::max(au.c2, std::abs(pl.window(au.t[i]).motion(au.t[i]).acc));
    }
    au.eta = pl.windows().front().eta();
    au.rho = pl.rho();
    au.c1 = P.c1();
    return au;
}

}  // namespace crackflux
