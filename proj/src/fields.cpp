#include "crackflux/fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <tuple>

namespace crackflux {

SJet S_eval(const Vec2& y) {
    if (y.x() == 0 && y.y() == 0) throw SingularPointError("S is singular at y = 0");
    const std::complex<double> w = std::sqrt(std::complex<double>(y.x(), y.y()));
    const std::complex<double> f1 = 0.5 / w;
    const std::complex<double> f2 = -0.25 / (w * w * w);
    SJet s;
    s.v = w.imag();
    s.g = {f1.imag(), f1.real()};
    s.h << f2.imag(), f2.real(), f2.real(), -f2.imag();
    return s;
}

// ------------------------------------------------------------------ singular field

SingularField::SingularField(ProblemPtr pb) : pb_(std::move(pb)) {}

SingularField::Frame SingularField::raw_frame(double t) const {
    const GrowthState g = pb_->law.eval_unchecked(t);
    const CurvePoint c = pb_->path->eval(g.s);
    const Mat2 Q = spd_sqrt(pb_->A->eval(c.p)).inv_half;
    const Vec2 a1 = Q * c.d1;
    const double h = a1.norm();
    const Vec2 u1 = a1 / h;
    Frame f;
    f.t = t;
    f.s = g.s;
    f.v = h * g.sd;
    if (!(f.v < 1)) throw ValidationError("transported speed reaches 1");
    f.alpha = std::sqrt(1 - f.v * f.v);
    Mat2 R;
    R.row(0) = u1.transpose();
    R.row(1) = rot90(u1).transpose();
    f.M = Vec2(1 / f.alpha, 1).asDiagonal() * R * Q;
    f.r = c.p;
    f.rdot = c.d1 * g.sd;
    return f;
}

SingularField::Frame SingularField::frame(double t) const {
    Frame f = raw_frame(t);
    const double h = 1e-4 * std::max(1.0, pb_->T());
    f.Mdot = (8 * (raw_frame(t + h).M - raw_frame(t - h).M) - (raw_frame(t + 2 * h).M - raw_frame(t - 2 * h).M)) / (12 * h);
    return f;
}

double SingularField::crack_angle(const Frame& f, double rho) const {
    if (pb_->path->is_straight()) return std::numbers::pi;
    const CrackPath& P = *pb_->path;
    auto point = [&](double sig) { return Vec2(f.M * (P.eval(sig).p - f.r)); };
    double sig;
    if (point(0).norm() <= rho) {
        sig = 0;
    } else {
        sig = std::max(0.0, f.s - rho / (f.M * P.eval(f.s).d1).norm());
        for (int it = 0; it < 50; ++it) {
            const CurvePoint c = P.eval(sig);
            const Vec2 yt = f.M * (c.p - f.r);
            const double rr = yt.norm();
            const double dr = yt.dot(f.M * c.d1) / rr;
            if (!(std::abs(dr) > 0)) break;
            const double step = (rr - rho) / dr;
            sig = std::clamp(sig - step, 0.0, f.s);
            if (std::abs(step) <= 1e-15 * (1 + f.s)) break;
        }
    }
    const Vec2 yt = point(sig);
    double phi = std::atan2(yt.y(), yt.x());
    if (phi < 0) phi += 2 * std::numbers::pi;
    return phi;
}

SJet SingularField::eval(const Frame& f, const Vec2& x) const {
    const Vec2 yt = f.M * (x - f.r);
    const double rho = yt.norm();
    if (!(rho > 0)) throw SingularPointError("singular field evaluated at the tip");
    const double pc = crack_angle(f, rho);
    double th = std::atan2(yt.y(), yt.x());
    while (th > pc) th -= 2 * std::numbers::pi;
    while (th <= pc - 2 * std::numbers::pi) th += 2 * std::numbers::pi;
    const double sq = std::sqrt(rho);
    const double s1 = std::sin(th / 2), c1 = std::cos(th / 2);
    const double s3 = std::sin(1.5 * th), c3 = std::cos(1.5 * th);
    const double q = 0.25 / (rho * sq);
    SJet r;
    r.v = sq * s1;
    const Vec2 g(-s1 / (2 * sq), c1 / (2 * sq));
    Mat2 H;
    H << q * s3, -q * c3, -q * c3, -q * s3;
    r.g = f.M.transpose() * g;
    r.h = f.M.transpose() * H * f.M;
    return r;
}

SJet SingularField::eval(double t, const Vec2& x) const { return eval(frame(t), x); }

double SingularField::time_derivative(double t, const Vec2& x) const {
    const Frame f = frame(t);
    const SJet s = eval(f, x);
    // gradient in the tip coordinates: M^{-T} grad_x
    const Vec2 gy = f.M.transpose().inverse() * s.g;
    return gy.dot(f.Mdot * (x - f.r) - f.M * f.rdot);
}

double SingularField::lip_jump(double t, double back) const {
    const Frame f = frame(t);
    const Vec2 yt = f.M * (pb_->path->eval(f.s - back).p - f.r);
    double phi = pb_->path->is_straight() ? std::numbers::pi : std::atan2(yt.y(), yt.x());
    if (phi < 0) phi += 2 * std::numbers::pi;
    return 2 * std::sqrt(yt.norm()) * std::sin(phi / 2);
}

Vec2 SingularField::anchor(double t) const {
    const Frame f = frame(t);
    return f.r + f.alpha * pb_->path->eval(f.s).d1;
}

// ------------------------------------------------------------------ k law

KLaw KLaw::constant(double k0) {
    KLaw k;
    k.mode_ = Mode::Constant;
    k.k0_ = k0;
    return k;
}

KLaw KLaw::griffith(ProblemPtr pb) {
    KLaw k;
    k.mode_ = Mode::Griffith;
    k.pb_ = std::move(pb);
    return k;
}

KLaw KLaw::polynomial(std::vector<double> coeffs) {
    KLaw k;
    k.mode_ = Mode::Polynomial;
    k.c_ = std::move(coeffs);
    return k;
}

std::string KLaw::name() const {
    switch (mode_) {
        case Mode::Constant: return "constant";
        case Mode::Griffith: return "griffith";
        default: return "custom";
    }
}

KJet KLaw::eval(double t) const {
    KJet r;
    switch (mode_) {
        case Mode::Constant:
            r.k = k0_;
            return r;
        case Mode::Polynomial: {
            double p = 0, d1 = 0, d2 = 0;
            for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i) {
                d2 = d2 * t + d1;
                d1 = d1 * t + p;
                p = p * t + c_[i];
            }
            return {p, d1, 2 * d2};
        }
        case Mode::Griffith: {
            auto kf = [&](double s) {
                const double tt = std::clamp(s, 0.0, pb_->T());
                return 2 / std::sqrt(std::numbers::pi * a_factor(tt, *pb_->path, pb_->law, *pb_->A));
            };
            const double h = 1e-4 * std::max(1.0, pb_->T());
            // shift the stencil inside [0, T]; the derivatives are those at the stencil centre
            // up to O(h)
            const double c = std::clamp(t, h, pb_->T() - h);
            const double k0 = kf(t), kc = kf(c), kp = kf(c + h), km = kf(c - h);
            const double d1 = (kp - km) / (2 * h), d2 = (kp - 2 * kc + km) / (h * h);
            return {k0, d1 + (t - c) * d2, d2};
        }
    }
    return r;
}

// ------------------------------------------------------------------ MMS

MmsField::MmsField(std::shared_ptr<const Pipeline> pl, KLaw k, double xi_eps)
    : pl_(std::move(pl)), k_(std::move(k)), xi_{xi_eps} {
    if (!(xi_eps > 0)) throw ParameterError("xi cutoff size must be positive");
}

MmsSample MmsField::eval(double t, const Vec2& x) const { return eval(pl_->window(t), t, x); }

MmsSample MmsField::eval(const ChartWindow& w, double t, const Vec2& x) const {
    const Jet j = w.phi(t, x);
    MmsSample s;
    if (xi_.vanishes(j.y) || (j.y.x() == 0 && j.y.y() == 0)) return s;
    const ScalarJet xi = xi_.eval(j.y);
    const SJet S = S_eval(j.y);
    const double F = xi.v * S.v;
    const Vec2 gF = S.v * xi.g + xi.v * S.g;
    const Mat2 hF = S.v * xi.h + xi.g * S.g.transpose() + S.g * xi.g.transpose() + xi.v * S.h;
    const KJet k = k_.eval(t);
    const Problem& P = pl_->problem();
    const Mat2 A = P.A->eval(x);
    const auto gA = P.A->grad(x);
    s.u = k.k * F;
    s.ut = k.kd * F + k.k * gF.dot(j.yt);
    s.utt = k.kdd * F + 2 * k.kd * gF.dot(j.yt) + k.k * (j.yt.dot(hF * j.yt) + gF.dot(j.ytt));
    const Vec2 g = j.J.transpose() * gF;
    s.grad = k.k * g;
    Mat2 hx = j.J.transpose() * hF * j.J + gF(0) * j.H[0] + gF(1) * j.H[1];
    double div = A.cwiseProduct(hx).sum();
    for (int i = 0; i < 2; ++i) div += gA[i].row(i).dot(g);
    s.div = k.k * div;
    return s;
}

double MmsField::support_radius(double t) const { return support_radius(pl_->window(t), t); }

double MmsField::support_radius(const ChartWindow& w, double t) const {
    const Vec2 r = pl_->problem().tip(t);
    double R = 0;
    const double e = xi_.eps;
    for (int i = 0; i < 64; ++i) {
        const double u = -1 + 2.0 * (i % 16) / 16;
        Vec2 y;
        switch (i / 16) {
            case 0: y = {u * e, -e}; break;
            case 1: y = {e, u * e}; break;
            case 2: y = {-u * e, e}; break;
            default: y = {-e, -u * e}; break;
        }
        R = std::max(R, (w.phi_inverse(t, y) - r).norm());
    }
    return 1.02 * R;
}

// ------------------------------------------------------------------ w

WSample w_eval(const Pipeline& pl, const SingularField& sf, double t, const Vec2& x) {
    const Jet j = pl.phi(t, x);
    const SJet s = S_eval(j.y);
    const SJet h = sf.eval(t, x);
    WSample w;
    w.value = s.v - h.v;
    w.grad = j.J.transpose() * s.g - h.g;
    w.hess = j.J.transpose() * s.h * j.J + s.g(0) * j.H[0] + s.g(1) * j.H[1] - h.h;
    return w;
}

namespace {
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(std::max(y[i], 1e-300));
        sx += a, sy += b, sxx += a * a, sxy += a * b;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, std::exp((sy - slope * sx) / n)};
}
}  // namespace

WBoundAudit w_bound_audit(const Pipeline& pl, double t, double r_min, double r_max, int nr, int nth) {
    const Problem& P = pl.problem();
    SingularField sf(pl.problem_ptr());
    const CurvePoint c = P.tip_frame(t);
    const double back = std::atan2(-c.d1.y(), -c.d1.x());
    WBoundAudit au;
    for (int i = 0; i < nr; ++i) {
        const double r = r_min * std::pow(r_max / r_min, nr == 1 ? 0.0 : double(i) / (nr - 1));
        double mh = 0, mv = 0;
        for (int k = 0; k < nth; ++k) {
            const double th = back + std::numbers::pi * (0.1 + 1.8 * k / (nth - 1));
            const WSample w = w_eval(pl, sf, t, c.p + r * Vec2(std::cos(th), std::sin(th)));
            mh = std::max(mh, w.hess.norm());
            mv = std::max(mv, std::abs(w.value));
        }
        au.radius.push_back(r);
        au.max_hess.push_back(mh);
        au.max_value.push_back(mv);
    }
    std::tie(au.hess_exponent, au.hess_constant) = loglog_fit(au.radius, au.max_hess);
    au.value_exponent = loglog_fit(au.radius, au.max_value).first;
    return au;
}

}  // namespace crackflux
