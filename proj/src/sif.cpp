#include "crackflux/sif.hpp"

#include "crackflux/quad.hpp"
#include "crackflux/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace crackflux {

namespace {

// error_bar below is heuristic: the largest change of k caused by a remainder of the size of the
// fit residual (Cauchy-Schwarz in the weighted inner product), not a statistical interval.
struct LsqResult {
    Eigen::VectorXd coef;
    Eigen::VectorXd cov_diag;  // diagonal of (B^T B)^{-1}
    double condition = 0, rss = 0;
};

// Least squares with column equilibration; the condition number is that of the normal equations.
LsqResult weighted_lsq(Eigen::MatrixXd B, Eigen::VectorXd y, double max_condition) {
    const Eigen::Index m = B.cols();
    Eigen::VectorXd scale(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double n = B.col(j).norm();
        if (!(n > 0) || !std::isfinite(n)) throw FitError("least squares: basis column vanishes on the samples");
        scale(j) = n;
        B.col(j) /= n;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    LsqResult r;
    r.condition = sv(m - 1) > 0 ? std::pow(sv(0) / sv(m - 1), 2) : INFINITY;
    if (!(r.condition <= max_condition))
        throw FitError("least squares: normal equations ill-conditioned (condition " + std::to_string(r.condition) +
                       "); widen the fit window");
    Eigen::VectorXd c = svd.solve(y);
    r.rss = (B * c - y).squaredNorm();
    const Eigen::MatrixXd V = svd.matrixV();
    r.cov_diag.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double s = 0;
        for (Eigen::Index i = 0; i < m; ++i) s += std::pow(V(j, i) / sv(i), 2);
        r.cov_diag(j) = s / (scale(j) * scale(j));
    }
    r.coef = c.cwiseQuotient(scale);
    return r;
}

void check_window(double a, double b, const char* what) {
    if (!(a > 0) || !(b > a)) throw ParameterError(std::string(what) + ": need 0 < first radius < second radius");
}

}  // namespace

std::pair<double, double> default_sif_window(const Problem& pb) {
    const double d = pb.domain.diameter();
    return {1e-3 * d, 1e-2 * d};
}

SifEstimate extract_sif_jump(const ScalarField& u, const SingularField& sf, double t, double s1, double s2,
                             const SifOptions& opt) {
    check_window(s1, s2, "extract_sif_jump");
    if (opt.n_jump < 3) throw ParameterError("extract_sif_jump: need at least 3 stations");
    const Problem& pb = sf.problem();
    const double s = pb.law.eval(t).s;
    if (s2 >= s) throw ParameterError("extract_sif_jump: window reaches the start of the crack");
    const double kap = pb.path->max_curvature();
    if (kap > 0 && s2 * kap >= 1) throw ParameterError("extract_sif_jump: window exceeds the curvature radius");

    const int n = opt.n_jump;
    Eigen::MatrixXd B(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double sig = s1 * std::pow(s2 / s1, double(i) / (n - 1));
        const CurvePoint c = pb.path->eval(s - sig);
        const Vec2 nu = c.normal().normalized();
        const double h = opt.lip_offset * sig;
        const double jump = u(c.p + h * nu) - u(c.p - h * nu);
        const double J = sf.lip_jump(t, sig);
        if (!(std::abs(J) > 0)) throw FitError("extract_sif_jump: singular lip jump vanishes");
        B(i, 0) = 1;
        B(i, 1) = sig;
        y(i) = jump / J;
    }
    const LsqResult r = weighted_lsq(B, y, opt.max_condition);
    SifEstimate e;
    e.k = r.coef(0);
    e.correction = r.coef(1) / (e.k != 0 ? e.k : 1);
    e.residual = std::sqrt(r.rss / n);
    e.error_bar = std::sqrt(r.rss * r.cov_diag(0));
    e.rho1 = s1;
    e.rho2 = s2;
    e.condition = r.condition;
    e.samples = n;
    return e;
}

SingularBasis hat_basis(const SingularField& sf, double t) {
    const SingularField::Frame f = sf.frame(t);
    return [&sf, f](const Vec2& x) { return sf.eval(f, x).v; };
}

SingularBasis chart_basis(std::shared_ptr<const Pipeline> pl, double t) {
    return [pl = std::move(pl), t](const Vec2& x) { return S_eval(pl->phi(t, x).y).v; };
}

SifEstimate extract_sif_projection(const ScalarField& u, const SingularField& sf, double t, double rho1, double rho2,
                                   const SifOptions& opt, const SingularBasis& basis) {
    check_window(rho1, rho2, "extract_sif_projection");
    const Problem& pb = sf.problem();
    const Vec2 tip = pb.tip(t);
    const double s = pb.law.eval(t).s;
    if (rho2 >= s) throw ParameterError("extract_sif_projection: annulus reaches the start of the crack");
    if (rho2 >= pb.domain.boundary_distance(tip))
        throw ParameterError("extract_sif_projection: annulus leaves the domain");
    const SingularBasis S = basis ? basis : hat_basis(sf, t);

    const GaussRule& gr = gauss_legendre(opt.n_radial);
    const GaussRule& ga = gauss_legendre(opt.n_angular);
    const int nr = opt.n_radial * opt.radial_panels, na = opt.n_angular * opt.angular_panels;
    Eigen::MatrixXd B(nr * na, 4);
    Eigen::VectorXd y(nr * na);
    Eigen::Index row = 0;
    double wsum = 0;
    // radial panels are geometric in rho
    const double q = std::pow(rho2 / rho1, 1.0 / opt.radial_panels);
    for (int p = 0; p < opt.radial_panels; ++p) {
        const double a = rho1 * std::pow(q, p), b = a * q;
        for (int i = 0; i < opt.n_radial; ++i) {
            const double rho = 0.5 * (a + b) + 0.5 * (b - a) * gr.x[i];
            const double wr = 0.5 * (b - a) * gr.w[i] * rho;
            const double th0 = crack_cut_angle(pb, t, rho);
            const double hp = 2 * std::numbers::pi / opt.angular_panels;
            for (int ap = 0; ap < opt.angular_panels; ++ap) {
                for (int j = 0; j < opt.n_angular; ++j) {
                    const double th = th0 + hp * (ap + 0.5 + 0.5 * ga.x[j]);
                    const double w = wr * 0.5 * hp * ga.w[j];
                    const Vec2 d(rho * std::cos(th), rho * std::sin(th));
                    const double sw = std::sqrt(w);
                    B.row(row) << sw, sw * d.x(), sw * d.y(), sw * S(tip + d);
                    y(row) = sw * u(tip + d);
                    wsum += w;
                    ++row;
                }
            }
        }
    }
    const LsqResult r = weighted_lsq(B, y, opt.max_condition);
    SifEstimate e;
    e.k = r.coef(3);
    e.residual = std::sqrt(r.rss / wsum);
    e.error_bar = std::sqrt(r.rss * r.cov_diag(3));
    e.rho1 = rho1;
    e.rho2 = rho2;
    e.condition = r.condition;
    e.samples = int(row);
    return e;
}

InvarianceReport invariance_audit(const ScalarField& u, const SingularField& sf, double t,
                                  const std::vector<SifVariant>& variants, double fit_tol, const SifOptions& opt) {
    if (variants.size() < 2) throw ParameterError("invariance_audit: need at least two variants");
    const auto def = default_sif_window(sf.problem());
    InvarianceReport rep;
    double kmin = INFINITY, kmax = -INFINITY, kabs = 0, ksum = 0;
    for (const SifVariant& v : variants) {
        const double r1 = v.rho2 > 0 ? v.rho1 : def.first, r2 = v.rho2 > 0 ? v.rho2 : def.second;
        const SingularBasis b = v.pipeline ? chart_basis(v.pipeline, t) : SingularBasis{};
        rep.names.push_back(v.name);
        rep.projection.push_back(extract_sif_projection(u, sf, t, r1, r2, opt, b));
        const double k = rep.projection.back().k;
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
        kabs = std::max(kabs, std::abs(k));
        ksum += k;
    }
    const SifVariant& v0 = variants.front();
    rep.jump = extract_sif_jump(u, sf, t, v0.rho2 > 0 ? v0.rho1 : def.first, v0.rho2 > 0 ? v0.rho2 : def.second, opt);
    rep.spread = kmax - kmin;
    rep.cross = std::abs(rep.jump.k - ksum / double(variants.size()));
    rep.tolerance = 2 * fit_tol * std::max(kabs, std::abs(rep.jump.k));
    rep.pass = rep.spread <= rep.tolerance && rep.cross <= rep.tolerance;
    return rep;
}

SifTrace sif_trace(const FieldAtTime& u, const SingularField& sf, const std::vector<double>& times, double rho1,
                   double rho2, const SifOptions& opt, const Pipeline* windows) {
    if (rho2 <= 0) std::tie(rho1, rho2) = default_sif_window(sf.problem());
    SifTrace tr;
    for (double t : times) {
        const ScalarField f = u(t);
        tr.t.push_back(t);
        tr.jump.push_back(extract_sif_jump(f, sf, t, rho1, rho2, opt));
        tr.projection.push_back(extract_sif_projection(f, sf, t, rho1, rho2, opt));
        const double kp = tr.projection.back().k;
        tr.max_disagreement =
            std::max(tr.max_disagreement, std::abs(tr.jump.back().k - kp) / std::max(1.0, std::abs(kp)));
    }
    if (windows) {
        const auto& ws = windows->windows();
        const double tau = 1e-7 * std::max(1.0, sf.problem().T());
        for (std::size_t i = 1; i < ws.size(); ++i) {
            const double tb = ws[i].t0();
            const double kl = extract_sif_projection(u(tb - tau), sf, tb - tau, rho1, rho2, opt).k;
            const double kr = extract_sif_projection(u(tb + tau), sf, tb + tau, rho1, rho2, opt).k;
            tr.max_window_jump = std::max(tr.max_window_jump, std::abs(kr - kl));
        }
    }
    return tr;
}

}  // namespace crackflux
