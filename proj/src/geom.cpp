#include "crackflux/geom.hpp"

#include "crackflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crackflux {

CurvePoint CrackPath::at(double sigma) const {
    const double L = length();
    if (!(sigma >= -1e-12 * L && sigma <= L * (1 + 1e-12)))
        throw RangeError("curve parameter " + std::to_string(sigma) + " outside [0, " + std::to_string(L) + "]");
    return eval(std::clamp(sigma, 0.0, L));
}

double CrackPath::project(const Vec2& x, double seed, double window) const {
    const double lo = seed - window, hi = seed + window;
    auto newton = [&](double s) -> std::pair<bool, double> {
        for (int it = 0; it < 40; ++it) {
            const CurvePoint c = eval(s);
            const Vec2 d = x - c.p;
            const double f = d.dot(c.d1);
            double fp = -c.d1.squaredNorm() + d.dot(c.d2);
            if (fp > -1e-3) fp = -1;  // keep moving downhill on the squared distance
            double step = -f / fp;
            step = std::clamp(step, -0.25 * window, 0.25 * window);
            s = std::clamp(s + step, lo, hi);
            if (std::abs(step) <= 1e-15 * (1 + std::abs(s))) return {true, s};
        }
        return {false, s};
    };
    auto [ok, s] = newton(seed);
    if (ok) return s;
    double best = seed, bd = 1e300;
    for (int i = 0; i <= 128; ++i) {
        const double q = lo + (hi - lo) * i / 128.0;
        const double d = (eval(q).p - x).squaredNorm();
        if (d < bd) bd = d, best = q;
    }
    return newton(best).second;
}

// ---------------------------------------------------------------- segment

SegmentPath::SegmentPath(Vec2 start, Vec2 direction, double length) : a_(start), len_(length) {
    if (!(length > 0)) throw ParameterError("segment length must be positive");
    const double n = direction.norm();
    if (!(n > 0)) throw ParameterError("segment direction must be nonzero");
    e_ = direction / n;
}

CurvePoint SegmentPath::eval(double sigma) const {
    return {a_ + sigma * e_, e_, Vec2::Zero(), Vec2::Zero()};
}

double SegmentPath::project(const Vec2& x, double, double) const { return (x - a_).dot(e_); }

// ---------------------------------------------------------------- arc

ArcPath::ArcPath(Vec2 center, double radius, double start_angle, bool ccw, double length)
    : c_(center), R_(radius), phi0_(start_angle), sgn_(ccw ? 1.0 : -1.0), len_(length) {
    if (!(radius > 0) || !(length > 0)) throw ParameterError("arc radius and length must be positive");
    if (length >= 2 * std::numbers::pi * radius) throw ParameterError("arc length must be below one full turn");
}

CurvePoint ArcPath::eval(double sigma) const {
    const double phi = phi0_ + sgn_ * sigma / R_;
    const Vec2 e(std::cos(phi), std::sin(phi));
    const Vec2 t = sgn_ * rot90(e);
    return {c_ + R_ * e, t, -e / R_, -t / (R_ * R_)};
}

double ArcPath::project(const Vec2& x, double seed, double) const {
    const Vec2 d = x - c_;
    const double phi_seed = phi0_ + sgn_ * seed / R_;
    double phi = std::atan2(d.y(), d.x());
    phi += 2 * std::numbers::pi * std::round((phi_seed - phi) / (2 * std::numbers::pi));
    return sgn_ * (phi - phi0_) * R_;
}

// ---------------------------------------------------------------- spline

namespace {

struct Lin {
    double c = 0, dj = 0, dj1 = 0, ej = 0, ej1 = 0;
    Lin operator+(const Lin& o) const { return {c + o.c, dj + o.dj, dj1 + o.dj1, ej + o.ej, ej1 + o.ej1}; }
    Lin operator*(double s) const { return {c * s, dj * s, dj1 * s, ej * s, ej1 * s}; }
};

// Quintic Hermite coefficients a3, a4, a5 on tau in [0,1] as linear forms in (d_j, d_j+1, e_j, e_j+1).
void hermite_high(double delta, double h, Lin& a3, Lin& a4, Lin& a5) {
    const double h2 = h * h;
    a3 = {10 * delta, -6 * h, -4 * h, -1.5 * h2, 0.5 * h2};
    a4 = {-15 * delta, 8 * h, 7 * h, 1.5 * h2, -h2};
    a5 = {6 * delta, -3 * h, -3 * h, -0.5 * h2, 0.5 * h2};
}

// Derivatives (order 1, 2) at the first point of a polynomial fit through up to six samples.
std::pair<double, double> end_derivatives(const std::vector<double>& u, const std::vector<double>& y, bool at_end) {
    const int n = static_cast<int>(u.size());
    const int m = std::min(6, n);
    Eigen::MatrixXd V(m, m);
    Eigen::VectorXd rhs(m);
    const double u0 = at_end ? u[n - 1] : u[0];
    for (int i = 0; i < m; ++i) {
        const int k = at_end ? n - 1 - i : i;
        double p = 1;
        for (int j = 0; j < m; ++j) V(i, j) = p, p *= (u[k] - u0);
        rhs(i) = y[k];
    }
    const Eigen::VectorXd b = V.fullPivLu().solve(rhs);
    return {m > 1 ? b(1) : 0.0, m > 2 ? 2 * b(2) : 0.0};
}

void solve_quintic(const std::vector<double>& u, const std::vector<double>& y, double d0, double e0, double dN,
                   double eN, std::vector<double>& d, std::vector<double>& e) {
    const int N = static_cast<int>(u.size()) - 1;
    const int n = 2 * (N + 1);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    int row = 0;
    auto fix = [&](int idx, double val) {
        M(row, idx) = 1;
        r(row++) = val;
    };
    fix(0, d0);
    fix(1, e0);
    fix(2 * N, dN);
    fix(2 * N + 1, eN);
    auto put = [&](const Lin& l, int j, double s) {
        M(row, 2 * j) += s * l.dj;
        M(row, 2 * j + 2) += s * l.dj1;
        M(row, 2 * j + 1) += s * l.ej;
        M(row, 2 * j + 3) += s * l.ej1;
        r(row) -= s * l.c;
    };
    for (int i = 1; i < N; ++i) {
        const double hl = u[i] - u[i - 1], hr = u[i + 1] - u[i];
        Lin l3, l4, l5, r3, r4, r5;
        hermite_high(y[i] - y[i - 1], hl, l3, l4, l5);
        hermite_high(y[i + 1] - y[i], hr, r3, r4, r5);
        // third derivative continuity
        put(l3 * 6 + l4 * 24 + l5 * 60, i - 1, 1 / std::pow(hl, 3));
        put(r3 * 6, i, -1 / std::pow(hr, 3));
        ++row;
        // fourth derivative continuity
        put(l4 * 24 + l5 * 120, i - 1, 1 / std::pow(hl, 4));
        put(r4 * 24, i, -1 / std::pow(hr, 4));
        ++row;
    }
    const Eigen::VectorXd z = M.partialPivLu().solve(r);
    d.resize(N + 1);
    e.resize(N + 1);
    for (int i = 0; i <= N; ++i) d[i] = z(2 * i), e[i] = z(2 * i + 1);
}

}  // namespace

SplinePath::SplinePath(std::vector<Vec2> pts, Vec2 t0, Vec2 t1) {
    const int N = static_cast<int>(pts.size()) - 1;
    if (N < 1) throw ParameterError("spline path needs at least two points");
    u_.assign(N + 1, 0.0);
    for (int i = 1; i <= N; ++i) {
        const double h = (pts[i] - pts[i - 1]).norm();
        if (!(h > 0)) throw ParameterError("spline path has repeated points");
        u_[i] = u_[i - 1] + h;
    }
    cx_.resize(N);
    cy_.resize(N);
    for (int c = 0; c < 2; ++c) {
        std::vector<double> y(N + 1);
        for (int i = 0; i <= N; ++i) y[i] = pts[i](c);
        auto [d0, e0] = end_derivatives(u_, y, false);
        auto [dN, eN] = end_derivatives(u_, y, true);
        if (t0.norm() > 0) d0 = t0.normalized()(c);
        if (t1.norm() > 0) dN = t1.normalized()(c);
        std::vector<double> d, e;
        solve_quintic(u_, y, d0, e0, dN, eN, d, e);
        auto& cc = c == 0 ? cx_ : cy_;
        for (int j = 0; j < N; ++j) {
            const double h = u_[j + 1] - u_[j];
            Lin a3, a4, a5;
            hermite_high(y[j + 1] - y[j], h, a3, a4, a5);
            auto ev = [&](const Lin& l) { return l.c + l.dj * d[j] + l.dj1 * d[j + 1] + l.ej * e[j] + l.ej1 * e[j + 1]; };
            cc[j].a[0] = y[j];
            cc[j].a[1] = h * d[j];
            cc[j].a[2] = 0.5 * h * h * e[j];
            cc[j].a[3] = ev(a3);
            cc[j].a[4] = ev(a4);
            cc[j].a[5] = ev(a5);
        }
    }
    cum_.assign(N + 1, 0.0);
    for (int j = 0; j < N; ++j) {
        double s = 0;
        const double h = u_[j + 1] - u_[j];
        for (int k = 0; k < 4; ++k)
            s += gauss_integrate([&](double u) { return speed(u); }, u_[j] + h * k / 4, u_[j] + h * (k + 1) / 4, 24);
        cum_[j + 1] = cum_[j] + s;
    }
    len_ = cum_[N];
    for (int i = 0; i <= 1000; ++i) kmax_ = std::max(kmax_, eval(len_ * i / 1000.0).d2.norm());
}

int SplinePath::segment_of_u(double u) const {
    const int N = static_cast<int>(cx_.size());
    const auto it = std::upper_bound(u_.begin(), u_.end(), u);
    return std::clamp(static_cast<int>(it - u_.begin()) - 1, 0, N - 1);
}

void SplinePath::eval_u(double u, Vec2 out[4]) const {
    const int j = segment_of_u(u);
    const double h = u_[j + 1] - u_[j];
    const double tau = (u - u_[j]) / h;
    for (int c = 0; c < 2; ++c) {
        const double* a = (c == 0 ? cx_ : cy_)[j].a;
        const double p0 = a[0] + tau * (a[1] + tau * (a[2] + tau * (a[3] + tau * (a[4] + tau * a[5]))));
        const double p1 = a[1] + tau * (2 * a[2] + tau * (3 * a[3] + tau * (4 * a[4] + tau * 5 * a[5])));
        const double p2 = 2 * a[2] + tau * (6 * a[3] + tau * (12 * a[4] + tau * 20 * a[5]));
        const double p3 = 6 * a[3] + tau * (24 * a[4] + tau * 60 * a[5]);
        out[0](c) = p0;
        out[1](c) = p1 / h;
        out[2](c) = p2 / (h * h);
        out[3](c) = p3 / (h * h * h);
    }
}

double SplinePath::speed(double u) const {
    Vec2 d[4];
    eval_u(u, d);
    return d[1].norm();
}

double SplinePath::arc_from_knot(int seg, double u) const {
    return gauss_integrate([&](double v) { return speed(v); }, u_[seg], u, 24);
}

double SplinePath::u_of_sigma(double sigma) const {
    const int N = static_cast<int>(cx_.size());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), sigma);
    const int j = std::clamp(static_cast<int>(it - cum_.begin()) - 1, 0, N - 1);
    const double h = u_[j + 1] - u_[j];
    const double target = sigma - cum_[j];
    double u = u_[j] + h * target / (cum_[j + 1] - cum_[j]);
    for (int k = 0; k < 30; ++k) {
        const double step = (arc_from_knot(j, u) - target) / speed(u);
        u -= step;
        if (std::abs(step) <= 1e-16 * (1 + std::abs(u))) break;
    }
    return u;
}

CurvePoint SplinePath::eval(double sigma) const {
    const double u = u_of_sigma(sigma);
    Vec2 x[4];
    eval_u(u, x);
    const double v = x[1].norm();
    const double q = x[1].dot(x[2]);
    const double qu = x[2].squaredNorm() + x[1].dot(x[3]);
    const double u1 = 1 / v;
    const double u2 = -q / std::pow(v, 4);
    const double u3 = -qu / std::pow(v, 5) + 4 * q * q / std::pow(v, 7);
    CurvePoint c;
    c.p = x[0];
    c.d1 = x[1] * u1;
    c.d2 = x[2] * u1 * u1 + x[1] * u2;
    c.d3 = x[3] * u1 * u1 * u1 + 3 * x[2] * u1 * u2 + x[1] * u3;
    return c;
}

// ---------------------------------------------------------------- domain

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

Domain::Domain(std::vector<Vec2> polygon, std::vector<int> dirichlet) : v_(std::move(polygon)), dirichlet_(std::move(dirichlet)) {
    if (v_.size() < 3) throw ParameterError("domain polygon needs at least three vertices");
    double a = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) a += cross(v_[i], v_[(i + 1) % v_.size()]);
    if (a < 0) {
        // Store counter-clockwise; edge i keeps joining the same two vertices.
        const int n = static_cast<int>(v_.size());
        std::reverse(v_.begin(), v_.end());
        for (int& e : dirichlet_) e = (2 * n - 2 - e) % n;
    }
    lo_ = hi_ = v_[0];
    for (const Vec2& p : v_) lo_ = lo_.cwiseMin(p), hi_ = hi_.cwiseMax(p);
    for (int e : dirichlet_)
        if (e < 0 || e >= static_cast<int>(v_.size())) throw ParameterError("Dirichlet edge index out of range");
}

bool Domain::contains(const Vec2& x) const {
    bool in = false;
    const std::size_t n = v_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 &a = v_[i], &b = v_[j];
        if ((a.y() > x.y()) != (b.y() > x.y())) {
            const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (x.x() < xc) in = !in;
        }
    }
    return in;
}

double Domain::boundary_distance(const Vec2& x) const {
    double best = 1e300;
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 &a = v_[i], &b = v_[(i + 1) % n];
        const Vec2 e = b - a;
        const double t = std::clamp((x - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (a + t * e - x).norm());
    }
    return best;
}

double Domain::area() const {
    double a = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) a += cross(v_[i], v_[(i + 1) % v_.size()]);
    return 0.5 * a;
}

double Domain::diameter() const {
    double d = 0;
    for (const Vec2& p : v_)
        for (const Vec2& q : v_) d = std::max(d, (p - q).norm());
    return d;
}

bool Domain::is_simple() const {
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(v_[i], v_[(i + 1) % n], v_[j], v_[(j + 1) % n])) return false;
        }
    return area() > 0;
}

// ---------------------------------------------------------------- growth

GrowthLaw::GrowthLaw(std::vector<double> coeffs, double T) : c_(std::move(coeffs)), T_(T) {
    if (c_.empty()) throw ParameterError("growth law needs at least one coefficient");
    if (!(T > 0)) throw ParameterError("final time T must be positive");
}

GrowthState GrowthLaw::eval_unchecked(double t) const {
    double p = 0, d1 = 0, d2 = 0, d3 = 0;
    for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i) {
        d3 = d3 * t + d2;
        d2 = d2 * t + d1;
        d1 = d1 * t + p;
        p = p * t + c_[i];
    }
    GrowthState g{p, d1, 2 * d2, 6 * d3};
    return g;
}

GrowthState GrowthLaw::eval(double t) const {
    if (!(t >= -1e-12 * T_ && t <= T_ * (1 + 1e-12)))
        throw RangeError("time " + std::to_string(t) + " outside [0, " + std::to_string(T_) + "]");
    return eval_unchecked(std::clamp(t, 0.0, T_));
}

double GrowthLaw::max_speed(int samples) const {
    double m = 0;
    for (int i = 0; i < samples; ++i) m = std::max(m, std::abs(eval_unchecked(T_ * i / (samples - 1)).sd));
    return m;
}

}  // namespace crackflux
