#include "crackflux/quad.hpp"

#include "crackflux/cutoff.hpp"
#include "crackflux/parallel.hpp"
#include "crackflux/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <numbers>

namespace crackflux {

namespace {

constexpr double kPi = std::numbers::pi;

// Kronrod 7 nodes on [-1, 1] with the weights of the embedded 3-point Gauss rule (0 elsewhere).
struct GK7 {
    std::array<double, 7> x{}, wk{}, wg{};
    GK7() {
        using K = boost::math::quadrature::gauss_kronrod<double, 7>;
        using G = boost::math::quadrature::gauss<double, 3>;
        const auto& ka = K::abscissa();
        const auto& kw = K::weights();
        const auto& ga = G::abscissa();
        const auto& gw = G::weights();
        int m = 0;
        std::vector<std::pair<double, double>> nodes;
        for (std::size_t i = 0; i < ka.size(); ++i) {
            nodes.push_back({ka[i], kw[i]});
            if (ka[i] != 0) nodes.push_back({-ka[i], kw[i]});
        }
        std::sort(nodes.begin(), nodes.end());
        for (const auto& [a, w] : nodes) {
            x[m] = a;
            wk[m] = w;
            for (std::size_t g = 0; g < ga.size(); ++g)
                if (std::abs(std::abs(a) - ga[g]) < 1e-14) wg[m] = gw[g];
            ++m;
        }
    }
};

const GK7& gk7() {
    static const GK7 r;
    return r;
}

struct Cell {
    int patch = 0;
    double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
    double value = 0, eu = 0, ev = 0;
    bool frozen = false;
    double err() const { return frozen ? 0.0 : eu + ev; }
};

void eval_cell(const Patch& p, const Integrand& f, Cell& c, std::size_t& nev) {
    const GK7& r = gk7();
    const double cu = 0.5 * (c.u0 + c.u1), hu = 0.5 * (c.u1 - c.u0);
    const double cv = 0.5 * (c.v0 + c.v1), hv = 0.5 * (c.v1 - c.v0);
    double kk = 0, gk = 0, kg = 0;
    for (int i = 0; i < 7; ++i) {
        const double u = cu + hu * r.x[i];
        double rk = 0, rg = 0;
        for (int j = 0; j < 7; ++j) {
            const double v = cv + hv * r.x[j];
            Vec2 x;
            double jw = 0;
            if (!p.map(u, v, x, jw) || jw == 0) continue;
            const double val = f(x) * jw;
            ++nev;
            rk += r.wk[j] * val;
            rg += r.wg[j] * val;
        }
        kk += r.wk[i] * rk;
        gk += r.wg[i] * rk;
        kg += r.wk[i] * rg;
    }
    const double s = hu * hv;
    c.value = kk * s;
    c.eu = std::abs(kk - gk) * s;
    c.ev = std::abs(kk - kg) * s;
}

}  // namespace

Patch duffy_patch(const Vec2& a, const Vec2& b, const Vec2& c, std::string tag) {
    Patch p;
    const Vec2 e1 = b - a, e2 = c - b;
    const double det = std::abs(cross(e1, e2));
    p.map = [a, e1, e2, det](double u, double v, Vec2& x, double& jw) {
        x = a + u * (e1 + v * e2);
        jw = u * det;
        return true;
    };
    p.u_breaks = {0, 1};
    p.v_breaks = {0, 1};
    p.tag = std::move(tag);
    return p;
}

Patch polar_patch(const Vec2& c, double r0, double r1, double th0, double th1, std::string tag) {
    Patch p;
    p.map = [c](double r, double th, Vec2& x, double& jw) {
        x = c + r * Vec2(std::cos(th), std::sin(th));
        jw = r;
        return true;
    };
    p.u_breaks = {r0, r1};
    p.v_breaks = {th0, th1};
    p.tag = std::move(tag);
    return p;
}

QuadResult integrate_patches(const std::vector<Patch>& patches, const Integrand& f, const QuadOptions& opt) {
    std::vector<Cell> cells;
    for (int k = 0; k < static_cast<int>(patches.size()); ++k) {
        const Patch& p = patches[k];
        for (std::size_t i = 0; i + 1 < p.u_breaks.size(); ++i)
            for (std::size_t j = 0; j + 1 < p.v_breaks.size(); ++j) {
                Cell c;
                c.patch = k;
                c.u0 = p.u_breaks[i], c.u1 = p.u_breaks[i + 1];
                c.v0 = p.v_breaks[j], c.v1 = p.v_breaks[j + 1];
                if (c.u1 > c.u0 && c.v1 > c.v0) cells.push_back(c);
            }
    }
    std::vector<std::size_t> nev(cells.size(), 0);
    parallel_for(cells.size(), [&](std::size_t i) { eval_cell(patches[cells[i].patch], f, cells[i], nev[i]); });
    QuadResult res;
    for (auto n : nev) res.evaluations += n;

    auto total_error = [&] {
        std::vector<double> e(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) e[i] = cells[i].err();
        return pairwise_sum(e);
    };
    auto span = [&](const Cell& c, bool u) {
        const Patch& p = patches[c.patch];
        const auto& b = u ? p.u_breaks : p.v_breaks;
        return b.back() - b.front();
    };

    double E = total_error();
    while (E > opt.tol) {
        if (cells.size() >= opt.max_cells) {
            res.converged = false;
            break;
        }
        std::vector<std::size_t> order(cells.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cells[a].err() > cells[b].err(); });
        std::vector<char> split(cells.size(), 0);
        double acc = 0;
        std::size_t nsplit = 0;
        const std::size_t cap = std::min<std::size_t>(4096, std::max<std::size_t>(1, opt.max_cells - cells.size()) / 3 + 1);
        for (std::size_t i : order) {
            if (cells[i].err() <= 0 || acc >= 0.5 * E || nsplit >= cap) break;
            acc += cells[i].err();
            split[i] = 1;
            ++nsplit;
        }
        if (nsplit == 0) break;

        std::vector<Cell> next;
        next.reserve(cells.size() + 3 * nsplit);
        std::vector<std::size_t> fresh;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const Cell& c = cells[i];
            if (!split[i]) {
                next.push_back(c);
                continue;
            }
            const double m = std::max(c.eu, c.ev);
            bool su = c.eu >= 0.25 * m && (c.u1 - c.u0) > 1e-13 * span(c, true);
            bool sv = c.ev >= 0.25 * m && (c.v1 - c.v0) > 1e-13 * span(c, false);
            if (!su && !sv) {
                su = (c.u1 - c.u0) > 1e-13 * span(c, true);
                sv = (c.v1 - c.v0) > 1e-13 * span(c, false);
            }
            if (!su && !sv) {
                Cell z = c;
                z.frozen = true;
                next.push_back(z);
                continue;
            }
            const double um = 0.5 * (c.u0 + c.u1), vm = 0.5 * (c.v0 + c.v1);
            std::vector<std::array<double, 4>> boxes;
            if (su && sv)
                boxes = {{c.u0, um, c.v0, vm}, {um, c.u1, c.v0, vm}, {c.u0, um, vm, c.v1}, {um, c.u1, vm, c.v1}};
            else if (su)
                boxes = {{c.u0, um, c.v0, c.v1}, {um, c.u1, c.v0, c.v1}};
            else
                boxes = {{c.u0, c.u1, c.v0, vm}, {c.u0, c.u1, vm, c.v1}};
            for (const auto& b : boxes) {
                Cell d;
                d.patch = c.patch;
                d.u0 = b[0], d.u1 = b[1], d.v0 = b[2], d.v1 = b[3];
                fresh.push_back(next.size());
                next.push_back(d);
            }
        }
        std::vector<std::size_t> fn(fresh.size(), 0);
        parallel_for(fresh.size(), [&](std::size_t i) {
            Cell& c = next[fresh[i]];
            eval_cell(patches[c.patch], f, c, fn[i]);
        });
        for (auto n : fn) res.evaluations += n;
        cells.swap(next);
        E = total_error();
    }
    std::vector<double> vals(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) vals[i] = cells[i].value;
    res.value = pairwise_sum(vals);
    res.error = E;
    res.cells = cells.size();
    if (E > opt.tol) res.converged = false;
    if (!res.converged && opt.throw_on_budget && E > 10 * opt.tol)
        throw QuadratureError("cubature budget of " + std::to_string(opt.max_cells) +
                              " cells exhausted with error estimate " + std::to_string(E));
    return res;
}

// ---------------------------------------------------------------- polygons

std::vector<std::array<Vec2, 3>> triangulate(const std::vector<Vec2>& poly_in) {
    std::vector<Vec2> poly = poly_in;
    double a2 = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) a2 += cross(poly[i], poly[(i + 1) % poly.size()]);
    if (a2 < 0) std::reverse(poly.begin(), poly.end());
    std::vector<std::array<Vec2, 3>> tris;
    std::vector<int> idx(poly.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    auto inside = [](const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
        return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
    };
    int guard = 0;
    while (idx.size() > 3 && guard < 100000) {
        ++guard;
        bool clipped = false;
        const std::size_t n = idx.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 &a = poly[idx[(i + n - 1) % n]], &b = poly[idx[i]], &c = poly[idx[(i + 1) % n]];
            const double cr = cross(b - a, c - b);
            if (cr <= 1e-300) {
                if (std::abs(cr) <= 1e-14 * (b - a).norm() * (c - b).norm()) {
                    // collinear vertex: drop it
                    idx.erase(idx.begin() + static_cast<long>(i));
                    clipped = true;
                    break;
                }
                continue;
            }
            bool ear = true;
            for (std::size_t j = 0; j < n && ear; ++j) {
                const int k = idx[j];
                if (k == idx[(i + n - 1) % n] || k == idx[i] || k == idx[(i + 1) % n]) continue;
                if (inside(poly[k], a, b, c)) ear = false;
            }
            if (!ear) continue;
            tris.push_back({a, b, c});
            idx.erase(idx.begin() + static_cast<long>(i));
            clipped = true;
            break;
        }
        if (!clipped) throw GeometryError("polygon triangulation failed (polygon not simple?)");
    }
    if (idx.size() == 3) {
        const Vec2 &a = poly[idx[0]], &b = poly[idx[1]], &c = poly[idx[2]];
        if (std::abs(cross(b - a, c - a)) > 0) tris.push_back({a, b, c});
    }
    return tris;
}

namespace {

std::vector<Patch> polygon_patches(const std::vector<Vec2>& poly, const std::function<double(const Vec2&)>& weight) {
    std::vector<Patch> out;
    if (poly.size() < 3) return out;
    for (const auto& t : triangulate(poly)) {
        Patch p = duffy_patch(t[0], t[1], t[2], "rest");
        if (weight) {
            auto base = p.map;
            p.map = [base, weight](double u, double v, Vec2& x, double& jw) {
                base(u, v, x, jw);
                const double w = weight(x);
                jw *= w;
                return w != 0;
            };
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = a + (b - a) * i / n;
    v.back() = b;
    return v;
}

// Polar cells around c with radius rho = w^2 and angle measured from the cut ray.
Patch slit_polar_patch(const Vec2& c, double R, std::function<double(double)> cut_angle,
                       std::function<double(double)> weight) {
    static std::atomic<std::uint64_t> next_id{1};
    Patch p;
    p.map = [c, cut_angle, weight, id = next_id++](double w, double th, Vec2& x, double& jw) {
        // cells visit all angles of one radius in a row, so cache the cut angle
        thread_local double last_w = -1, last_beta = 0;
        thread_local std::uint64_t last_id = 0;
        const double rho = w * w;
        if (w != last_w || last_id != id) {
            last_beta = cut_angle(rho);
            last_w = w;
            last_id = id;
        }
        const double phi = th + last_beta - kPi;
        x = c + rho * Vec2(std::cos(phi), std::sin(phi));
        jw = 2 * w * w * w;
        if (weight) {
            const double q = weight(rho);
            jw *= q;
            return q != 0;
        }
        return true;
    };
    // geometric rings of ratio 2 in rho
    std::vector<double> wb = {0};
    const double rmin = R * std::pow(2.0, -20);
    for (double r = rmin; r < R * (1 - 1e-12); r *= 2) wb.push_back(std::sqrt(r));
    wb.push_back(std::sqrt(R));
    p.u_breaks = wb;
    p.v_breaks = linspace(-kPi, kPi, 8);
    p.tag = "tip";
    return p;
}

}  // namespace

double crack_cut_angle(const Problem& pb, double t, double rho) {
    const double s = pb.law.eval(t).s;
    const CurvePoint tipc = pb.path->eval(s);
    if (pb.path->is_straight() || rho <= 0) return std::atan2(-tipc.d1.y(), -tipc.d1.x());
    const Vec2 tip = tipc.p;
    auto g = [&](double sig) {
        const CurvePoint c = pb.path->eval(sig);
        const Vec2 d = c.p - tip;
        return std::make_pair(d.squaredNorm() - rho * rho, 2 * d.dot(c.d1));
    };
    double lo = s - 2 * rho, hi = s;
    if (g(lo).first <= 0) {
        // curvature too large for the bracket: scan backwards
        double step = rho;
        while (g(lo).first <= 0 && step < 1e3 * rho) lo -= (step *= 2);
    }
    boost::uintmax_t it = 60;
    const double sig = boost::math::tools::newton_raphson_iterate(g, s - rho, lo, hi, 50, it);
    const Vec2 d = pb.path->eval(sig).p - tip;
    return std::atan2(d.y(), d.x());
}

Patch clip_patch(const Patch& p, const Vec2& n, double c) {
    // Along the monotone direction the map is affine (or monotone) in the parameter, so the kept
    // part is an interval [a, b] found by regula falsi; the parameter is stretched onto it.
    Patch out = p;
    const bool du = p.mono_dir == 0;
    const double lo = du ? p.u_breaks.front() : p.v_breaks.front();
    const double hi = du ? p.u_breaks.back() : p.v_breaks.back();
    auto base = p.map;
    out.map = [base, n, c, du, lo, hi](double u, double v, Vec2& x, double& jw) {
        const double other = du ? v : u;
        auto g = [&](double w) {
            Vec2 y;
            double j;
            if (du)
                base(w, other, y, j);
            else
                base(other, w, y, j);
            return n.dot(y) - c;
        };
        double ga = g(lo), gb = g(hi);
        double a = lo, b = hi;
        if (ga > 0 && gb > 0) {
            x = Vec2::Zero();
            return false;
        }
        if (ga > 0 || gb > 0) {
            // Illinois iteration for the crossing
            double l = lo, r = hi, fl = ga, fr = gb;
            int side = 0;
            double m = l;
            for (int it = 0; it < 100; ++it) {
                m = (l * fr - r * fl) / (fr - fl);
                const double fm = g(m);
                if (fm == 0 || std::abs(r - l) <= 1e-15 * (hi - lo)) break;
                if ((fm > 0) == (fr > 0)) {
                    r = m, fr = fm;
                    if (side == -1) fl /= 2;
                    side = -1;
                } else {
                    l = m, fl = fm;
                    if (side == 1) fr /= 2;
                    side = 1;
                }
                if (std::abs(fm) <= 1e-15 * (std::abs(c) + 1)) break;
            }
            if (ga > 0)
                a = m;
            else
                b = m;
        }
        const double own = du ? u : v;
        const double w = a + (own - lo) / (hi - lo) * (b - a);
        const bool ok = du ? base(w, v, x, jw) : base(u, w, x, jw);
        jw *= (b - a) / (hi - lo);
        return ok && jw != 0;
    };
    return out;
}

SlitQuadrature SlitQuadrature::polygon(const Domain& d) {
    SlitQuadrature q;
    q.patches_ = polygon_patches(d.vertices(), nullptr);
    q.area_ = d.area();
    return q;
}

SlitQuadrature SlitQuadrature::disk(const Vec2& c, double R, std::function<double(double)> cut_angle) {
    if (!(R > 0)) throw ParameterError("disk radius must be positive");
    SlitQuadrature q;
    q.patches_.push_back(slit_polar_patch(c, R, std::move(cut_angle), nullptr));
    q.r_cut_ = R;
    q.area_ = kPi * R * R;
    return q;
}

SlitQuadrature SlitQuadrature::tip_disk(const Problem& pb, double t, double R) {
    const double s = pb.law.eval(t).s;
    if (R >= s) throw GeometryError("tip disk reaches the crack mouth");
    const Problem* P = &pb;
    return disk(pb.tip(t), R, [P, t](double rho) { return crack_cut_angle(*P, t, rho); });
}

SlitQuadrature SlitQuadrature::cracked(const Problem& pb, double t, double r_cut, double band) {
    const double s = pb.law.eval(t).s;
    const Vec2 tip = pb.tip(t);
    const double kap = pb.path->max_curvature();
    const double db = pb.domain.boundary_distance(tip);
    if (r_cut <= 0) {
        r_cut = std::min(0.5 * db, 0.5 * s);
        if (kap > 0) r_cut = std::min(r_cut, 0.25 / kap);
    }
    if (band <= 0) {
        band = 0.25 * r_cut;
        if (kap > 0) band = std::min(band, 0.25 / kap);
    }
    if (r_cut > db) throw GeometryError("tip disk leaves the domain");
    if (band > 0.25 * r_cut * (1 + 1e-12)) throw ParameterError("band must not exceed r_cut / 4");

    SlitQuadrature q;
    q.r_cut_ = r_cut;
    q.band_ = band;
    q.area_ = pb.domain.area();
    const Problem* P = &pb;
    const double rc = r_cut;
    auto chi_d = [tip, rc](const Vec2& x) { return plateau((x - tip).norm(), rc / 2, rc).v; };

    // tip disk
    q.patches_.push_back(slit_polar_patch(
        tip, r_cut, [P, t](double rho) { return crack_cut_angle(*P, t, rho); },
        [rc](double rho) { return plateau(rho, rc / 2, rc).v; }));

    // band on both sides of the crack, extended past the mouth
    const double slo = -2 * band;
    std::vector<double> sb = {slo};
    const int nseg = std::max(2, static_cast<int>(std::ceil(s / (2 * band))));
    for (int i = 0; i <= nseg; ++i) sb.push_back(s * i / nseg);
    const Domain* D = &pb.domain;
    const double del = band;
    const Vec2 mouth = pb.path->eval(0).p;
    Vec2 mouth_n = Vec2::Zero();
    double mouth_c = 0, best = 1e300;
    {
        const auto& V = pb.domain.vertices();  // counterclockwise
        for (std::size_t i = 0; i < V.size(); ++i) {
            const Vec2 &a = V[i], &b = V[(i + 1) % V.size()];
            const Vec2 e = b - a;
            const double u = std::clamp((mouth - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
            const double d = (a + u * e - mouth).norm();
            if (d < best) {
                best = d;
                mouth_n = -rot90(e).normalized();  // outward
                mouth_c = mouth_n.dot(a);
            }
        }
    }
    for (int side : {+1, -1}) {
        Patch p;
        p.map = [P, D, del, side, chi_d](double sig, double tau, Vec2& x, double& jw) {
            const CurvePoint c = P->path->eval(sig);
            const Vec2 n = c.normal();
            const double off = side * tau;
            x = c.p + off * n;
            if (!D->contains(x)) return false;
            const double w = (1 - chi_d(x)) * plateau(tau, del / 2, del).v;
            if (w == 0) return false;
            const double ks = c.d2.dot(n);
            jw = std::abs(1 - ks * off) * w;
            return true;
        };
        p.u_breaks = sb;
        p.v_breaks = {0, del / 2, del};
        p.tag = side > 0 ? "band+" : "band-";
        p.mono_dir = 1;
        // cut the extension past the mouth exactly along the boundary edge it crosses
        q.patches_.push_back(clip_patch(p, mouth_n, mouth_c));
    }

    // remaining polygon, weighted away from the crack
    const int nsamp = 512;
    std::vector<Vec2> poly(nsamp + 1);
    for (int i = 0; i <= nsamp; ++i) poly[i] = pb.path->eval(slo + (s - slo) * i / nsamp).p;
    auto chi_b = [P, poly, slo, s, del, nsamp](const Vec2& x) {
        // coarse nearest polyline vertex, then exact projection
        int best = 0;
        double bd = 1e300;
        for (int i = 0; i <= nsamp; ++i) {
            const double d = (poly[i] - x).squaredNorm();
            if (d < bd) bd = d, best = i;
        }
        const double h = (s - slo) / nsamp;
        if (std::sqrt(bd) > del + h) return 0.0;
        const double sig = P->path->project(x, slo + best * h, 2 * h);
        if (sig <= slo || sig >= s) return 0.0;
        const CurvePoint c = P->path->eval(sig);
        return plateau(std::abs((x - c.p).dot(c.normal())), del / 2, del).v;
    };
    auto rest = polygon_patches(pb.domain.vertices(), [chi_d, chi_b](const Vec2& x) {
        const double a = 1 - chi_d(x);
        if (a == 0) return 0.0;
        return a * (1 - chi_b(x));
    });
    for (auto& p : rest) q.patches_.push_back(std::move(p));
    return q;
}

SlitQuadrature SlitQuadrature::clipped(const Vec2& n, double c) const {
    SlitQuadrature q = *this;
    for (auto& p : q.patches_) p = clip_patch(p, n, c);
    return q;
}

QuadResult integrate_cracked(const Integrand& f, const SlitQuadrature& q, double tol, std::size_t max_cells) {
    QuadOptions o;
    o.tol = tol;
    o.max_cells = max_cells;
    return integrate_patches(q.patches(), f, o);
}

// ---------------------------------------------------------------- half-plane limit lemma

namespace {
// int_0^1 atan(c / s) ds for c > 0
double atan_integral(double c) { return std::atan(c) + 0.5 * c * std::log1p(1 / (c * c)); }

// Duffy triangles covering [xf, 0] x [0, h] (or [0, xf]) from the origin corner.
void corner_rect(std::vector<Patch>& out, const Vec2& o, const Vec2& along, const Vec2& up) {
    if (along.norm() == 0 || up.norm() == 0) return;
    out.push_back(duffy_patch(o, o + along, o + along + up));
    out.push_back(duffy_patch(o, o + along + up, o + up));
}
}  // namespace

double fondlem_theta(double a, double b, double eps) {
    if (!(a < 0 && b > 0)) throw RangeError("fondlem: need a < 0 < b");
    if (!(eps > 0)) throw RangeError("fondlem: eps must be positive");
    return std::abs(kPi - atan_integral(b / eps) - atan_integral(-a / eps));
}

QuadResult fondlem_value(const Integrand& g, double a, double b, double eps, double tol) {
    if (!(a < 0 && b > 0)) throw RangeError("fondlem: need a < 0 < b");
    if (!(eps > 0)) throw RangeError("fondlem: eps must be positive");
    std::vector<Patch> ps;
    corner_rect(ps, {0, 0}, {a, 0}, {0, eps});
    corner_rect(ps, {0, 0}, {b, 0}, {0, eps});
    QuadOptions o;
    o.tol = tol * eps;
    o.max_cells = 400000;
    QuadResult r = integrate_patches(
        ps, [&](const Vec2& x) { return g(x) * x.y() / x.squaredNorm(); }, o);
    r.value /= eps;
    r.error /= eps;
    return r;
}

double fondlem_bound(double g_sup, const std::function<double(double)>& omega, double a, double b, double eps) {
    return g_sup * (2 * std::sqrt(eps) * std::abs(b - a) + fondlem_theta(a, b, eps)) + kPi * omega(std::pow(eps, 0.25));
}

double richardson_limit(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size() || eps.size() < 3) throw FitError("richardson: need at least 3 samples");
    Eigen::MatrixXd M(eps.size(), 3);
    Eigen::VectorXd y(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        M(i, 0) = 1;
        M(i, 1) = std::sqrt(eps[i]);
        M(i, 2) = eps[i];
        y(i) = values[i];
    }
    return M.colPivHouseholderQr().solve(y)(0);
}

FondlemTable fondlem_audit(const Integrand& g, double g_sup, const std::function<double(double)>& omega, double a,
                           double b, const std::vector<double>& eps_seq) {
    FondlemTable tab;
    tab.target = kPi * g({0, 0});
    std::vector<double> vals;
    for (double e : eps_seq) {
        FondlemRow r;
        r.eps = e;
        const QuadResult q = fondlem_value(g, a, b, e);
        r.value = q.value;
        r.error = q.error;
        r.bound = fondlem_bound(g_sup, omega, a, b, e);
        r.deviation = std::abs(r.value - tab.target);
        r.within = r.deviation <= r.bound + r.error;
        tab.all_within = tab.all_within && r.within;
        tab.rows.push_back(r);
        vals.push_back(r.value);
    }
    tab.limit = eps_seq.size() >= 3 ? richardson_limit(eps_seq, vals) : (vals.empty() ? 0 : vals.back());
    return tab;
}

// ---------------------------------------------------------------- tubes

double TubeRegion::area() const { return length() * eps + kPi * eps * eps / 2; }

std::vector<Patch> TubeRegion::strip_patches(const Vec2* split) const {
    const double L = length();
    const Vec2 e = (p1 - p0) / L, n = side * rot90(e);
    std::vector<Patch> out;
    if (split) {
        const double d = std::clamp((*split - p0).dot(e), 0.0, L);
        const Vec2 o = p0 + d * e;
        corner_rect(out, o, -d * e, eps * n);
        corner_rect(out, o, (L - d) * e, eps * n);
    } else {
        Patch p;
        p.map = [o = p0, a = Vec2(L * e), b = Vec2(eps * n), det = L * eps](double u, double v, Vec2& x, double& jw) {
            x = o + u * a + v * b;
            jw = det;
            return true;
        };
        p.u_breaks = linspace(0, 1, std::max(1, static_cast<int>(std::ceil(L / (4 * eps)))));
        if (p.u_breaks.size() > 257) p.u_breaks = linspace(0, 1, 256);
        p.v_breaks = {0, 1};
        p.tag = "strip";
        out.push_back(std::move(p));
    }
    for (auto& p : out) p.tag = "strip";
    return out;
}

std::vector<Patch> TubeRegion::cap_patches() const {
    const Vec2 e = (p1 - p0).normalized(), n = side * rot90(e);
    const double an = std::atan2(n.y(), n.x());
    const double ae = std::atan2(e.y(), e.x());
    // angle sweeps: at p0 from n to -e, at p1 from e to n (both a quarter turn, oriented by side)
    std::vector<Patch> out;
    const double q = side * kPi / 2;
    double a0 = an, a1 = an + q;  // p0: n rotated a quarter turn towards -e
    if (a1 < a0) std::swap(a0, a1);
    out.push_back(polar_patch(p0, 0, eps, a0, a1, "cap0"));
    double b0 = ae, b1 = ae + q;  // p1: e rotated a quarter turn towards n
    if (b1 < b0) std::swap(b0, b1);
    out.push_back(polar_patch(p1, 0, eps, b0, b1, "cap1"));
    return out;
}

Vec2 TubeRegion::grad_phi(const Vec2& x) const {
    const double L = length();
    const Vec2 e = (p1 - p0) / L;
    const double a = (x - p0).dot(e);
    if (a < 0) return (x - p0).normalized();
    if (a > L) return (x - p1).normalized();
    return side * rot90(e);
}

TubeIntegral tube_integral(const Integrand& uv, const TubeRegion& tube, double tol) {
    if (!(tube.eps > 0)) throw ParameterError("tube width must be positive");
    QuadOptions o;
    o.tol = tol * tube.eps;
    const QuadResult s = integrate_patches(tube.strip_patches(), uv, o);
    const QuadResult c = integrate_patches(tube.cap_patches(), uv, o);
    TubeIntegral r;
    r.strip = s.value / tube.eps;
    r.caps = c.value / tube.eps;
    r.total = r.strip + r.caps;
    r.error = (s.error + c.error) / tube.eps;
    return r;
}

// ---------------------------------------------------------------- tip flux

TipFluxRow tip_flux(const TipFluxSetup& su, double t, double eps, double tol) {
    const Problem& pb = *su.problem;
    if (!pb.path->is_straight() || !pb.A->is_identity())
        throw ParameterError("tip_flux needs a straight crack with A = I");
    if (!(t >= 0 && t <= su.tbar)) throw RangeError("tip_flux: t must lie in [0, tbar]");
    const GrowthState g0 = pb.law.eval(0), gt = pb.law.eval(t), gb = pb.law.eval(su.tbar);
    const CurvePoint c0 = pb.path->at(g0.s);
    const Vec2 e1 = c0.d1, e2 = c0.normal();
    const double L = gb.s - g0.s, ds = gt.s - g0.s;
    const double v = gt.sd, acc = gt.sdd, al = std::sqrt(1 - v * v);
    const KJet k = su.k.eval(t);
    const double k2 = k.k * k.k, R = su.zeta_radius;

    TipFluxRow row;
    row.eps = eps;
    if (L <= 0) return row;
    // local coordinates: origin at the tip at time 0
    auto local = [&](const Vec2& x) { return Vec2((x - c0.p).dot(e1), (x - c0.p).dot(e2)); };
    // k^2 zeta^2 (grad Sbar . nu) Sdot, split into the speed and acceleration parts
    auto parts = [&](const Vec2& xl, const Vec2& nu, double& speed, double& accel) {
        const Vec2 y((xl.x() - ds) / al, xl.y());
        const SJet S = S_eval(y);
        const double z = plateau(y.norm(), R / 2, R).v;
        const Vec2 gS(S.g.x() / al, S.g.y());
        const double base = k2 * z * z * gS.dot(nu) * S.g.x();
        speed = base * (-v / al);
        accel = base * (v * acc * y.x() / (al * al));
    };
    QuadOptions o;
    o.tol = tol * eps;
    o.max_cells = 400000;
    double total[2] = {0, 0};
    double x1t = 0;
    for (int side : {+1, -1}) {
        TubeRegion tube{c0.p, c0.p + L * e1, side, eps};
        const Vec2 tipx = c0.p + ds * e1;
        const auto strip = tube.strip_patches(&tipx);
        const auto caps = tube.cap_patches();
        const Vec2 nu_strip(0, side);
        const QuadResult a = integrate_patches(
            strip,
            [&](const Vec2& x) {
                double sp, ac;
                parts(local(x), nu_strip, sp, ac);
                return sp + ac;
            },
            o);
        const QuadResult b = integrate_patches(
            strip,
            [&](const Vec2& x) {
                double sp, ac;
                parts(local(x), nu_strip, sp, ac);
                return ac;
            },
            o);
        const QuadResult c = integrate_patches(
            caps,
            [&](const Vec2& x) {
                const Vec2 g = tube.grad_phi(x);
                double sp, ac;
                parts(local(x), Vec2(g.dot(e1), g.dot(e2)), sp, ac);
                return sp + ac;
            },
            o);
        total[side > 0 ? 0 : 1] = (a.value + c.value) / eps;
        x1t += b.value / eps;
    }
    row.plus = total[0];
    row.minus = total[1];
    row.total = row.plus + row.minus;
    row.x1_term = x1t;
    return row;
}

TipFluxResult tip_flux_limit(const TipFluxSetup& s, double t, const std::vector<double>& eps_seq, double tol) {
    TipFluxResult r;
    r.t = t;
    std::vector<double> p, m, tot, x1;
    for (double e : eps_seq) {
        r.rows.push_back(tip_flux(s, t, e, tol));
        p.push_back(r.rows.back().plus);
        m.push_back(r.rows.back().minus);
        tot.push_back(r.rows.back().total);
        x1.push_back(r.rows.back().x1_term);
    }
    if (eps_seq.size() >= 3) {
        r.limit_plus = richardson_limit(eps_seq, p);
        r.limit_minus = richardson_limit(eps_seq, m);
        r.limit = richardson_limit(eps_seq, tot);
        r.limit_x1 = richardson_limit(eps_seq, x1);
    } else if (!eps_seq.empty()) {
        r.limit_plus = p.back(), r.limit_minus = m.back(), r.limit = tot.back(), r.limit_x1 = x1.back();
    }
    const KJet k = s.k.eval(t);
    r.target = kPi / 4 * k.k * k.k * s.problem->law.eval(t).sd;
    return r;
}

}  // namespace crackflux
