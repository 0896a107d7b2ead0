#include "crackflux/solver.hpp"

#include "crackflux/parallel.hpp"
#include "crackflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

namespace crackflux {

// ------------------------------------------------------------------ mesh

namespace {

using CellKey = std::tuple<int, long, long>;  // level, i, j

std::vector<double> split_segment(double a, double b, double size) {
    const long n = std::max(1L, std::lround((b - a) / size));
    std::vector<double> v(n + 1);
    for (long k = 0; k <= n; ++k) v[k] = a + (b - a) * double(k) / double(n);
    v[n] = b;
    return v;
}

std::vector<double> join(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin() + 1, b.end());
    return out;
}

Vec2 grad_lambda(const std::array<Vec2, 3>& p, int i, double area2) {
    const Vec2& b = p[(i + 1) % 3];
    const Vec2& c = p[(i + 2) % 3];
    return Vec2(b.y() - c.y(), c.x() - b.x()) / area2;
}

struct TriRule {
    std::vector<Eigen::Vector3d> l;
    std::vector<double> w;  // sums to 1
};

const TriRule& rule3() {
    static const TriRule r{{{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}},
                           {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    return r;
}

const TriRule& rule7() {
    static const TriRule r = [] {
        const double s = std::sqrt(15.0);
        const double a1 = (6 - s) / 21, b1 = (9 + 2 * s) / 21, w1 = (155 - s) / 1200;
        const double a2 = (6 + s) / 21, b2 = (9 - 2 * s) / 21, w2 = (155 + s) / 1200;
        TriRule t;
        t.l = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1},
               {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
        t.w = {9.0 / 40, w1, w1, w1, w2, w2, w2};
        return t;
    }();
    return r;
}

}  // namespace

SlitMesh SlitMesh::build(const RectSlit& r, double h, double h_tip, double grading) {
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw ParameterError("build_mesh: empty rectangle");
    if (!(h > 0) || !(h_tip > 0)) throw ParameterError("build_mesh: mesh sizes must be positive");
    if (h_tip > h) throw ParameterError("build_mesh: h_tip must not exceed h");
    if (!(grading > 0 && grading < 1)) throw ParameterError("build_mesh: grading ratio must lie in (0, 1)");
    const bool slit = r.has_slit(), through = r.through();
    if (slit && !(r.y0 < 0 && r.y1 > 0)) throw ParameterError("build_mesh: slit line y2 = 0 must be interior");
    const bool graded = slit && !through;

    std::vector<std::pair<double, double>> xseg, yseg;
    if (graded)
        xseg = {{r.x0, r.tip_x}, {r.tip_x, r.x1}};
    else
        xseg = {{r.x0, r.x1}};
    if (slit)
        yseg = {{r.y0, 0.0}, {0.0, r.y1}};
    else
        yseg = {{r.y0, r.y1}};
    double b = h;
    for (auto& s : xseg) b = std::min(b, s.second - s.first);
    for (auto& s : yseg) b = std::min(b, s.second - s.first);
    std::vector<double> xs = split_segment(xseg[0].first, xseg[0].second, b);
    if (xseg.size() > 1) xs = join(xs, split_segment(xseg[1].first, xseg[1].second, b));
    std::vector<double> ys = split_segment(yseg[0].first, yseg[0].second, b);
    const long iy_slit = slit ? long(ys.size()) - 1 : -1;
    if (yseg.size() > 1) ys = join(ys, split_segment(yseg[1].first, yseg[1].second, b));
    const long nx = long(xs.size()) - 1, ny = long(ys.size()) - 1;
    long ix_tip = -1;
    if (graded) ix_tip = long(std::find(xs.begin(), xs.end(), r.tip_x) - xs.begin());

    auto coord = [&](const std::vector<double>& v, long I, int L) {
        const long base = I >> L;
        if (base >= long(v.size()) - 1) return v.back();
        const double f = double(I & ((1L << L) - 1)) / double(1L << L);
        return v[base] + f * (v[base + 1] - v[base]);
    };
    const Vec2 tip(r.tip_x, 0);
    auto needs_split = [&](const CellKey& k) {
        const auto [L, i, j] = k;
        const double ax = coord(xs, i, L), bx = coord(xs, i + 1, L);
        const double ay = coord(ys, j, L), by = coord(ys, j + 1, L);
        const double size = std::max(bx - ax, by - ay);
        if (size > 1.5 * h) return true;
        if (!graded) return false;
        const double dx = std::max({ax - tip.x(), 0.0, tip.x() - bx});
        const double dy = std::max({ay - tip.y(), 0.0, tip.y() - by});
        const double dist = std::hypot(dx, dy);
        return size > std::max(h_tip, (1 - grading) * dist) * (1 + 1e-12);
    };

    std::set<CellKey> leaves;
    std::vector<CellKey> work;
    for (long j = 0; j < ny; ++j)
        for (long i = 0; i < nx; ++i) work.emplace_back(0, i, j);
    auto children = [](const CellKey& k) {
        const auto [L, i, j] = k;
        return std::array<CellKey, 4>{CellKey{L + 1, 2 * i, 2 * j}, CellKey{L + 1, 2 * i + 1, 2 * j},
                                      CellKey{L + 1, 2 * i, 2 * j + 1}, CellKey{L + 1, 2 * i + 1, 2 * j + 1}};
    };
    while (!work.empty()) {
        const CellKey k = work.back();
        work.pop_back();
        if (std::get<0>(k) < 40 && needs_split(k)) {
            for (const CellKey& c : children(k)) work.push_back(c);
        } else {
            leaves.insert(k);
        }
    }
    auto in_bounds = [&](int L, long i, long j) { return i >= 0 && j >= 0 && i < (nx << L) && j < (ny << L); };
    // level of the leaf covering (L, i, j), or -1 if the region is subdivided below L
    auto covering = [&](int L, long i, long j) {
        for (int k = 0; k <= L; ++k)
            if (leaves.count({L - k, i >> k, j >> k})) return L - k;
        return -1;
    };
    // 2:1 balance across edges
    for (bool changed = true; changed;) {
        changed = false;
        const std::vector<CellKey> snap(leaves.begin(), leaves.end());
        for (const CellKey& k : snap) {
            if (!leaves.count(k)) continue;
            const auto [L, i, j] = k;
            static const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (const auto& dd : d) {
                const long ni = i + dd[0], nj = j + dd[1];
                if (!in_bounds(L, ni, nj)) continue;
                const int c = covering(L, ni, nj);
                if (c >= 0 && c < L - 1) {
                    const CellKey coarse{c, ni >> (L - c), nj >> (L - c)};
                    leaves.erase(coarse);
                    for (const CellKey& ch : children(coarse)) leaves.insert(ch);
                    changed = true;
                }
            }
        }
    }

    int Lmax = 0;
    for (const CellKey& k : leaves) Lmax = std::max(Lmax, std::get<0>(k));
    Lmax += 1;
    const long NX = nx << Lmax, NY = ny << Lmax;
    const long IYs = slit ? iy_slit << Lmax : -1;
    const long IXt = graded ? ix_tip << Lmax : (through ? NX + 1 : -1);

    SlitMesh m;
    m.g_ = r;
    std::map<std::tuple<long, long, int>, int> vid;
    auto vertex = [&](long I, long J, int cell_side) {
        int s = 0;
        if (slit && J == IYs && I < IXt) s = cell_side;
        const auto key = std::make_tuple(I, J, s);
        auto it = vid.find(key);
        if (it != vid.end()) return it->second;
        const int id = int(m.x_.size());
        vid.emplace(key, id);
        m.x_.emplace_back(coord(xs, I, Lmax), coord(ys, J, Lmax));
        m.side_.push_back(s);
        const bool d = (I == 0 && r.dirichlet[3]) || (I == NX && r.dirichlet[1]) || (J == 0 && r.dirichlet[0]) ||
                       (J == NY && r.dirichlet[2]);
        m.dir_.push_back(d ? 1 : 0);
        return id;
    };
    for (const CellKey& k : leaves) {
        const auto [L, i, j] = k;
        const int sh = Lmax - L;
        const long I0 = i << sh, J0 = j << sh, I1 = (i + 1) << sh, J1 = (j + 1) << sh;
        const long Im = (2 * i + 1) << (sh - 1), Jm = (2 * j + 1) << (sh - 1);
        const int cs = J0 >= IYs ? +1 : -1;
        auto finer = [&](long ni, long nj) { return in_bounds(L, ni, nj) && covering(L, ni, nj) < 0; };
        std::vector<int> ring;
        ring.push_back(vertex(I0, J0, cs));
        if (finer(i, j - 1)) ring.push_back(vertex(Im, J0, cs));
        ring.push_back(vertex(I1, J0, cs));
        if (finer(i + 1, j)) ring.push_back(vertex(I1, Jm, cs));
        ring.push_back(vertex(I1, J1, cs));
        if (finer(i, j + 1)) ring.push_back(vertex(Im, J1, cs));
        ring.push_back(vertex(I0, J1, cs));
        if (finer(i - 1, j)) ring.push_back(vertex(I0, Jm, cs));
        const int c = vertex(Im, Jm, cs);
        for (std::size_t a = 0; a < ring.size(); ++a) m.tri_.push_back({c, ring[a], ring[(a + 1) % ring.size()]});
    }
    if (graded) m.tip_ = vid.at({IXt, IYs, 0});
    for (const auto& [key, id] : vid) {
        if (std::get<2>(key) != +1) continue;
        m.lips_.emplace_back(id, vid.at({std::get<0>(key), std::get<1>(key), -1}));
    }
    m.finalize();
    const MeshStats st = m.stats();
    if (st.min_angle_deg < 20) {
        std::ostringstream os;
        os << "build_mesh: minimum angle " << st.min_angle_deg << " deg below 20 deg";
        throw MeshError(os.str());
    }
    return m;
}

void SlitMesh::finalize() {
    layer_.assign(tri_.size(), 0);
    if (tip_ >= 0) {
        std::vector<char> near(x_.size(), 0);
        for (std::size_t e = 0; e < tri_.size(); ++e)
            if (std::find(tri_[e].begin(), tri_[e].end(), tip_) != tri_[e].end()) {
                layer_[e] = 1;
                for (int v : tri_[e]) near[v] = 1;
            }
        for (std::size_t e = 0; e < tri_.size(); ++e)
            if (!layer_[e] && (near[tri_[e][0]] || near[tri_[e][1]] || near[tri_[e][2]])) layer_[e] = 2;
    }
    const std::size_t nb = std::max<std::size_t>(1, std::size_t(std::sqrt(double(tri_.size()) / 2)));
    bx_ = by_ = int(nb);
    buckets_.assign(nb * nb, {});
    const double W = g_.x1 - g_.x0, H = g_.y1 - g_.y0;
    auto cell = [&](double v, double lo, double span) {
        return std::clamp(int((v - lo) / span * double(nb)), 0, int(nb) - 1);
    };
    for (std::size_t e = 0; e < tri_.size(); ++e) {
        Vec2 lo = x_[tri_[e][0]], hi = lo;
        for (int v : tri_[e]) {
            lo = lo.cwiseMin(x_[v]);
            hi = hi.cwiseMax(x_[v]);
        }
        for (int a = cell(lo.x(), g_.x0, W); a <= cell(hi.x(), g_.x0, W); ++a)
            for (int b = cell(lo.y(), g_.y0, H); b <= cell(hi.y(), g_.y0, H); ++b)
                buckets_[std::size_t(b) * nb + a].push_back(int(e));
    }
}

MeshStats SlitMesh::stats() const {
    MeshStats s;
    s.vertices = x_.size();
    s.triangles = tri_.size();
    s.lip_pairs = lips_.size();
    s.min_angle_deg = 180;
    s.h_min = INFINITY;
    for (const auto& t : tri_) {
        for (int i = 0; i < 3; ++i) {
            const Vec2 a = x_[t[(i + 1) % 3]] - x_[t[i]], b = x_[t[(i + 2) % 3]] - x_[t[i]];
            const double ang = std::atan2(std::abs(cross(a, b)), a.dot(b)) * 180 / std::numbers::pi;
            s.min_angle_deg = std::min(s.min_angle_deg, ang);
            s.h_min = std::min(s.h_min, a.norm());
            s.h_max = std::max(s.h_max, a.norm());
        }
    }
    return s;
}

double SlitMesh::area() const {
    double a = 0;
    for (const auto& t : tri_) a += 0.5 * cross(x_[t[1]] - x_[t[0]], x_[t[2]] - x_[t[0]]);
    return a;
}

Eigen::Vector3d SlitMesh::barycentric(int e, const Vec2& y) const {
    const Vec2 &a = x_[tri_[e][0]], &b = x_[tri_[e][1]], &c = x_[tri_[e][2]];
    const double A = cross(b - a, c - a);
    Eigen::Vector3d l;
    l(1) = cross(y - a, c - a) / A;
    l(2) = cross(b - a, y - a) / A;
    l(0) = 1 - l(1) - l(2);
    return l;
}

int SlitMesh::locate(const Vec2& y) const {
    const double W = g_.x1 - g_.x0, H = g_.y1 - g_.y0, tol = 1e-12 * std::max(W, H);
    if (y.x() < g_.x0 - tol || y.x() > g_.x1 + tol || y.y() < g_.y0 - tol || y.y() > g_.y1 + tol) return -1;
    const int a = std::clamp(int((y.x() - g_.x0) / W * bx_), 0, bx_ - 1);
    const int b = std::clamp(int((y.y() - g_.y0) / H * by_), 0, by_ - 1);
    const bool upper = y.y() > 0 || (y.y() == 0 && !std::signbit(y.y()));
    int best = -1;
    double score = -INFINITY;
    for (int e : buckets_[std::size_t(b) * bx_ + a]) {
        if (g_.has_slit()) {
            const double cy = (x_[tri_[e][0]].y() + x_[tri_[e][1]].y() + x_[tri_[e][2]].y()) / 3;
            if ((upper && cy < 0) || (!upper && cy > 0)) continue;
        }
        const double m = barycentric(e, y).minCoeff();
        if (m > score) {
            score = m;
            best = e;
        }
    }
    return score >= -1e-10 ? best : -1;
}

void SlitMesh::write(std::ostream& os) const {
    os.precision(17);
    os << "crackflux-mesh 1\n";
    os << "rect " << g_.x0 << ' ' << g_.x1 << ' ' << g_.y0 << ' ' << g_.y1 << ' ' << g_.tip_x;
    for (bool d : g_.dirichlet) os << ' ' << int(d);
    os << "\nvertices " << x_.size() << '\n';
    for (std::size_t i = 0; i < x_.size(); ++i)
        os << x_[i].x() << ' ' << x_[i].y() << ' ' << side_[i] << ' ' << int(dir_[i]) << '\n';
    os << "triangles " << tri_.size() << '\n';
    for (const auto& t : tri_) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "lips " << lips_.size() << '\n';
    for (const auto& p : lips_) os << p.first << ' ' << p.second << '\n';
    os << "tip " << tip_ << '\n';
}

SlitMesh SlitMesh::read(std::istream& is) {
    auto expect = [&](const std::string& word) {
        std::string w;
        if (!(is >> w) || w != word) throw ParseError("mesh file: expected '" + word + "'");
    };
    SlitMesh m;
    int version = 0;
    expect("crackflux-mesh");
    is >> version;
    if (version != 1) throw ParseError("mesh file: unsupported version");
    expect("rect");
    is >> m.g_.x0 >> m.g_.x1 >> m.g_.y0 >> m.g_.y1 >> m.g_.tip_x;
    for (auto& d : m.g_.dirichlet) {
        int v = 0;
        is >> v;
        d = v != 0;
    }
    std::size_t n = 0;
    expect("vertices");
    is >> n;
    m.x_.resize(n);
    m.side_.resize(n);
    m.dir_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int d = 0;
        is >> m.x_[i].x() >> m.x_[i].y() >> m.side_[i] >> d;
        m.dir_[i] = char(d);
    }
    expect("triangles");
    is >> n;
    m.tri_.resize(n);
    for (auto& t : m.tri_) is >> t[0] >> t[1] >> t[2];
    expect("lips");
    is >> n;
    m.lips_.resize(n);
    for (auto& p : m.lips_) is >> p.first >> p.second;
    expect("tip");
    is >> m.tip_;
    if (!is) throw ParseError("mesh file: truncated");
    for (const auto& t : m.tri_)
        for (int v : t)
            if (v < 0 || std::size_t(v) >= m.x_.size()) throw ParseError("mesh file: vertex index out of range");
    m.finalize();
    return m;
}

// ------------------------------------------------------------------ coefficients

ConstantCoefficients::ConstantCoefficients(Mat2 A4, std::function<double(double, const Vec2&)> g)
    : A4_(std::move(A4)), g_(std::move(g)) {}

CoefSample ConstantCoefficients::sample(double t, const Vec2& y) const {
    CoefSample c;
    c.A4 = A4_;
    if (g_) c.g = g_(t, y);
    return c;
}

ChartCoefficients::ChartCoefficients(const ChartWindow& w, std::function<double(double, const Vec2&)> f)
    : w_(w), f_(std::move(f)) {}

CoefSample ChartCoefficients::sample(double t, const Vec2& y) const {
    const Vec2 x = w_.phi_inverse(t, y);
    const Coefficients c = w_.coefficients_at_x(t, x);
    CoefSample s;
    s.A4 = c.A4;
    s.p = c.p;
    s.q = c.q;
    if (f_) s.g = f_(t, x);
    return s;
}

RectSlit transformed_domain(const ChartWindow& w) {
    const Problem& pb = w.problem();
    if (!pb.path->is_straight()) throw MeshError("solver: the transformed domain needs a straight crack");
    const auto& v = pb.domain.vertices();
    const double t0 = w.t0();
    std::vector<Vec2> img;
    for (const Vec2& p : v) img.push_back(w.phi(t0, p).y);
    Vec2 lo = img[0], hi = img[0];
    for (const Vec2& y : img) {
        lo = lo.cwiseMin(y);
        hi = hi.cwiseMax(y);
    }
    const double tol = 1e-9 * (hi - lo).norm();
    auto on_edge = [&](const Vec2& y) {
        if (std::abs(y.y() - lo.y()) <= tol) return 0;
        if (std::abs(y.x() - hi.x()) <= tol) return 1;
        if (std::abs(y.y() - hi.y()) <= tol) return 2;
        if (std::abs(y.x() - lo.x()) <= tol) return 3;
        return -1;
    };
    RectSlit r;
    r.x0 = lo.x();
    r.x1 = hi.x();
    r.y0 = lo.y();
    r.y1 = hi.y();
    std::vector<char> dir(v.size(), 0);
    for (int e : pb.domain.dirichlet_edges()) dir[e] = 1;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % v.size()];
        const int ea = on_edge(img[i]);
        if (ea < 0) throw MeshError("solver: the transformed domain is not an axis-aligned rectangle");
        int common = -1;
        for (double f : {0.25, 0.5, 0.75}) {
            const int e = on_edge(w.phi(t0, a + f * (b - a)).y);
            if (e < 0 || (common >= 0 && e != common))
                throw MeshError("solver: the transformed domain is not an axis-aligned rectangle");
            common = e;
        }
        if (dir[i]) r.dirichlet[common] = true;
    }
    const Vec2 start = w.phi(t0, pb.path->eval(0).p).y;
    const Vec2 tip = w.phi(t0, pb.tip(t0)).y;
    if (std::abs(start.x() - r.x0) > tol || std::abs(start.y()) > tol || tip.norm() > tol)
        throw MeshError("solver: the transformed crack must run from the left edge to the origin");
    r.tip_x = 0;
    return r;
}

// ------------------------------------------------------------------ assembly and time stepping

WaveSolver::WaveSolver(std::shared_ptr<const SlitMesh> mesh, std::shared_ptr<const WaveCoefficients> coef)
    : mesh_(std::move(mesh)), coef_(std::move(coef)) {
    const auto& X = mesh_->vertices();
    const auto& T = mesh_->triangles();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * T.size());
    for (const auto& t : T) {
        const double a = 0.5 * std::abs(cross(X[t[1]] - X[t[0]], X[t[2]] - X[t[0]]));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], a / 12 * (i == j ? 2 : 1));
    }
    M_.resize(Eigen::Index(X.size()), Eigen::Index(X.size()));
    M_.setFromTriplets(trip.begin(), trip.end());
    fixed_ = mesh_->dirichlet();
}

Operators WaveSolver::assemble(double t) const {
    const auto& X = mesh_->vertices();
    const auto& T = mesh_->triangles();
    const auto& layer = mesh_->tip_layer();
    struct Local {
        double K[3][3], P[3][3], Q[3][3], G[3];
    };
    std::vector<Local> loc(T.size());
    parallel_for(T.size(), [&](std::size_t e) {
        const std::array<Vec2, 3> p{X[T[e][0]], X[T[e][1]], X[T[e][2]]};
        const double a2 = cross(p[1] - p[0], p[2] - p[0]);
        const double area = 0.5 * std::abs(a2);
        std::array<Vec2, 3> gl;
        for (int i = 0; i < 3; ++i) gl[i] = grad_lambda(p, i, a2);
        const TriRule& R = layer[e] ? rule7() : rule3();
        Local L{};
        for (std::size_t k = 0; k < R.w.size(); ++k) {
            const Vec2 y = R.l[k](0) * p[0] + R.l[k](1) * p[1] + R.l[k](2) * p[2];
            const CoefSample c = coef_->sample(t, y);
            if (!c.A4.allFinite() || !c.p.allFinite() || !c.q.allFinite() || !std::isfinite(c.g))
                throw SolverError("assemble: non-finite coefficient sample");
            const double w = R.w[k] * area;
            for (int i = 0; i < 3; ++i) {
                const double li = R.l[k](i);
                L.G[i] += w * c.g * li;
                for (int j = 0; j < 3; ++j) {
                    L.K[i][j] += w * gl[i].dot(c.A4 * gl[j]);
                    L.P[i][j] += w * c.p.dot(gl[j]) * li;
                    L.Q[i][j] += w * c.q.dot(gl[j]) * li;
                }
            }
        }
        loc[e] = L;
    });
    const Eigen::Index n = Eigen::Index(X.size());
    std::vector<Eigen::Triplet<double>> tk, tp, tq;
    tk.reserve(9 * T.size());
    tp.reserve(9 * T.size());
    tq.reserve(9 * T.size());
    Operators op;
    op.G = Eigen::VectorXd::Zero(n);
    for (std::size_t e = 0; e < T.size(); ++e)
        for (int i = 0; i < 3; ++i) {
            op.G(T[e][i]) += loc[e].G[i];
            for (int j = 0; j < 3; ++j) {
                tk.emplace_back(T[e][i], T[e][j], loc[e].K[i][j]);
                tp.emplace_back(T[e][i], T[e][j], loc[e].P[i][j]);
                tq.emplace_back(T[e][i], T[e][j], loc[e].Q[i][j]);
            }
        }
    op.K.resize(n, n);
    op.P.resize(n, n);
    op.Q.resize(n, n);
    op.K.setFromTriplets(tk.begin(), tk.end());
    op.P.setFromTriplets(tp.begin(), tp.end());
    op.Q.setFromTriplets(tq.begin(), tq.end());
    return op;
}

Eigen::VectorXd WaveSolver::interpolate(const std::function<double(const Vec2&)>& f) const {
    const auto& X = mesh_->vertices();
    const auto& S = mesh_->side();
    Eigen::VectorXd v(Eigen::Index(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) {
        Vec2 y = X[i];
        if (S[i] != 0) y.y() = S[i] > 0 ? 0.0 : -0.0;
        v(Eigen::Index(i)) = f(y);
    }
    return v;
}

Eigen::VectorXd WaveSolver::solve_accel(const Operators& op, const Eigen::VectorXd& rhs, double c_kp, double c_q,
                                        bool reuse) {
    if (!reuse || !lu_) {
        SpMat S = M_;
        if (c_kp != 0) S += c_kp * (op.K + op.P);
        if (c_q != 0) S += c_q * op.Q;
        S.makeCompressed();
        for (Eigen::Index k = 0; k < S.outerSize(); ++k)
            for (SpMat::InnerIterator it(S, k); it; ++it)
                if (fixed_[it.row()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
        if (!lu_) {
            lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
            lu_->analyzePattern(S);
        }
        lu_->factorize(S);
        if (lu_->info() != Eigen::Success) throw SolverError("step: sparse factorization failed");
    }
    Eigen::VectorXd b = rhs;
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (fixed_[i]) b(i) = 0;
    Eigen::VectorXd a = lu_->solve(b);
    if (lu_->info() != Eigen::Success || !a.allFinite()) throw SolverError("step: linear solve failed");
    return a;
}

double WaveSolver::residual(const Operators& op, const WaveState& s) const {
    const Eigen::VectorXd Ma = M_ * s.a, Kv = (op.K + op.P) * s.v, Qv = 2 * (op.Q * s.vd);
    Eigen::VectorXd r = Ma + Kv - Qv - op.G;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        if (fixed_[i]) r(i) = 0;
    const double scale = std::max({Ma.norm(), Kv.norm(), Qv.norm(), op.G.norm()});
    return scale > 0 ? r.norm() / scale : 0.0;
}

WaveState WaveSolver::initial(double t0, Eigen::VectorXd v0, Eigen::VectorXd v1) {
    const Eigen::Index n = M_.rows();
    if (v0.size() != n || v1.size() != n) throw ParameterError("initial: state size does not match the mesh");
    for (Eigen::Index i = 0; i < n; ++i)
        if (fixed_[i]) v0(i) = v1(i) = 0;
    Operators op = assemble(t0);
    WaveState s;
    s.t = t0;
    s.v = std::move(v0);
    s.vd = std::move(v1);
    lu_.reset();
    cached_dt_ = -1;
    s.a = solve_accel(op, op.G - (op.K + op.P) * s.v + 2 * (op.Q * s.vd), 0, 0, false);
    lu_.reset();
    last_residual_ = residual(op, s);
    if (!coef_->time_dependent()) ops_ = std::make_unique<Operators>(std::move(op));
    return s;
}

WaveState WaveSolver::step(const WaveState& s, double dt) {
    if (!(dt > 0)) throw ParameterError("step: dt must be positive");
    const double t1 = s.t + dt;
    const bool frozen = !coef_->time_dependent() && ops_;
    Operators fresh;
    if (!frozen) fresh = assemble(t1);
    const Operators& op = frozen ? *ops_ : fresh;
    const Eigen::VectorXd vp = s.v + dt * s.vd + 0.25 * dt * dt * s.a;
    const Eigen::VectorXd vdp = s.vd + 0.5 * dt * s.a;
    const bool reuse = frozen && dt == cached_dt_;
    WaveState n;
    n.t = t1;
    n.a = solve_accel(op, op.G - (op.K + op.P) * vp + 2 * (op.Q * vdp), 0.25 * dt * dt, -dt, reuse);
    cached_dt_ = dt;
    n.v = vp + 0.25 * dt * dt * n.a;
    n.vd = vdp + 0.5 * dt * n.a;
    last_residual_ = residual(op, n);
    if (last_residual_ > 1e-10) throw SolverError("step: discrete residual " + std::to_string(last_residual_));
    return n;
}

double WaveSolver::energy(const WaveState& s) const {
    const SpMat K = (!coef_->time_dependent() && ops_) ? ops_->K : assemble(s.t).K;
    return 0.5 * s.vd.dot(M_ * s.vd) + 0.5 * s.v.dot(K * s.v);
}

double WaveSolver::l2_error(const Eigen::VectorXd& v, const std::function<double(const Vec2&)>& exact) const {
    const auto& X = mesh_->vertices();
    const auto& T = mesh_->triangles();
    std::vector<double> part(T.size());
    parallel_for(T.size(), [&](std::size_t e) {
        const std::array<Vec2, 3> p{X[T[e][0]], X[T[e][1]], X[T[e][2]]};
        const double area = 0.5 * std::abs(cross(p[1] - p[0], p[2] - p[0]));
        const TriRule& R = rule7();
        double s = 0;
        for (std::size_t k = 0; k < R.w.size(); ++k) {
            const Vec2 y = R.l[k](0) * p[0] + R.l[k](1) * p[1] + R.l[k](2) * p[2];
            const double vh = R.l[k](0) * v(T[e][0]) + R.l[k](1) * v(T[e][1]) + R.l[k](2) * v(T[e][2]);
            s += R.w[k] * std::pow(vh - exact(y), 2);
        }
        part[e] = s * area;
    });
    return std::sqrt(pairwise_sum(part));
}

// ------------------------------------------------------------------ pullback and manufactured data

PullbackSample pullback(const WaveSolver& s, const WaveState& st, const ChartWindow& w, const Vec2& x) {
    const Jet j = w.phi(st.t, x);
    const SlitMesh& m = s.mesh();
    const int e = m.locate(j.y);
    if (e < 0) throw LocateError("pullback: point maps outside the mesh");
    const auto& T = m.triangles()[e];
    const auto& X = m.vertices();
    const std::array<Vec2, 3> p{X[T[0]], X[T[1]], X[T[2]]};
    const double a2 = cross(p[1] - p[0], p[2] - p[0]);
    const Eigen::Vector3d l = m.barycentric(e, j.y);
    PullbackSample r;
    Vec2 gv = Vec2::Zero();
    double vd = 0;
    for (int i = 0; i < 3; ++i) {
        r.u += l(i) * st.v(T[i]);
        vd += l(i) * st.vd(T[i]);
        gv += st.v(T[i]) * grad_lambda(p, i, a2);
    }
    r.ut = vd + gv.dot(j.yt);
    r.grad = j.J.transpose() * gv;
    return r;
}

double forcing_from_v(const ChartWindow& w, const VField& v, double t, const Vec2& x) {
    const Jet j = w.phi(t, x);
    const VJet d = v(t, j.y);
    const Problem& pb = w.problem();
    const Mat2 A = pb.A->eval(x);
    const auto gA = pb.A->grad(x);
    const Mat2& F = j.J;
    const double utt = d.vtt + 2 * j.yt.dot(d.gt) + j.yt.dot(d.H * j.yt) + d.g.dot(j.ytt);
    Vec2 divAgrad = Vec2::Zero();
    for (int m = 0; m < 2; ++m) {
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) divAgrad(m) += gA[k](k, l) * F(m, l);
        divAgrad(m) += A.cwiseProduct(j.H[m]).sum();
    }
    const double div = divAgrad.dot(d.g) + (F * A * F.transpose()).cwiseProduct(d.H).sum();
    return utt - div;
}

}  // namespace crackflux
