#include "crackflux/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace crackflux {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    Reader(std::string source, std::map<std::string, Entry> e) : src_(std::move(source)), e_(std::move(e)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        std::ostringstream os;
        os << src_;
        auto it = e_.find(key);
        if (it != e_.end()) os << ":" << it->second.line;
        os << ": " << key << ": " << msg;
        throw ParseError(os.str());
    }
    bool has(const std::string& key) const { return e_.count(key) > 0; }
    const std::string& raw(const std::string& key) const {
        auto it = e_.find(key);
        if (it == e_.end()) fail(key, "missing required key");
        return it->second.value;
    }
    std::vector<std::string> words(const std::string& key) const {
        std::istringstream is(raw(key));
        std::vector<std::string> w;
        for (std::string s; is >> s;) w.push_back(s);
        return w;
    }
    double to_number(const std::string& key, const std::string& s) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(key, "not a number: '" + s + "'");
        }
    }
    std::vector<double> numbers(const std::string& key, std::size_t first = 0) const {
        const auto w = words(key);
        std::vector<double> v;
        for (std::size_t i = first; i < w.size(); ++i) v.push_back(to_number(key, w[i]));
        return v;
    }
    double number(const std::string& key, double def) const {
        if (!has(key)) return def;
        const auto v = numbers(key);
        if (v.size() != 1) fail(key, "expected one number");
        return v[0];
    }
    std::vector<Vec2> points(const std::string& key, const std::string& text) const {
        std::vector<Vec2> pts;
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ',');) {
            std::istringstream is(item);
            std::vector<std::string> w;
            for (std::string s; is >> s;) w.push_back(s);
            if (w.size() != 2) fail(key, "points are written 'x y' and separated by commas");
            pts.emplace_back(to_number(key, w[0]), to_number(key, w[1]));
        }
        return pts;
    }

private:
    std::string src_;
    std::map<std::string, Entry> e_;
};

const std::set<std::string>& known_keys() {
    static const std::set<std::string> k{"name",           "domain",          "dirichlet",        "path",
                                         "growth",         "T",               "A",                "c0",
                                         "delta",          "min_tip_distance", "chart.rho",       "chart.eta",
                                         "chart.chi_ratio", "chart.chi_room",  "chart.lambda_in", "chart.lambda_out",
                                         "chart.psi_margin", "chart.max_halvings"};
    return k;
}

PathPtr build_path(const Reader& r) {
    const auto w = r.words("path");
    if (w.empty()) r.fail("path", "empty value");
    const std::string& kind = w[0];
    if (kind == "segment") {
        const auto v = r.numbers("path", 1);
        if (v.size() != 5) r.fail("path", "segment takes: x0 y0 dx dy length");
        const Vec2 d(v[2], v[3]);
        if (!(d.norm() > 0)) r.fail("path", "segment direction is zero");
        return std::make_shared<SegmentPath>(Vec2(v[0], v[1]), d.normalized(), v[4]);
    }
    if (kind == "arc") {
        if (w.size() != 7) r.fail("path", "arc takes: cx cy radius start_angle ccw|cw length");
        if (w[5] != "ccw" && w[5] != "cw") r.fail("path", "arc orientation must be ccw or cw");
        const double cx = r.to_number("path", w[1]), cy = r.to_number("path", w[2]);
        const double R = r.to_number("path", w[3]), a0 = r.to_number("path", w[4]);
        const double L = r.to_number("path", w[6]);
        return std::make_shared<ArcPath>(Vec2(cx, cy), R, a0, w[5] == "ccw", L);
    }
    if (kind == "spline") {
        const std::string& s = r.raw("path");
        const auto pts = r.points("path", s.substr(s.find("spline") + 6));
        if (pts.size() < 3) r.fail("path", "spline needs at least three points");
        return std::make_shared<SplinePath>(pts);
    }
    r.fail("path", "unknown path kind '" + kind + "' (segment, arc, spline)");
}

FieldPtr build_field(const Reader& r) {
    if (!r.has("A")) return make_identity();
    const auto w = r.words("A");
    if (w.empty()) r.fail("A", "empty value");
    const auto v = r.numbers("A", 1);
    auto need = [&](std::size_t n, const char* usage) {
        if (v.size() != n) r.fail("A", usage);
    };
    if (w[0] == "identity") {
        need(0, "identity takes no parameters");
        return make_identity();
    }
    if (w[0] == "diagonal") {
        need(2, "diagonal takes: a11 a22");
        return make_diagonal(v[0], v[1]);
    }
    if (w[0] == "constant") {
        need(3, "constant takes: a11 a12 a22");
        Mat2 M;
        M << v[0], v[1], v[1], v[2];
        return make_constant(M);
    }
    if (w[0] == "sinusoidal") {
        need(2, "sinusoidal takes: amplitude frequency");
        return make_sinusoidal(v[0], v[1]);
    }
    if (w[0] == "rotated") {
        need(4, "rotated takes: l1 l2 theta0 slope");
        return make_rotated(v[0], v[1], v[2], v[3]);
    }
    r.fail("A", "unknown coefficient field '" + w[0] + "' (identity, diagonal, constant, sinusoidal, rotated)");
}

}  // namespace

Scenario parse_scenario(std::istream& is, const std::string& source) {
    std::map<std::string, Entry> entries;
    Scenario sc;
    int lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!known_keys().count(key))
            throw ParseError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (entries.count(key))
            throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        entries[key] = {value, lineno};
        sc.entries.emplace_back(key, value);
    }
    const Reader r(source, entries);
    if (r.has("name")) sc.name = r.raw("name");

    auto p = std::make_shared<Problem>();
    std::vector<int> dir;
    if (r.has("dirichlet")) {
        for (double d : r.numbers("dirichlet")) {
            if (d != std::floor(d) || d < 0) r.fail("dirichlet", "edge indices are non-negative integers");
            dir.push_back(int(d));
        }
    }
    try {
        p->domain = Domain(r.points("domain", r.raw("domain")), dir);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        r.fail("domain", e.what());
    }
    try {
        p->path = build_path(r);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        r.fail("path", e.what());
    }
    const double T = r.number("T", NAN);
    if (!r.has("T")) r.fail("T", "missing required key");
    {
        const auto w = r.words("growth");
        if (w.empty() || (w[0] != "polynomial" && w[0] != "linear"))
            r.fail("growth", "growth law is 'polynomial c0 c1 ...' or 'linear s0 speed'");
        const auto c = r.numbers("growth", 1);
        if (w[0] == "linear" && c.size() != 2) r.fail("growth", "linear takes: s0 speed");
        try {
            p->law = GrowthLaw(c, T);
        } catch (const Error& e) {
            r.fail("growth", e.what());
        }
    }
    try {
        p->A = build_field(r);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        r.fail("A", e.what());
    }
    p->c0 = r.number("c0", 1.0);
    p->delta = r.number("delta", 0.5);
    sc.min_tip_distance = r.number("min_tip_distance", 0.0);
    ChartConfig& c = sc.charts;
    c.rho = r.number("chart.rho", c.rho);
    c.eta = r.number("chart.eta", c.eta);
    c.chi_ratio = r.number("chart.chi_ratio", c.chi_ratio);
    c.chi_room = r.number("chart.chi_room", c.chi_room);
    c.lambda_in = r.number("chart.lambda_in", c.lambda_in);
    c.lambda_out = r.number("chart.lambda_out", c.lambda_out);
    c.psi_margin = r.number("chart.psi_margin", c.psi_margin);
    c.max_halvings = int(r.number("chart.max_halvings", c.max_halvings));
    sc.problem = p;
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path + ": cannot open scenario file");
    return parse_scenario(f, path);
}

const Diagnostic* ValidationReport::first_failure() const {
    for (const Diagnostic& d : items)
        if (!d.pass && !d.warning) return &d;
    return nullptr;
}

ValidationReport validate_scenario(const Problem& pb, const ValidationOptions& opt) {
    ValidationReport rep;
    auto add = [&](std::string check, std::string bound, double value, double limit, bool pass, bool warning = false) {
        rep.items.push_back({std::move(check), std::move(bound), value, limit, pass, warning});
    };
    // Each check runs on its own so that one failure does not hide the others.
    auto guarded = [&](const std::string& name, const std::function<void()>& f) {
        try {
            f();
        } catch (const std::exception& e) {
            add(name, std::string("evaluation failed: ") + e.what(), NAN, NAN, false);
        }
    };
    const int n = std::max(opt.samples, 10);

    guarded("constants", [&] {
        add("constants", "0 < delta < c0", pb.delta, pb.c0, pb.c0 > 0 && pb.delta > 0 && pb.delta < pb.c0);
    });
    guarded("domain.simple", [&] {
        const bool ok = pb.domain.is_simple() && pb.domain.area() > 0;
        add("domain.simple", "boundary polygon is simple with positive area", pb.domain.area(), 0, ok);
    });
    if (!pb.path) {
        add("path", "a crack path is given", 0, 0, false);
        rep.pass = false;
        return rep;
    }
    const double L = pb.path->length(), diam = pb.domain.diameter();
    guarded("path.endpoints", [&] {
        rep.start_distance = pb.domain.boundary_distance(pb.path->eval(0).p);
        rep.end_distance = pb.domain.boundary_distance(pb.path->eval(L).p);
        const double tol = opt.endpoint_tol * diam;
        add("path.start_on_boundary", "gamma(0) lies on the boundary", rep.start_distance, tol, rep.start_distance <= tol);
        add("path.end_on_boundary", "gamma(length) lies on the boundary", rep.end_distance, tol, rep.end_distance <= tol);
    });
    std::vector<Vec2> poly;
    guarded("path.arclength", [&] {
        double dev = 0;
        for (int i = 0; i <= n; ++i) {
            const CurvePoint c = pb.path->eval(L * i / n);
            dev = std::max(dev, std::abs(c.d1.norm() - 1));
            poly.push_back(c.p);
        }
        add("path.arclength", "| |gamma'| - 1 | <= tol", dev, opt.arclength_tol, dev <= opt.arclength_tol);
    });
    guarded("path.simple", [&] {
        bool ok = true;
        for (std::size_t i = 0; i + 1 < poly.size() && ok; ++i)
            for (std::size_t j = i + 2; j + 1 < poly.size(); ++j)
                if (segments_intersect(poly[i], poly[i + 1], poly[j], poly[j + 1])) {
                    ok = false;
                    break;
                }
        add("path.simple", "sampled path has no self-intersection", ok ? 0 : 1, 0, ok);
    });
    guarded("path.inside", [&] {
        int outside = 0;
        for (std::size_t i = 1; i + 1 < poly.size(); ++i) outside += !pb.domain.contains(poly[i]);
        add("path.inside", "interior points of the path lie in the domain", outside, 0, outside == 0);
    });
    const double T = pb.T();
    guarded("growth", [&] {
        double min_sd = INFINITY, max_sd2 = 0, smin = INFINITY, smax = -INFINITY;
        for (int i = 0; i <= n; ++i) {
            const GrowthState g = pb.law.eval_unchecked(T * i / n);
            min_sd = std::min(min_sd, g.sd);
            max_sd2 = std::max(max_sd2, g.sd * g.sd);
            smin = std::min(smin, g.s);
            smax = std::max(smax, g.s);
        }
        rep.speed_margin = pb.c0 - pb.delta - max_sd2;
        add("growth.monotone", "sdot >= 0 (irreversibility)", min_sd, 0, min_sd >= 0);
        add("growth.speed", "sdot^2 <= c0 - delta (crack speed bound)", max_sd2, pb.c0 - pb.delta,
            rep.speed_margin >= 0);
        add("growth.range", "0 < s(t) < length", std::min(smin, L - smax), 0, smin > 0 && smax < L);
    });
    guarded("material", [&] {
        double asym = 0;
        const Vec2 lo = pb.domain.lo(), hi = pb.domain.hi();
        for (int i = 0; i < opt.grid; ++i)
            for (int j = 0; j < opt.grid; ++j) {
                const Vec2 x = lo + (hi - lo).cwiseProduct(Vec2((i + 0.5) / opt.grid, (j + 0.5) / opt.grid));
                if (!pb.domain.contains(x)) continue;
                const Mat2 A = pb.A->eval(x);
                asym = std::max(asym, std::abs(A(0, 1) - A(1, 0)));
            }
        add("material.symmetric", "|A12 - A21| <= 1e-14", asym, 1e-14, asym <= 1e-14);
        const double m = ellipticity_margin(*pb.A, lo, hi, opt.grid, &pb.domain);
        rep.ellipticity_margin = m - pb.c0;
        add("material.ellipticity", "min eigenvalue of A >= c0", m, pb.c0, m >= pb.c0);
    });
    guarded("growth.transported_speed", [&] {
        const double v = max_transported_speed(pb);
        const double lim = 1 - pb.delta / pb.c0;
        add("growth.transported_speed", "transported speed^2 <= 1 - c1^2", v * v, lim, v * v <= lim, true);
    });
    guarded("geometry.tip_distance", [&] {
        double d = INFINITY;
        for (int i = 0; i <= 200; ++i) {
            const double t = T * i / 200;
            const double s = pb.law.eval_unchecked(t).s;
            if (s < 0 || s > L) continue;
            d = std::min(d, pb.domain.boundary_distance(pb.path->eval(s).p));
        }
        rep.min_tip_distance = d;
        const double need = opt.min_tip_distance > 0 ? opt.min_tip_distance : 0.05 * diam;
        add("geometry.tip_distance", "dist(tip, boundary) >= min_tip_distance", d, need, d >= need);
    });
    rep.pass = rep.first_failure() == nullptr;
    return rep;
}

}  // namespace crackflux
