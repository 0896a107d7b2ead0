#include "crackflux/report.hpp"

#include "crackflux/types.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crackflux {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON has no NaN or infinity.
Json jnum(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json jvec(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

}  // namespace

void CsvTable::add(std::vector<double> row) {
    if (row.size() != header.size()) throw ParameterError("CsvTable: row width does not match header");
    rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
        os << '\n';
    }
    return os.str();
}

ReportDir::ReportDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ParameterError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ReportDir::write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ParameterError("cannot write " + (dir_ / name).string());
    f << text;
}

void ReportDir::write(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }
void ReportDir::write(const std::string& name, const CsvTable& t) const { write(name, t.str()); }

Json to_json(const ChartConfig& c) {
    return {{"rho", jnum(c.rho)},           {"eta", jnum(c.eta)},
            {"chi_ratio", jnum(c.chi_ratio)}, {"chi_room", jnum(c.chi_room)},
            {"lambda_in", jnum(c.lambda_in)}, {"lambda_out", jnum(c.lambda_out)},
            {"psi_margin", jnum(c.psi_margin)}, {"max_halvings", c.max_halvings}};
}

Json to_json(const Diagnostic& d) {
    return {{"check", d.check}, {"bound", d.bound},  {"value", jnum(d.value)},
            {"limit", jnum(d.limit)}, {"pass", d.pass}, {"warning", d.warning}};
}

Json to_json(const ValidationReport& r) {
    Json items = Json::array();
    for (const auto& d : r.items) items.push_back(to_json(d));
    Json j{{"pass", r.pass},
           {"speed_margin", jnum(r.speed_margin)},
           {"ellipticity_margin", jnum(r.ellipticity_margin)},
           {"start_distance", jnum(r.start_distance)},
           {"end_distance", jnum(r.end_distance)},
           {"min_tip_distance", jnum(r.min_tip_distance)},
           {"items", items}};
    if (const Diagnostic* f = r.first_failure()) j["first_failure"] = to_json(*f);
    return j;
}

Json to_json(const FondlemTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"eps", jnum(r.eps)},     {"value", jnum(r.value)},         {"error", jnum(r.error)},
                        {"bound", jnum(r.bound)}, {"deviation", jnum(r.deviation)}, {"within", r.within}});
    return {{"limit", jnum(t.limit)}, {"target", jnum(t.target)}, {"all_within", t.all_within}, {"rows", rows}};
}

Json to_json(const EllipticityAudit& a) {
    return {{"c4", jnum(a.c4)},
            {"claim2_residual", jnum(a.claim2_residual)},
            {"symmetry_residual", jnum(a.symmetry_residual)},
            {"worst_t", jnum(a.worst_t)},
            {"worst_x", {jnum(a.worst_x.x()), jnum(a.worst_x.y())}},
            {"eta", jnum(a.eta)},
            {"rho", jnum(a.rho)},
            {"c1", jnum(a.c1)},
            {"c2", jnum(a.c2)}};
}

Json to_json(const TipFluxResult& r) {
    Json rows = Json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"eps", jnum(x.eps)},     {"plus", jnum(x.plus)},         {"minus", jnum(x.minus)},
                        {"total", jnum(x.total)}, {"x1_term", jnum(x.x1_term)}});
    return {{"t", jnum(r.t)},
            {"limit", jnum(r.limit)},
            {"limit_plus", jnum(r.limit_plus)},
            {"limit_minus", jnum(r.limit_minus)},
            {"limit_x1", jnum(r.limit_x1)},
            {"target", jnum(r.target)},
            {"rows", rows}};
}

Json to_json(const WBoundAudit& a) {
    return {{"hess_exponent", jnum(a.hess_exponent)},
            {"hess_constant", jnum(a.hess_constant)},
            {"value_exponent", jnum(a.value_exponent)},
            {"radius", jvec(a.radius)},
            {"max_hess", jvec(a.max_hess)},
            {"max_value", jvec(a.max_value)}};
}

Json to_json(const EnergyReport& r) {
    return {{"k_mode", r.k_mode},
            {"max_E", jnum(r.max_E)},
            {"max_abs_R_gen", jnum(r.max_abs_R_gen)},
            {"max_abs_R_G", jnum(r.max_abs_R_G)},
            {"max_abs_R_G_shift", jnum(r.max_abs_R_G_shift)},
            {"tol", jnum(r.tol)},
            {"generalized_holds", r.generalized_holds},
            {"griffith_holds", r.griffith_holds},
            {"griffith_offset_predicted", r.griffith_offset_predicted},
            {"window_jump", jvec(r.window_jump)}};
}

Json to_json(const SifEstimate& e) {
    return {{"k", jnum(e.k)},
            {"correction", jnum(e.correction)},
            {"residual", jnum(e.residual)},
            {"error_bar", jnum(e.error_bar)},
            {"rho1", jnum(e.rho1)},
            {"rho2", jnum(e.rho2)},
            {"condition", jnum(e.condition)},
            {"samples", e.samples}};
}

Json to_json(const SifTrace& s) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < s.t.size(); ++i)
        rows.push_back({{"t", jnum(s.t[i])}, {"jump", to_json(s.jump[i])}, {"projection", to_json(s.projection[i])}});
    return {{"max_disagreement", jnum(s.max_disagreement)}, {"max_window_jump", jnum(s.max_window_jump)}, {"rows", rows}};
}

CsvTable validation_csv(const ValidationReport& r) {
    CsvTable t{{"index", "value", "limit", "pass", "warning"}, {}};
    for (std::size_t i = 0; i < r.items.size(); ++i)
        t.add({double(i), r.items[i].value, r.items[i].limit, double(r.items[i].pass), double(r.items[i].warning)});
    return t;
}

CsvTable fondlem_csv(const FondlemTable& tab) {
    CsvTable t{{"eps", "value", "error", "bound", "deviation", "within"}, {}};
    for (const auto& r : tab.rows) t.add({r.eps, r.value, r.error, r.bound, r.deviation, double(r.within)});
    return t;
}

CsvTable ellipticity_csv(const EllipticityAudit& a) {
    CsvTable t{{"t", "min_eig", "claim2_residual"}, {}};
    for (std::size_t i = 0; i < a.t.size(); ++i) t.add({a.t[i], a.min_eig[i], a.claim2[i]});
    return t;
}

CsvTable tipflux_csv(const TipFluxResult& r) {
    CsvTable t{{"eps", "plus", "minus", "total", "x1_term"}, {}};
    for (const auto& x : r.rows) t.add({x.eps, x.plus, x.minus, x.total, x.x1_term});
    return t;
}

CsvTable wbound_csv(const WBoundAudit& a) {
    CsvTable t{{"radius", "max_hess", "max_value"}, {}};
    for (std::size_t i = 0; i < a.radius.size(); ++i) t.add({a.radius[i], a.max_hess[i], a.max_value[i]});
    return t;
}

CsvTable energy_csv(const EnergyReport& r) {
    CsvTable t{{"t", "window", "E", "D", "W", "H", "R_gen", "R_G", "predicted_R_G", "E_err", "W_err"}, {}};
    auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : std::nan(""); };
    for (std::size_t i = 0; i < r.t.size(); ++i)
        t.add({r.t[i], i < r.window.size() ? double(r.window[i]) : std::nan(""), at(r.E, i), at(r.D, i), at(r.W, i),
               at(r.H, i), at(r.R_gen, i), at(r.R_G, i), at(r.predicted_RG, i), at(r.E_err, i), at(r.W_err, i)});
    return t;
}

CsvTable sif_csv(const SifTrace& s) {
    CsvTable t{{"t", "k_jump", "err_jump", "k_projection", "err_projection"}, {}};
    for (std::size_t i = 0; i < s.t.size(); ++i)
        t.add({s.t[i], s.jump[i].k, s.jump[i].error_bar, s.projection[i].k, s.projection[i].error_bar});
    return t;
}

std::string format_validation(const ValidationReport& r) {
    std::ostringstream os;
    for (const auto& d : r.items) {
        const char* tag = d.pass ? "ok  " : (d.warning ? "warn" : "FAIL");
        os << tag << "  " << d.check << ": " << d.bound << "  (value " << num(d.value) << ", limit " << num(d.limit)
           << ")\n";
    }
    os << (r.pass ? "scenario valid" : "scenario invalid");
    if (const Diagnostic* f = r.first_failure()) os << ": violates " << f->bound;
    os << '\n';
    return os.str();
}

Json make_manifest(const std::string& command, const Scenario* sc) {
    Json m{{"tool", "crackflux"}, {"version", kVersion}, {"command", command}};
    if (sc) {
        Json cfg = Json::object();
        for (const auto& [k, v] : sc->entries) cfg[k] = v;
        m["scenario"] = {{"name", sc->name}, {"entries", cfg}, {"charts", to_json(sc->charts)}};
    }
    return m;
}

}  // namespace crackflux
