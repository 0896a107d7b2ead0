#include "crackflux/charts.hpp"
#include "crackflux/energy.hpp"
#include "crackflux/quad.hpp"
#include "crackflux/report.hpp"
#include "crackflux/scenario.hpp"
#include "crackflux/sif.hpp"
#include "crackflux/studies.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

using namespace crackflux;

namespace {

constexpr double pi = std::numbers::pi;

enum Exit { kOk = 0, kValidation = 1, kAudit = 2, kBalance = 3, kSolver = 4 };

struct RunConfig {
    std::string command, which;
    std::string scenario, out = "crackflux_out";
    std::optional<double> tol;
    std::vector<double> eps_seq;
    std::string grid;
    std::uint64_t seed = 0;
    std::string k_mode;
    std::vector<double> window;
    std::string init = "zero";
};

// Failure of a command with a given exit code; the message goes to stderr.
struct CommandFailure {
    int code;
    std::string message;
};

std::vector<int> parse_grid(const std::string& g, std::vector<int> def) {
    if (g.empty()) return def;
    std::vector<int> out;
    std::stringstream ss(g);
    for (std::string item; std::getline(ss, item, 'x');) {
        try {
            std::size_t pos = 0;
            const int v = std::stoi(item, &pos);
            if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CommandFailure{kValidation, "--grid: expected positive integers separated by 'x', got '" + g + "'"};
        }
    }
    if (out.size() != def.size())
        throw CommandFailure{kValidation, "--grid: expected " + std::to_string(def.size()) + " numbers, got '" + g + "'"};
    return out;
}

KLaw parse_k_mode(const std::string& mode, ProblemPtr pb, const std::string& def) {
    const std::string m = mode.empty() ? def : mode;
    if (m == "griffith") return KLaw::griffith(pb);
    const auto colon = m.find(':');
    const std::string kind = m.substr(0, colon);
    std::vector<double> v;
    if (colon != std::string::npos) {
        std::stringstream ss(m.substr(colon + 1));
        for (std::string item; std::getline(ss, item, ',');) {
            try {
                v.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw CommandFailure{kValidation, "--k-mode: bad number '" + item + "'"};
            }
        }
    }
    if (kind == "constant" && v.size() == 1) return KLaw::constant(v[0]);
    if (kind == "poly" && !v.empty()) return KLaw::polynomial(v);
    throw CommandFailure{kValidation, "--k-mode: expected griffith, constant:K or poly:c0,c1,..., got '" + m + "'"};
}

Json options_json(const RunConfig& c) {
    Json j{{"out", c.out}, {"seed", c.seed}};
    if (!c.scenario.empty()) j["scenario"] = c.scenario;
    if (c.tol) j["tol"] = *c.tol;
    if (!c.eps_seq.empty()) j["eps_seq"] = c.eps_seq;
    if (!c.grid.empty()) j["grid"] = c.grid;
    if (!c.k_mode.empty()) j["k_mode"] = c.k_mode;
    if (!c.window.empty()) j["window"] = c.window;
    if (c.command == "solve") j["init"] = c.init;
    return j;
}

class Command {
public:
    explicit Command(const RunConfig& c) : cfg_(c), dir_(c.out) {
        manifest_ = make_manifest(c.which.empty() ? c.command : c.command + " " + c.which, nullptr);
        manifest_["options"] = options_json(c);
    }

    // Loads and validates the scenario; invalid scenarios end the command with exit 1.
    const Scenario& scenario() {
        if (sc_) return *sc_;
        if (cfg_.scenario.empty()) throw CommandFailure{kValidation, "--scenario is required for this command"};
        sc_ = load_scenario(cfg_.scenario);
        const Json echo = make_manifest("", &*sc_);
        manifest_["scenario"] = echo["scenario"];
        ValidationOptions vo;
        vo.min_tip_distance = sc_->min_tip_distance;
        validation_ = validate_scenario(*sc_->problem, vo);
        const ValidationReport& r = validation_;
        dir_.write("validation.json", to_json(r));
        dir_.write("validation.csv", validation_csv(r));
        if (!r.pass) {
            std::cout << format_validation(r);
            finish(false);
            throw CommandFailure{kValidation, "scenario " + cfg_.scenario + " is invalid"};
        }
        return *sc_;
    }

    std::shared_ptr<Pipeline> pipeline() {
        const Scenario& s = scenario();
        auto pl = std::make_shared<Pipeline>(s.problem, s.charts);
        Json eta = Json::array();
        for (const auto& w : pl->windows()) eta.push_back(w.eta());
        manifest_["charts"] = {{"rho", pl->rho()}, {"halvings", pl->halvings()}, {"windows", pl->windows().size()},
                               {"eta", eta}};
        return pl;
    }

    double tol(double def) {
        const double t = cfg_.tol.value_or(def);
        manifest_["tolerances"]["tol"] = t;
        return t;
    }
    void tolerance(const std::string& name, double v) { manifest_["tolerances"][name] = v; }
    const ReportDir& dir() const { return dir_; }
    const RunConfig& cfg() const { return cfg_; }
    const ValidationReport& validation() const { return validation_; }

    void finish(bool pass) {
        manifest_["pass"] = pass;
        dir_.write("manifest.json", manifest_);
    }

private:
    RunConfig cfg_;
    ReportDir dir_;
    Json manifest_;
    std::optional<Scenario> sc_;
    ValidationReport validation_;
};

void say(bool pass, const std::string& line) { std::cout << (pass ? "PASS  " : "FAIL  ") << line << '\n'; }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- validate

int cmd_validate(const RunConfig& c) {
    Command cmd(c);
    cmd.scenario();
    std::cout << format_validation(cmd.validation());
    cmd.finish(true);
    return kOk;
}

// ---------------------------------------------------------------- audits

int audit_fondlem(Command& cmd) {
    const double tol = cmd.tol(1e-4);
    std::vector<double> eps = cmd.cfg().eps_seq;
    if (eps.empty()) eps = {1e-1, 1e-2, 1e-3, 1e-4};
    const auto one = [](const Vec2&) { return 1.0; };
    const auto zero_mod = [](double) { return 0.0; };
    const FondlemTable tab = fondlem_audit(one, 1, zero_mod, -1, 1, eps);
    cmd.dir().write("fondlem.csv", fondlem_csv(tab));
    cmd.dir().write("fondlem.json", to_json(tab));
    for (const auto& r : tab.rows)
        std::cout << "eps " << fmt(r.eps) << "  value " << fmt(r.value) << "  |value - pi| " << fmt(r.deviation)
                  << "  bound " << fmt(r.bound) << (r.within ? "" : "  EXCEEDED") << '\n';
    const double lim_err = std::abs(tab.limit - tab.target);
    const bool pass = tab.all_within && lim_err <= tol;
    say(pass, "fondlem: extrapolated limit " + fmt(tab.limit) + ", |limit - pi g(0)| = " + fmt(lim_err) +
                  " (tol " + fmt(tol) + ")");
    cmd.finish(pass);
    if (!pass) {
        const FondlemRow* worst = &tab.rows.front();
        for (const auto& r : tab.rows)
            if (r.deviation - r.bound > worst->deviation - worst->bound) worst = &r;
        throw CommandFailure{kAudit, "fondlem audit failed; worst eps " + fmt(worst->eps) + ": deviation " +
                                         fmt(worst->deviation) + " vs bound " + fmt(worst->bound)};
    }
    return kOk;
}

int audit_ellipticity(Command& cmd) {
    const double tol = cmd.tol(1e-10);
    const auto g = parse_grid(cmd.cfg().grid, {20, 50, 50});
    auto pl = cmd.pipeline();
    const EllipticityAudit a = ellipticity_audit(*pl, g[0], g[1], g[2]);
    cmd.dir().write("ellipticity.csv", ellipticity_csv(a));
    cmd.dir().write("ellipticity.json", to_json(a));
    const bool pass = a.c4 > 0 && a.claim2_residual <= tol;
    say(pass, "ellipticity: min eigenvalue of A4 " + fmt(a.c4) + ", max |A4(t, 0) - I| " + fmt(a.claim2_residual) +
                  " (tol " + fmt(tol) + ")");
    cmd.finish(pass);
    if (!pass)
        throw CommandFailure{kAudit, "ellipticity audit failed; worst sample t = " + fmt(a.worst_t) + ", x = (" +
                                         fmt(a.worst_x.x()) + ", " + fmt(a.worst_x.y()) + ")"};
    return kOk;
}

int audit_tipflux(Command& cmd) {
    const double tol = cmd.tol(0.02);
    std::vector<double> eps = cmd.cfg().eps_seq;
    if (eps.empty()) eps = {1e-1, 1e-2, 1e-3, 1e-4};
    const Scenario& sc = cmd.scenario();
    const double T = sc.problem->T(), t = 0.5 * T;
    TipFluxSetup setup{sc.problem, parse_k_mode(cmd.cfg().k_mode, sc.problem, "constant:" + std::to_string(2 / std::sqrt(pi))),
                       0.5, T};
    const TipFluxResult r = tip_flux_limit(setup, t, eps);
    cmd.dir().write("tipflux.csv", tipflux_csv(r));
    cmd.dir().write("tipflux.json", to_json(r));
    auto rel = [](double v, double target) {
        return target == 0 ? std::abs(v) : std::abs(v - target) / std::abs(target);
    };
    const double e = rel(r.limit, r.target), ep = rel(r.limit_plus, r.target / 2), em = rel(r.limit_minus, r.target / 2);
    const bool pass = e <= tol && ep <= tol && em <= tol;
    say(pass, "tipflux at t = " + fmt(t) + ": limit " + fmt(r.limit) + " vs " + fmt(r.target) + " (rel " + fmt(e) +
                  "), halves " + fmt(r.limit_plus) + " / " + fmt(r.limit_minus) + " (tol " + fmt(tol) + ")");
    cmd.finish(pass);
    if (!pass) {
        const TipFluxRow& last = r.rows.back();
        throw CommandFailure{kAudit, "tip flux audit failed; finest eps " + fmt(last.eps) + ": I = " + fmt(last.total)};
    }
    return kOk;
}

int audit_wbound(Command& cmd) {
    const double bound = -0.6;
    cmd.tolerance("min_exponent", bound);
    const auto g = parse_grid(cmd.cfg().grid, {13, 48});
    auto pl = cmd.pipeline();
    const double t = 0.5 * cmd.scenario().problem->T();
    const WBoundAudit a = w_bound_audit(*pl, t, 1e-4, 1e-1, g[0], g[1]);
    cmd.dir().write("wbound.csv", wbound_csv(a));
    cmd.dir().write("wbound.json", to_json(a));
    const bool pass = a.hess_exponent >= bound;
    say(pass, "wbound at t = " + fmt(t) + ": fitted exponent of max |D2 w| " + fmt(a.hess_exponent) + " (>= " +
                  fmt(bound) + ")");
    cmd.finish(pass);
    if (!pass) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < a.radius.size(); ++i)
            if (a.max_hess[i] * std::sqrt(a.radius[i]) > a.max_hess[worst] * std::sqrt(a.radius[worst])) worst = i;
        throw CommandFailure{kAudit, "wbound audit failed; worst radius " + fmt(a.radius[worst]) + ": |D2 w| = " +
                                         fmt(a.max_hess[worst])};
    }
    return kOk;
}

// ---------------------------------------------------------------- balance

int cmd_balance(Command& cmd) {
    const auto g = parse_grid(cmd.cfg().grid, {20});
    EnergyConfig ec;
    ec.n_t = g[0];
    ec.time_gauss = 4;
    ec.space_tol = 1e-6;
    ec.balance_rel_tol = cmd.tol(ec.balance_rel_tol);
    std::shared_ptr<Pipeline> pl;
    try {
        pl = cmd.pipeline();
    } catch (const WindowError& e) {
        cmd.finish(false);
        throw CommandFailure{kBalance, std::string("window subdivision failed: ") + e.what()};
    }
    const Scenario& sc = cmd.scenario();
    const KLaw k = parse_k_mode(cmd.cfg().k_mode, sc.problem, "griffith");
    const MmsField mms(pl, k, 0.2);
    const EnergyReport r = run_mms(mms, ec);
    cmd.dir().write("energy_trace.csv", energy_csv(r));
    cmd.dir().write("balance.json", to_json(r));
    say(r.generalized_holds, "generalized balance: max |R_gen| " + fmt(r.max_abs_R_gen) + " (tol " + fmt(r.tol) + ")");
    const bool griffith_mode = k.mode() == KLaw::Mode::Griffith;
    bool pass = r.generalized_holds;
    if (r.griffith_holds) {
        say(true, "Griffith balance: max |R_G| " + fmt(r.max_abs_R_G));
    } else if (!griffith_mode && r.griffith_offset_predicted) {
        std::cout << "XFAIL Griffith balance: max |R_G| " << fmt(r.max_abs_R_G)
                  << " matches the offset predicted for k != 2/sqrt(pi a) (expected-failure mode)\n";
    } else {
        say(false, "Griffith balance: max |R_G| " + fmt(r.max_abs_R_G) + " (tol " + fmt(r.tol) + ")");
        pass = false;
    }
    cmd.finish(pass);
    if (!pass) throw CommandFailure{kBalance, "energy balance failed for k = " + k.name()};
    return kOk;
}

// ---------------------------------------------------------------- solve

void write_snapshot(const ReportDir& dir, const std::string& name, const WaveSolver& ws, const WaveState& s) {
    CsvTable t{{"y1", "y2", "side", "v", "vt"}, {}};
    const auto& x = ws.mesh().vertices();
    for (std::size_t i = 0; i < x.size(); ++i)
        t.add({x[i].x(), x[i].y(), double(ws.mesh().side()[i]), s.v(Eigen::Index(i)), s.vd(Eigen::Index(i))});
    dir.write(name, t);
}

int cmd_solve(Command& cmd) {
    auto pl = cmd.pipeline();
    const ChartWindow& w = pl->windows().front();
    const std::string& init = cmd.cfg().init;
    const auto levels = parse_grid(cmd.cfg().grid, {3})[0];
    if (init == "zero") {
        const ZeroRun z = zero_data_run(w, 0.2, 10);
        CsvTable t{{"t", "energy", "max_abs"}, {}};
        double worst = 0;
        for (std::size_t i = 0; i < z.t.size(); ++i) {
            t.add({z.t[i], z.energy[i], z.max_abs[i]});
            worst = std::max(worst, z.max_abs[i]);
        }
        cmd.dir().write("zero_trace.csv", t);
        const bool pass = worst == 0;
        say(pass, "zero data: max |v|, |v_t| over the run " + fmt(worst));
        cmd.finish(pass);
        if (!pass) throw CommandFailure{kSolver, "zero data produced a nonzero solution"};
        return kOk;
    }
    if (init == "mms") {
        const double min_order = 1.8;
        cmd.tolerance("min_order", min_order);
        std::vector<double> hs;
        for (int i = 0; i < levels; ++i) hs.push_back(0.4 / std::pow(2.0, i));
        const ConvergenceStudy st = mms_convergence(w, hs);
        CsvTable t{{"h", "vertices", "triangles", "steps", "dt", "l2_error", "order"}, {}};
        for (const auto& r : st.runs) {
            t.add({r.h, double(r.vertices), double(r.triangles), double(r.steps), r.dt, r.l2_error, r.order});
            std::cout << "h " << fmt(r.h) << "  vertices " << r.vertices << "  L2 error " << fmt(r.l2_error)
                      << "  order " << fmt(r.order) << '\n';
        }
        cmd.dir().write("convergence.csv", t);
        const bool pass = st.min_order >= min_order;
        say(pass, "manufactured solution: observed L2 order " + fmt(st.min_order) + " (>= " + fmt(min_order) + ")");
        cmd.finish(pass);
        if (!pass) throw CommandFailure{kSolver, "convergence order below " + fmt(min_order)};
        return kOk;
    }
    if (init == "singular") {
        const double tol = cmd.tol(0.05);
        const std::vector<double> win = cmd.cfg().window.empty() ? std::vector<double>{0.05, 0.3} : cmd.cfg().window;
        if (win.size() != 2 || !(win[0] > 0 && win[1] > win[0]))
            throw CommandFailure{kValidation, "--window: expected rho1,rho2 with 0 < rho1 < rho2"};
        std::vector<double> hs;
        for (int i = 0; i < levels; ++i) hs.push_back(0.2 / std::pow(2.0, i));
        const SingularStudy st = singular_sif_study(pl, 0, 1.0, hs, win[0], win[1]);
        CsvTable t{{"h", "h_tip", "vertices", "steps", "k_projection", "err_projection", "k_jump", "err_jump"}, {}};
        Json runs = Json::array();
        for (const auto& r : st.runs) {
            t.add({r.h, r.h_tip, double(r.vertices), double(r.steps), r.projection.k, r.projection.error_bar, r.jump.k,
                   r.jump.error_bar});
            runs.push_back({{"h", r.h}, {"projection", to_json(r.projection)}, {"jump", to_json(r.jump)}});
            std::cout << "h " << fmt(r.h) << "  vertices " << r.vertices << "  k_proj " << fmt(r.projection.k)
                      << "  k_jump " << fmt(r.jump.k) << '\n';
        }
        cmd.dir().write("sif_mesh.csv", t);
        cmd.dir().write("sif_mesh.json", Json{{"t", st.t},
                                              {"k_exact", st.k_exact},
                                              {"rho1", st.rho1},
                                              {"rho2", st.rho2},
                                              {"mesh_change", st.mesh_change},
                                              {"runs", runs}});
        const bool pass = st.runs.size() >= 2 && st.mesh_change <= tol;
        say(pass, "singular field: SIF change between the two finest meshes " + fmt(st.mesh_change) + " (tol " +
                      fmt(tol) + "), exact k " + fmt(st.k_exact));
        cmd.finish(pass);
        if (!pass) throw CommandFailure{kSolver, "SIF is not mesh-stable"};
        return kOk;
    }
    throw CommandFailure{kValidation, "--init: expected zero, mms or singular, got '" + init + "'"};
}

int dispatch(const RunConfig& c) {
    if (c.command == "validate") return cmd_validate(c);
    Command cmd(c);
    if (c.command == "audit") {
        try {
            if (c.which == "fondlem") return audit_fondlem(cmd);
            if (c.which == "ellipticity") return audit_ellipticity(cmd);
            if (c.which == "tipflux") return audit_tipflux(cmd);
            if (c.which == "wbound") return audit_wbound(cmd);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw CommandFailure{kAudit, std::string("audit ") + c.which + " failed: " + e.what()};
        }
        throw CommandFailure{kValidation, "unknown audit '" + c.which + "'"};
    }
    if (c.command == "balance") {
        try {
            return cmd_balance(cmd);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw CommandFailure{kBalance, std::string("balance failed: ") + e.what()};
        }
    }
    if (c.command == "solve") {
        try {
            return cmd_solve(cmd);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw CommandFailure{kSolver, std::string("solve failed: ") + e.what()};
        }
    }
    throw CommandFailure{kValidation, "no command given"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crackflux: energy balance audits for moving anti-plane cracks"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig c;
    app.add_option("--scenario", c.scenario, "Scenario file")->check(CLI::ExistingFile);
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--tol", c.tol, "Command tolerance (see docs/formats.md)")->check(CLI::PositiveNumber);
    app.add_option("--eps-seq", c.eps_seq, "Comma-separated eps sequence")->delimiter(',');
    app.add_option("--grid", c.grid, "Grid sizes, e.g. 20x50x50");
    app.add_option("--seed", c.seed, "Random seed, recorded in the manifest");
    app.add_option("--k-mode", c.k_mode, "griffith | constant:K | poly:c0,c1,...");
    app.add_option("--window", c.window, "SIF annulus rho1,rho2")->delimiter(',');

    app.add_subcommand("validate", "Check a scenario against the standing assumptions");
    auto* audit = app.add_subcommand("audit", "Run one numerical audit");
    audit->add_option("which", c.which, "ellipticity | fondlem | tipflux | wbound")
        ->required()
        ->check(CLI::IsMember({"ellipticity", "fondlem", "tipflux", "wbound"}));
    app.add_subcommand("balance", "Energy balance of the manufactured solution over [0, T]");
    auto* solve = app.add_subcommand("solve", "Finite element runs on the transformed domain");
    solve->add_option("--init", c.init, "zero | mms | singular")
        ->check(CLI::IsMember({"zero", "mms", "singular"}))
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    c.command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(c);
    } catch (const CommandFailure& f) {
        std::cerr << "crackflux: " << f.message << '\n';
        return f.code;
    } catch (const ParseError& e) {
        std::cerr << "crackflux: parse error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "crackflux: " << e.what() << '\n';
        return kValidation;
    }
}
