// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
#include "crackflux/charts.hpp"
#include "crackflux/energy.hpp"
#include "crackflux/quad.hpp"
#include "crackflux/scenario.hpp"
#include "crackflux/sif.hpp"
#include "crackflux/studies.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

using namespace crackflux;

namespace {

constexpr double pi = std::numbers::pi;
const double k_gr = 2 / std::sqrt(pi);

// Tolerances
constexpr double kFondlemLimitTol = 1e-4;
constexpr double kTipFluxRel = 0.02;
constexpr double kBalanceRel = 1e-2;     // residual relative to max E
constexpr double kOffsetRel = 0.02;
constexpr double kAnisoTol = 1e-12;
constexpr double kClaim2Tol = 1e-10;
constexpr double kHessExponent = -0.6;
constexpr double kSifSpread = 1e-2;
constexpr double kMinOrder = 1.8;
constexpr double kEnergyDrift = 1e-8;

ProblemPtr scenario(const char* name) {
    return load_scenario(std::string(CRACKFLUX_TEST_DATA) + "/" + name).problem;
}

EnergyConfig energy_config() {
    EnergyConfig c;
    c.n_t = 20;
    c.time_gauss = 4;
    c.space_tol = 1e-6;
    c.balance_rel_tol = kBalanceRel;
    return c;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& run) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = run();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), sec);
    std::fflush(stdout);
    failures += !o.pass;
}

std::string fmt(const char* f, auto... a) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Shared by criteria 3 and 4.
struct StraightRuns {
    EnergyReport griffith, unit;
};
const StraightRuns& straight_runs() {
    static const StraightRuns runs = [] {
        auto pl = std::make_shared<Pipeline>(scenario("straight.scn"), ChartConfig{});
        StraightRuns r;
        r.griffith = run_mms(MmsField(pl, KLaw::constant(k_gr), 0.2), energy_config());
        r.unit = run_mms(MmsField(pl, KLaw::constant(1), 0.2), energy_config());
        return r;
    }();
    return runs;
}

Outcome check_fondlem() {
    const auto tab = fondlem_audit([](const Vec2&) { return 1.0; }, 1, [](double) { return 0.0; }, -1, 1,
                                   {1e-1, 1e-2, 1e-3, 1e-4});
    double worst = 0;
    for (const auto& r : tab.rows) worst = std::max(worst, r.deviation / r.bound);
    const double lim = std::abs(tab.limit - pi);
    return {tab.all_within && lim <= kFondlemLimitTol,
            fmt("max |value-pi|/bound %.3g over 4 eps, |limit-pi| %.2e (tol %.0e)", worst, lim, kFondlemLimitTol)};
}

Outcome check_tip_flux() {
    TipFluxSetup s{scenario("straight.scn"), KLaw::constant(k_gr), 0.5, 1};
    const auto r = tip_flux_limit(s, 0.5, {1e-1, 1e-2, 1e-3, 1e-4});
    const double target = pi / 4 * k_gr * k_gr * 0.5, half = target / 2;
    const double e = std::abs(r.limit - target) / target;
    const double ep = std::abs(r.limit_plus - half) / half, em = std::abs(r.limit_minus - half) / half;
    return {e <= kTipFluxRel && ep <= kTipFluxRel && em <= kTipFluxRel,
            fmt("limit %.5f vs %.5f (rel %.2e), halves %.5f/%.5f vs %.5f (tol %.0f%%)", r.limit, target, e,
                r.limit_plus, r.limit_minus, half, 100 * kTipFluxRel)};
}

Outcome check_generalized() {
    const auto& r = straight_runs();
    const double a = max_abs(r.griffith.R_gen) / r.griffith.max_E, b = max_abs(r.unit.R_gen) / r.unit.max_E;
    return {a <= kBalanceRel && b <= kBalanceRel && r.griffith.t.size() >= 20,
            fmt("max |R_gen|/max E = %.2e (k=2/sqrt(pi)), %.2e (k=1) on %zu times (tol %.0e)", a, b,
                r.griffith.t.size(), kBalanceRel)};
}

Outcome check_griffith() {
    const auto& r = straight_runs();
    const double a = max_abs(r.griffith.R_G) / r.griffith.max_E;
    const Problem& pb = *scenario("straight.scn");
    double worst = 0;
    for (std::size_t i = 0; i < r.unit.t.size(); ++i) {
        const double ds = pb.law.eval(r.unit.t[i]).s - pb.law.eval(0).s;
        if (ds <= 0) continue;
        const double predicted = (1 - pi / 4) * ds;
        worst = std::max(worst, std::abs(r.unit.R_G[i] - predicted) / predicted);
    }
    return {a <= kBalanceRel && worst <= kOffsetRel,
            fmt("k=2/sqrt(pi): max |R_G|/max E = %.2e; k=1: R_G vs (1-pi/4) ds rel %.2e (tol %.0f%%)", a, worst,
                100 * kOffsetRel)};
}

Outcome check_anisotropy() {
    const GrowthLaw g({1, 0.5}, 1);
    const SegmentPath horiz({-2, 0}, {1, 0}, 4), vert({0, -2}, {0, 1}, 4);
    const auto I = make_identity(), D = make_diagonal(4, 1);
    double dI = 0, dh = 0, dv = 0;
    for (int i = 0; i <= 10; ++i) {
        const double t = 0.1 * i;
        dI = std::max(dI, std::abs(a_factor(t, horiz, g, *I) - 1));
        dh = std::max(dh, std::abs(a_factor(t, horiz, g, *D) - 1));
        dv = std::max(dv, std::abs(a_factor(t, vert, g, *D) - 4));
    }
    // balance with k = 2 / sqrt(pi a) on a general constant A (a is constant along the straight crack)
    auto pb = scenario("aniso.scn");
    auto pl = std::make_shared<Pipeline>(pb, ChartConfig{});
    const double a = a_factor(0, *pb->path, pb->law, *pb->A);
    const double a_chart = a_factor_chart(0, *pb->path, pb->law, *pb->A);
    EnergyConfig ec = energy_config();
    ec.n_t = 5;
    const KLaw k = KLaw::griffith(pb);
    const EnergyReport r = run_mms(MmsField(pl, k, 0.2), ec);
    const double rg = max_abs(r.R_gen) / r.max_E, rG = max_abs(r.R_G) / r.max_E;
    // flux factor realized by the run: a (D - R_gen) / D, D being the predicted dissipation
    const std::size_t n = r.t.size() - 1;
    const double realized = a * (r.D[n] - r.R_gen[n]) / r.D[n];
    return {dI == 0 && dh <= kAnisoTol && dv <= kAnisoTol && rg <= kBalanceRel && rG <= kBalanceRel,
            fmt("|a-1| for I %.1e, diag(4,1) horizontal %.1e; |a-4| vertical %.1e; general A: R_gen %.2e, R_G %.2e "
                "of max E (tol %.0e), flux factor realized %.6f vs a = %.6f, |A^-1/2 t| sqrt(det A) = %.6f",
                dI, dh, dv, rg, rG, kBalanceRel, realized, a, a_chart)};
}

Outcome check_ellipticity() {
    Pipeline pl(scenario("straight_fast.scn"), ChartConfig{});
    const auto a = ellipticity_audit(pl, 20, 50, 50);
    return {a.c4 > 0 && a.claim2_residual <= kClaim2Tol,
            fmt("min eig A4 = %.4f over 20x50x50, max |A4(t,0)-I| = %.1e (tol %.0e)", a.c4, a.claim2_residual,
                kClaim2Tol)};
}

Outcome check_wbound() {
    Pipeline pl(scenario("arc_cap.scn"), ChartConfig{});
    const auto a = w_bound_audit(pl, 0.5, 1e-4, 1e-1);
    return {a.hess_exponent >= kHessExponent,
            fmt("fitted exponent of max |D2 w| over [1e-4, 1e-1]: %.3f (>= %.1f)", a.hess_exponent, kHessExponent)};
}

Outcome check_sif() {
    // synthetic: exact singular field, three annuli
    auto straight = scenario("straight.scn");
    SingularField sfs(straight);
    const auto S = hat_basis(sfs, 0.5);
    const ScalarField us = [&](const Vec2& x) { return k_gr * S(x) + 0.3 + 0.1 * x.x(); };
    const auto syn = invariance_audit(us, sfs, 0.5,
                                      {{"annulus 1", nullptr, 5e-3, 5e-2},
                                       {"annulus 2", nullptr, 1e-2, 1e-1},
                                       {"annulus 3", nullptr, 2e-3, 2e-2}},
                                      kSifSpread);
    const double syn_rel = syn.spread / k_gr, syn_cross = syn.cross / k_gr;

    // manufactured field on a curved crack, four chart constructions
    auto pb = scenario("arc_cap.scn");
    ChartConfig c1, c2, c3;
    c2.lambda_in = 0.25;
    c2.lambda_out = 0.6;
    auto p1 = std::make_shared<Pipeline>(pb, c1);
    auto p2 = std::make_shared<Pipeline>(pb, c2);
    const double t = 0.5;
    c3.eta = 0.5 * p1->window(t).eta();
    auto p3 = std::make_shared<Pipeline>(pb, c3);
    const MmsField m(p1, KLaw::constant(1), 0.1);
    SingularField sf(pb);
    const ScalarField u = [&](const Vec2& x) { return m.eval(t, x).u; };
    const auto mms = invariance_audit(u, sf, t,
                                      {{"hat", nullptr, 2e-4, 2e-3},
                                       {"lambda default", p1, 2e-4, 2e-3},
                                       {"lambda narrow", p2, 2e-4, 2e-3},
                                       {"eta half", p3, 2e-4, 2e-3}},
                                      kSifSpread);
    double kmax = 0;
    for (const auto& e : mms.projection) kmax = std::max(kmax, std::abs(e.k));
    const double mms_rel = mms.spread / kmax, mms_cross = mms.cross / kmax;
    const bool pass = syn_rel <= kSifSpread && syn_cross <= kSifSpread && mms_rel <= kSifSpread &&
                      mms_cross <= kSifSpread && mms.projection.size() >= 3;
    return {pass, fmt("synthetic spread %.1e, jump/proj %.1e; arc MMS %zu variants spread %.1e, jump/proj %.1e "
                      "(tol %.0f%%)",
                      syn_rel, syn_cross, mms.projection.size(), mms_rel, mms_cross, 100 * kSifSpread)};
}

Outcome check_solver() {
    auto pl = std::make_shared<Pipeline>(scenario("straight.scn"), ChartConfig{});
    const ChartWindow& w = pl->windows().front();
    const ZeroRun z = zero_data_run(w, 0.2, 10);
    const double zmax = max_abs(z.max_abs);
    const ConvergenceStudy c = mms_convergence(w, {0.4, 0.2, 0.1});

    // undriven constant coefficients, Neumann square, run over one period of the slowest mode
    RectSlit sq{0, 1, 0, 1, 0, {false, false, false, false}};
    auto mesh = std::make_shared<SlitMesh>(SlitMesh::build(sq, 0.1, 0.1));
    WaveSolver ws(mesh, std::make_shared<ConstantCoefficients>(Mat2{{1.5, 0.2}, {0.2, 1}}));
    WaveState s = ws.initial(0, ws.interpolate([](const Vec2& y) { return std::exp(-20 * (y - Vec2(0.7, 0.2)).squaredNorm()); }),
                             ws.interpolate([](const Vec2& y) { return y.y(); }));
    const double E0 = ws.energy(s), period = 2.2;
    const int steps = 110;
    double drift = 0;
    for (int i = 0; i < steps; ++i) {
        s = ws.step(s, period / steps);
        drift = std::max(drift, std::abs(ws.energy(s) - E0) / E0);
    }
    return {zmax == 0 && c.min_order >= kMinOrder && drift <= kEnergyDrift,
            fmt("zero data max %.1e; MMS L2 errors %.2e/%.2e/%.2e, min order %.2f (>= %.1f); energy drift %.1e (tol %.0e)",
                zmax, c.runs[0].l2_error, c.runs[1].l2_error, c.runs[2].l2_error, c.min_order, kMinOrder, drift,
                kEnergyDrift)};
}

}  // namespace

int main() {
    criterion(1, "half-plane limit", check_fondlem);
    criterion(2, "tip flux coefficient", check_tip_flux);
    criterion(3, "generalized energy identity", check_generalized);
    criterion(4, "Griffith criterion", check_griffith);
    criterion(5, "anisotropy factor", check_anisotropy);
    criterion(6, "ellipticity of the transformed operator", check_ellipticity);
    criterion(7, "regularity of the remainder", check_wbound);
    criterion(8, "SIF invariance", check_sif);
    criterion(9, "solver properties", check_solver);
    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
