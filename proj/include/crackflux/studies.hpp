#pragma once

#include "crackflux/sif.hpp"
#include "crackflux/solver.hpp"

#include <memory>
#include <vector>

namespace crackflux {

// cos(2t) sin(pi (y1 - x0) / W) cos(pi y2 / (2H)) on the rectangle r (H = y1, symmetric rectangle).
VField smooth_mode(const RectSlit& r);
// k chi(|y|) S(y): chi = 1 for |y| <= r_in, 0 for |y| >= r_out (quintic smoothstep). Time independent.
VField singular_mode(double k, double r_in, double r_out);

struct SolveRun {
    double h = 0, h_tip = 0, dt = 0;
    std::size_t vertices = 0, triangles = 0;
    int steps = 0;
    double l2_error = 0, order = 0;  // order against the previous (coarser) run, 0 for the first
    double max_residual = 0;
};

struct ConvergenceStudy {
    std::vector<SolveRun> runs;
    double min_order = 0;
};

// Smooth manufactured solution on the window's transformed rectangle, integrated from t0 to t1
// with dt = h / 2 on uniform meshes of size h.
ConvergenceStudy mms_convergence(const ChartWindow& w, const std::vector<double>& hs);

struct ZeroRun {
    std::vector<double> t, energy, max_abs;
};
ZeroRun zero_data_run(const ChartWindow& w, double h, int steps);

struct SingularRun {
    double h = 0, h_tip = 0;
    std::size_t vertices = 0;
    int steps = 0;
    SifEstimate projection, jump;
};

struct SingularStudy {
    double t = 0, k_exact = 0, rho1 = 0, rho2 = 0;
    std::vector<SingularRun> runs;
    double mesh_change = 0;  // |k_last - k_previous| / |k_last| (projection)
    double max_residual = 0;
};

// Discrete solution of the singular manufactured field on graded meshes of base size h
// (tip size h / tip_ratio), SIF extracted on the pullback at t1 on the annulus [rho1, rho2].
SingularStudy singular_sif_study(std::shared_ptr<const Pipeline> pl, int window, double k, const std::vector<double>& hs,
                                 double rho1, double rho2, double tip_ratio = 64);

}  // namespace crackflux
