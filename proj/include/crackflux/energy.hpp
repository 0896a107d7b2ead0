#pragma once

#include "crackflux/fields.hpp"
#include "crackflux/quad.hpp"

#include <functional>
#include <string>
#include <vector>

namespace crackflux {

struct FieldPoint {
    double ut = 0;
    Vec2 grad = Vec2::Zero();
};
using VelocityGradient = std::function<FieldPoint(const Vec2&)>;

struct EnergyValue {
    double E = 0;       // 1/2 int (ut^2 + A grad u . grad u)
    double E_grad = 0;  // 1/2 int (ut^2 + |grad u|^2), when requested
    double error = 0;
};

EnergyValue energy_at(const VelocityGradient& field, const TensorField& A, const SlitQuadrature& q, double tol,
                      bool grad_form = false, std::size_t max_cells = 200000);

// (pi / 4) int_t0^t1 k^2 a sdot.
double dissipation(double t0, double t1, const KLaw& k, const std::function<double(double)>& a, const GrowthLaw& law,
                   double tol = 1e-10);

struct EnergyConfig {
    int n_t = 11;               // uniform time samples (window ends are added)
    double space_tol = 1e-7;
    double time_tol = 1e-8;
    int time_gauss = 0;         // 0: adaptive Gauss-Kronrod per step, else fixed n-point Gauss-Legendre
    int time_sub = 1;           // sub-steps per step with the fixed rule
    bool grad_form = false;     // also report the |grad u|^2 energy
    double balance_rel_tol = 1e-2;
    std::size_t max_cells = 200000;
};

struct EnergyReport {
    std::string k_mode;
    std::vector<double> t, E, E_grad, D, W, H, R_gen, R_G, R_gen_grad, predicted_RG, E_err, W_err;
    std::vector<int> window;
    // E of the next window minus E of the previous one at each interior window boundary
    std::vector<double> window_jump;
    double max_E = 0, max_abs_R_gen = 0, max_abs_R_G = 0, max_abs_R_G_shift = 0, tol = 0;
    bool generalized_holds = false;
    bool griffith_holds = false;
    // R_G matches Delta s - D(t), the offset predicted when k differs from 2 / sqrt(pi a)
    bool griffith_offset_predicted = false;
};

// Manufactured-solution energy audit: u = k xi(Phi) S(Phi) with f = u'' - div(A grad u).
// E increments are summed window by window, each window using its own charts.
EnergyReport run_mms(const MmsField& mms, const EnergyConfig& cfg = {});

}  // namespace crackflux
