#pragma once

#include "crackflux/fields.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace crackflux {

// Displacement at a fixed time.
using ScalarField = std::function<double(const Vec2&)>;
// Displacement as a function of time and position.
using FieldAtTime = std::function<ScalarField(double t)>;

struct SifEstimate {
    double k = 0;
    double correction = 0;  // curvature coefficient c of the jump model (jump extractor only)
    double residual = 0;    // weighted RMS of the fit residual
    double error_bar = 0;   // heuristic standard error of k
    double rho1 = 0, rho2 = 0;
    double condition = 0;   // condition number of the normal equations
    int samples = 0;
};

struct SifOptions {
    int n_jump = 20;             // log-spaced lip stations
    double lip_offset = 1e-8;    // normal offset of the lip samples, relative to the station distance
    int n_radial = 8, radial_panels = 2;
    int n_angular = 16, angular_panels = 4;
    double max_condition = 1e12;
};

// Default fit window [1e-3, 1e-2] times the domain diameter.
std::pair<double, double> default_sif_window(const Problem& pb);

// Fit of u+ - u- at arc lengths sigma in [s1, s2] behind the tip against k J(sigma)(1 + c sigma),
// J the lip jump of the tip singular field.
SifEstimate extract_sif_jump(const ScalarField& u, const SingularField& sf, double t, double s1, double s2,
                             const SifOptions& opt = {});

// Singular basis function used by the projection extractor.
using SingularBasis = std::function<double(const Vec2&)>;
SingularBasis hat_basis(const SingularField& sf, double t);
// S(Phi(t, x)) for a given chart construction.
SingularBasis chart_basis(std::shared_ptr<const Pipeline> pl, double t);

// Weighted least squares of u against {1, x1 - r1, x2 - r2, S} over polar quadrature nodes of
// the annulus rho1 < |x - r(t)| < rho2; k is the coefficient of S.
SifEstimate extract_sif_projection(const ScalarField& u, const SingularField& sf, double t, double rho1, double rho2,
                                   const SifOptions& opt = {}, const SingularBasis& basis = {});

// One construction variant of the audit: a chart pipeline (null: linearized field) and an annulus.
struct SifVariant {
    std::string name;
    std::shared_ptr<const Pipeline> pipeline;
    double rho1 = 0, rho2 = 0;
};

struct InvarianceReport {
    std::vector<std::string> names;
    std::vector<SifEstimate> projection;
    SifEstimate jump;
    double spread = 0;          // max |k_i - k_j| over the projection variants
    double cross = 0;           // |k_jump - mean k_proj|
    double tolerance = 0;       // 2 fit_tol max |k|
    bool pass = false;
};

InvarianceReport invariance_audit(const ScalarField& u, const SingularField& sf, double t,
                                  const std::vector<SifVariant>& variants, double fit_tol = 1e-2,
                                  const SifOptions& opt = {});

struct SifTrace {
    std::vector<double> t;
    std::vector<SifEstimate> jump, projection;
    double max_disagreement = 0;  // max |k_jump - k_proj| / max(1, |k_proj|)
    double max_window_jump = 0;   // max change of k_proj across chart-window boundaries
};

// Both extractors on a time grid, default windows when rho2 = 0.
SifTrace sif_trace(const FieldAtTime& u, const SingularField& sf, const std::vector<double>& times,
                   double rho1 = 0, double rho2 = 0, const SifOptions& opt = {},
                   const Pipeline* windows = nullptr);

}  // namespace crackflux
