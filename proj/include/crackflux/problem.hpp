#pragma once

#include "crackflux/geom.hpp"
#include "crackflux/material.hpp"

#include <cmath>
#include <memory>

namespace crackflux {

// Geometry, growth law and coefficients of one scenario.
struct Problem {
    Domain domain;
    PathPtr path;
    GrowthLaw law;
    FieldPtr A;
    double c0 = 1;
    double delta = 0.5;

    double c1() const { return std::sqrt(delta / c0); }
    double T() const { return law.T(); }
    Vec2 tip(double t) const { return path->at(law.eval(t).s).p; }
    CurvePoint tip_frame(double t) const { return path->at(law.eval(t).s); }
};

using ProblemPtr = std::shared_ptr<const Problem>;

}  // namespace crackflux
