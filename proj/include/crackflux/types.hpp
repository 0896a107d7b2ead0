#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace crackflux {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline Vec2 rot90(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CRACKFLUX_ERROR(Name)                  \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    };

CRACKFLUX_ERROR(RangeError)
CRACKFLUX_ERROR(ValidationError)
CRACKFLUX_ERROR(MatrixDomainError)
CRACKFLUX_ERROR(GeometryError)
CRACKFLUX_ERROR(WindowError)
CRACKFLUX_ERROR(BranchError)
CRACKFLUX_ERROR(SingularPointError)
CRACKFLUX_ERROR(QuadratureError)
CRACKFLUX_ERROR(FitError)
CRACKFLUX_ERROR(ParameterError)
CRACKFLUX_ERROR(MeshError)
CRACKFLUX_ERROR(SolverError)
CRACKFLUX_ERROR(ParseError)
CRACKFLUX_ERROR(LocateError)

#undef CRACKFLUX_ERROR

}  // namespace crackflux
