#pragma once

#include "crackflux/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace crackflux {

// Point on the path with derivatives in arc length.
struct CurvePoint {
    Vec2 p, d1, d2, d3;
    Vec2 normal() const { return rot90(d1); }
};

class CrackPath {
public:
    virtual ~CrackPath() = default;

    virtual double length() const = 0;
    // Evaluates without range check; closed-form paths and splines extrapolate past the ends.
    virtual CurvePoint eval(double sigma) const = 0;
    virtual double max_curvature() const = 0;
    virtual bool is_straight() const { return false; }
    virtual std::string kind() const = 0;

    // Range-checked evaluation, 0 <= sigma <= length.
    CurvePoint at(double sigma) const;

    // Parameter of the nearest point, searched in [seed - window, seed + window].
    virtual double project(const Vec2& x, double seed, double window) const;
};

using PathPtr = std::shared_ptr<const CrackPath>;

class SegmentPath final : public CrackPath {
public:
    SegmentPath(Vec2 start, Vec2 direction, double length);
    double length() const override { return len_; }
    CurvePoint eval(double sigma) const override;
    double max_curvature() const override { return 0; }
    bool is_straight() const override { return true; }
    std::string kind() const override { return "segment"; }
    double project(const Vec2& x, double seed, double window) const override;

private:
    Vec2 a_, e_;
    double len_;
};

class ArcPath final : public CrackPath {
public:
    ArcPath(Vec2 center, double radius, double start_angle, bool ccw, double length);
    double length() const override { return len_; }
    CurvePoint eval(double sigma) const override;
    double max_curvature() const override { return 1 / R_; }
    std::string kind() const override { return "arc"; }
    double project(const Vec2& x, double seed, double window) const override;

private:
    Vec2 c_;
    double R_, phi0_, sgn_, len_;
};

// Clamped quintic interpolating spline through points, reparametrized by arc length.
class SplinePath final : public CrackPath {
public:
    // Optional end tangents (zero vector means estimate from data).
    explicit SplinePath(std::vector<Vec2> points, Vec2 start_tangent = Vec2::Zero(),
                        Vec2 end_tangent = Vec2::Zero());
    double length() const override { return len_; }
    CurvePoint eval(double sigma) const override;
    double max_curvature() const override { return kmax_; }
    std::string kind() const override { return "spline"; }

    // Underlying chord-length parametrized spline and its derivatives (order 0..3).
    void eval_u(double u, Vec2 out[4]) const;
    double u_of_sigma(double sigma) const;

private:
    struct Coeffs {
        double a[6];
    };
    std::vector<double> u_;           // knots
    std::vector<Coeffs> cx_, cy_;     // per-segment coefficients in tau in [0,1]
    std::vector<double> cum_;         // arc length at knots
    double len_ = 0, kmax_ = 0;

    int segment_of_u(double u) const;
    double speed(double u) const;
    double arc_from_knot(int seg, double u) const;
};

class Domain {
public:
    Domain() = default;
    explicit Domain(std::vector<Vec2> polygon, std::vector<int> dirichlet_edges = {});

    const std::vector<Vec2>& vertices() const { return v_; }
    const std::vector<int>& dirichlet_edges() const { return dirichlet_; }
    bool contains(const Vec2& x) const;
    double boundary_distance(const Vec2& x) const;
    double area() const;
    double diameter() const;
    Vec2 lo() const { return lo_; }
    Vec2 hi() const { return hi_; }
    bool is_simple() const;

private:
    std::vector<Vec2> v_;
    std::vector<int> dirichlet_;
    Vec2 lo_ = Vec2::Zero(), hi_ = Vec2::Zero();
};

struct GrowthState {
    double s = 0, sd = 0, sdd = 0, sddd = 0;
};

// s(t) = sum_i c_i t^i on [0, T].
class GrowthLaw {
public:
    GrowthLaw() = default;
    GrowthLaw(std::vector<double> coeffs, double T);

    GrowthState eval(double t) const;  // range-checked
    GrowthState eval_unchecked(double t) const;
    double T() const { return T_; }
    const std::vector<double>& coeffs() const { return c_; }
    double max_speed(int samples = 1001) const;

private:
    std::vector<double> c_;
    double T_ = 0;
};

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace crackflux
