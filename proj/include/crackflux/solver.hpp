#pragma once

#include "crackflux/charts.hpp"

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace crackflux {

using SpMat = Eigen::SparseMatrix<double>;

// Rectangle [x0, x1] x [y0, y1] with the slit [x0, tip_x] x {0} (no slit when tip_x <= x0;
// through slit, fully duplicated, when tip_x >= x1). Edge order: bottom, right, top, left.
struct RectSlit {
    double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
    double tip_x = 0;
    std::array<bool, 4> dirichlet{false, false, false, false};

    bool has_slit() const { return tip_x > x0; }
    bool through() const { return tip_x >= x1; }
};

struct MeshStats {
    std::size_t vertices = 0, triangles = 0, lip_pairs = 0;
    double min_angle_deg = 0, h_min = 0, h_max = 0;
};

// Triangulation of a balanced quadtree over the rectangle. Slit vertices carry one copy per lip,
// the tip is a single vertex. Cells shrink geometrically toward the tip down to h_tip.
class SlitMesh {
public:
    static SlitMesh build(const RectSlit& r, double h, double h_tip, double grading = 0.7);

    const RectSlit& geometry() const { return g_; }
    const std::vector<Vec2>& vertices() const { return x_; }
    const std::vector<std::array<int, 3>>& triangles() const { return tri_; }
    // +1 upper lip copy, -1 lower lip copy, 0 elsewhere
    const std::vector<int>& side() const { return side_; }
    const std::vector<char>& dirichlet() const { return dir_; }
    // (upper, lower) vertex pairs along the slit
    const std::vector<std::pair<int, int>>& lip_pairs() const { return lips_; }
    int tip_vertex() const { return tip_; }
    // 1: element touches the tip, 2: shares a vertex with such an element, 0: elsewhere
    const std::vector<int>& tip_layer() const { return layer_; }

    MeshStats stats() const;
    double area() const;
    // Element containing y; points on the slit line are assigned by the sign of y2 (signed zero).
    // Returns -1 when y lies outside the rectangle.
    int locate(const Vec2& y) const;
    Eigen::Vector3d barycentric(int e, const Vec2& y) const;

    void write(std::ostream& os) const;
    static SlitMesh read(std::istream& is);

private:
    RectSlit g_;
    std::vector<Vec2> x_;
    std::vector<std::array<int, 3>> tri_;
    std::vector<int> side_, layer_;
    std::vector<char> dir_;
    std::vector<std::pair<int, int>> lips_;
    int tip_ = -1;
    // bucket grid for locate
    int bx_ = 0, by_ = 0;
    std::vector<std::vector<int>> buckets_;
    void finalize();
};

// Coefficients of v'' - div(A4 grad v) + p . grad v - 2 q . grad v' = g at (t, y).
struct CoefSample {
    Mat2 A4 = Mat2::Identity();
    Vec2 p = Vec2::Zero(), q = Vec2::Zero();
    double g = 0;
};

class WaveCoefficients {
public:
    virtual ~WaveCoefficients() = default;
    virtual CoefSample sample(double t, const Vec2& y) const = 0;
    virtual bool time_dependent() const { return true; }
};

// Constant A4, no transport terms, optional forcing.
class ConstantCoefficients final : public WaveCoefficients {
public:
    explicit ConstantCoefficients(Mat2 A4 = Mat2::Identity(), std::function<double(double, const Vec2&)> g = {});
    CoefSample sample(double t, const Vec2& y) const override;
    bool time_dependent() const override { return static_cast<bool>(g_); }

private:
    Mat2 A4_;
    std::function<double(double, const Vec2&)> g_;
};

// Coefficients of the transformed equation of one chart window, forcing g = f(t, Phi^{-1}(t, y)).
class ChartCoefficients final : public WaveCoefficients {
public:
    ChartCoefficients(const ChartWindow& w, std::function<double(double, const Vec2&)> f = {});
    CoefSample sample(double t, const Vec2& y) const override;

private:
    const ChartWindow& w_;
    std::function<double(double, const Vec2&)> f_;
};

// Rectangle Phi(t0)(Omega) with the slit Phi(t0)(Gamma(t0)); MeshError if the image is not an
// axis-aligned rectangle with the crack entering through its left edge.
RectSlit transformed_domain(const ChartWindow& w);

struct WaveState {
    double t = 0;
    Eigen::VectorXd v, vd, a;
};

struct Operators {
    SpMat K, P, Q;  // stiffness (A4), advection (p), cross (q)
    Eigen::VectorXd G;
};

// P1 Galerkin semi-discretization with average-acceleration Newmark in time.
class WaveSolver {
public:
    WaveSolver(std::shared_ptr<const SlitMesh> mesh, std::shared_ptr<const WaveCoefficients> coef);

    const SlitMesh& mesh() const { return *mesh_; }
    const SpMat& mass() const { return M_; }
    Operators assemble(double t) const;

    // Nodal interpolant; lip copies are evaluated with a signed-zero y2.
    Eigen::VectorXd interpolate(const std::function<double(const Vec2&)>& f) const;
    // State at t0 with the acceleration solved from the equation.
    WaveState initial(double t0, Eigen::VectorXd v0, Eigen::VectorXd v1);
    WaveState step(const WaveState& s, double dt);
    double last_residual() const { return last_residual_; }

    // 1/2 vd' M vd + 1/2 v' K(t) v
    double energy(const WaveState& s) const;
    // L2 norm of v_h - exact over the mesh (7-point rule).
    double l2_error(const Eigen::VectorXd& v, const std::function<double(const Vec2&)>& exact) const;

private:
    std::shared_ptr<const SlitMesh> mesh_;
    std::shared_ptr<const WaveCoefficients> coef_;
    SpMat M_;
    std::vector<char> fixed_;
    double last_residual_ = 0;
    // cached factorization for time-independent coefficients
    double cached_dt_ = -1;
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
    std::unique_ptr<Operators> ops_;
    Eigen::VectorXd solve_accel(const Operators& op, const Eigen::VectorXd& rhs, double c_kp, double c_q,
                                bool reuse);
    double residual(const Operators& op, const WaveState& s) const;
};

// Physical field u(t, x) = v(t, Phi(t, x)) of a discrete state.
struct PullbackSample {
    double u = 0, ut = 0;
    Vec2 grad = Vec2::Zero();
};
PullbackSample pullback(const WaveSolver& s, const WaveState& st, const ChartWindow& w, const Vec2& x);

// Smooth v(t, y) with derivatives, for manufactured solutions of the transformed equation.
struct VJet {
    double v = 0, vt = 0, vtt = 0;
    Vec2 g = Vec2::Zero(), gt = Vec2::Zero();
    Mat2 H = Mat2::Zero();
};
using VField = std::function<VJet(double t, const Vec2& y)>;
// Physical forcing f = u'' - div(A grad u) of u = v o Phi, evaluated at x.
double forcing_from_v(const ChartWindow& w, const VField& v, double t, const Vec2& x);

}  // namespace crackflux
