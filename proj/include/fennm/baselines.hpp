#pragma once

#include "fennm/mesh.hpp"
#include "fennm/problems.hpp"

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fennm {

/// Continuous Galerkin solution with degree-p Lagrange elements.
struct FemSolution {
    Mesh mesh;
    int degree = 1;
    Eigen::VectorXd nodal; // p N_el + 1 values, node p n + j inside element n

    Eigen::Index dof() const { return nodal.size(); }
    double operator()(double x) const;
    Eigen::ArrayXd evaluate(const Eigen::ArrayXd& x) const;
};

/// Banded Galerkin solve (Q = p + 2, partial-pivoting band LU). Throws
/// std::invalid_argument for p outside {1, 2} and std::runtime_error when the
/// system is singular.
FemSolution fem_solve(const LinearBvp& bvp, const Mesh& mesh, int degree);

/// Uses the problem's linear form; throws std::invalid_argument if it has none.
FemSolution fem_solve(const ProblemSpec& problem, const Mesh& mesh, int degree);

/// y' = f(t, y).
using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct Rk45Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double first_step = 0.0; // 0 picks one automatically
    long max_steps = 1000000;
};

/// Accepted Dormand-Prince steps with their continuous extension.
class Trajectory {
public:
    double start() const { return times_.front(); }
    double end() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Eigen::VectorXd>& states() const { return states_; }
    long rejected_steps() const { return rejected_; }

    /// State at t by the fourth-order dense output of the covering step.
    Eigen::VectorXd operator()(double t) const;

    friend Trajectory rk45_solve(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0,
                                 double t1, const Rk45Options& options);

private:
    std::vector<double> times_;
    std::vector<Eigen::VectorXd> states_;
    std::vector<Eigen::Matrix<double, Eigen::Dynamic, 5>> dense_;
    long rejected_ = 0;
};

/// Adaptive Dormand-Prince 5(4) from t0 to t1 > t0. Throws std::runtime_error
/// when the step size underflows or max_steps is exhausted.
Trajectory rk45_solve(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                      const Rk45Options& options = {});

/// Pendulum trajectory with state (theta, omega).
Trajectory solve_pendulum(const PendulumParams& params, const Rk45Options& options = {});

/// Nodal solution on a uniform grid, linearly interpolated between nodes.
struct GridSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd u;

    double operator()(double t) const;
    Eigen::ArrayXd evaluate(const Eigen::ArrayXd& t) const;
};

/// -u'' = f on [a, b] with u(a) = ua, u(b) = ub, three-point stencil on n
/// nodes. The load at each node is the average of f over the surrounding
/// half-cells, so a jump sitting on a node contributes its mean.
GridSolution fdm_solve(const std::function<double(double)>& f, double a, double b, double ua,
                       double ub, int n);

/// Poisson problem by name; requires every breakpoint to land on a node.
GridSolution fdm_solve(const ProblemSpec& problem, int n);

} // namespace fennm
