#include "fennm/baselines.hpp"

#include "fennm/basis.hpp"
#include "fennm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fennm {
namespace {

/// Square band matrix with kl sub- and ku super-diagonals, stored with room
/// for the fill-in produced by row pivoting.
class BandMatrix {
public:
    BandMatrix(Eigen::Index n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), data_(Eigen::MatrixXd::Zero(n, 2 * kl + ku + 1))
    {
    }

    Eigen::Index size() const { return n_; }
    bool in_band(Eigen::Index i, Eigen::Index j) const { return j - i >= -kl_ && j - i <= kl_ + ku_; }
    double& operator()(Eigen::Index i, Eigen::Index j) { return data_(i, j - i + kl_); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j - i + kl_); }

    void clear_row(Eigen::Index i)
    {
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - kl_);
             j <= std::min(n_ - 1, i + kl_ + ku_); ++j) {
            (*this)(i, j) = 0.0;
        }
    }

    /// In-place LU with partial pivoting, then solves for b.
    Eigen::VectorXd solve(Eigen::VectorXd b)
    {
        const Eigen::Index upper = kl_ + ku_;
        Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(n_, kl_ + 1);
        std::vector<Eigen::Index> pivot(static_cast<std::size_t>(n_));
        for (Eigen::Index k = 0; k < n_; ++k) {
            const Eigen::Index last_row = std::min(n_ - 1, k + kl_);
            Eigen::Index p = k;
            for (Eigen::Index i = k + 1; i <= last_row; ++i) {
                if (std::abs((*this)(i, k)) > std::abs((*this)(p, k))) {
                    p = i;
                }
            }
            if ((*this)(p, k) == 0.0) {
                throw std::runtime_error("fem_solve: singular system at row " + std::to_string(k));
            }
            pivot[static_cast<std::size_t>(k)] = p;
            const Eigen::Index last_col = std::min(n_ - 1, k + upper);
            if (p != k) {
                for (Eigen::Index j = k; j <= last_col; ++j) {
                    std::swap((*this)(k, j), (*this)(p, j));
                }
            }
            for (Eigen::Index i = k + 1; i <= last_row; ++i) {
                const double m = (*this)(i, k) / (*this)(k, k);
                lower(k, i - k) = m;
                (*this)(i, k) = 0.0;
                for (Eigen::Index j = k + 1; j <= last_col; ++j) {
                    (*this)(i, j) -= m * (*this)(k, j);
                }
            }
        }
        for (Eigen::Index k = 0; k < n_; ++k) {
            std::swap(b[k], b[pivot[static_cast<std::size_t>(k)]]);
            for (Eigen::Index i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) {
                b[i] -= lower(k, i - k) * b[k];
            }
        }
        for (Eigen::Index k = n_ - 1; k >= 0; --k) {
            double s = b[k];
            for (Eigen::Index j = k + 1; j <= std::min(n_ - 1, k + upper); ++j) {
                s -= (*this)(k, j) * b[j];
            }
            b[k] = s / (*this)(k, k);
        }
        return b;
    }

private:
    Eigen::Index n_;
    int kl_;
    int ku_;
    Eigen::MatrixXd data_;
};

} // namespace

double FemSolution::operator()(double x) const
{
    const int n = mesh.locate(x);
    const double xi = (x - mesh.element_left(n)) / mesh.jacobian(n) - 1.0;
    const TestFunctionSpace space = lagrange_space(degree);
    double u = 0.0;
    for (int j = 0; j <= degree; ++j) {
        u += nodal[degree * n + j] * space.value(j, xi);
    }
    return u;
}

Eigen::ArrayXd FemSolution::evaluate(const Eigen::ArrayXd& x) const
{
    Eigen::ArrayXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out[i] = (*this)(x[i]);
    }
    return out;
}

FemSolution fem_solve(const LinearBvp& bvp, const Mesh& mesh, int degree)
{
    if (degree < 1 || degree > 2) {
        throw std::invalid_argument("fem_solve: element degree must be 1 or 2");
    }
    const TestFunctionSpace space = lagrange_space(degree);
    const QuadratureRule& rule = gauss_legendre(degree + 2);
    const int N = mesh.elements();
    const Eigen::Index dofs = static_cast<Eigen::Index>(degree) * N + 1;

    BandMatrix A(dofs, degree, degree);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dofs);
    for (int n = 0; n < N; ++n) {
        const double J = mesh.jacobian(n);
        for (int q = 0; q < rule.order; ++q) {
            const double xi = rule.nodes[q];
            const double x = mesh.to_global(n, xi);
            const double w = rule.weights[q];
            const double k = bvp.k(x);
            const double c = bvp.c(x);
            const double s = bvp.s(x);
            for (int i = 0; i <= degree; ++i) {
                const double vi = space.value(i, xi);
                const double dvi = space.d_xi(i, xi);
                const Eigen::Index row = degree * n + i;
                rhs[row] += w * s * vi * J;
                for (int j = 0; j <= degree; ++j) {
                    const double dvj = space.d_xi(j, xi);
                    A(row, degree * n + j) += w * (k * dvj * dvi / J + c * dvj * vi);
                }
            }
        }
    }

    A.clear_row(0);
    A(0, 0) = 1.0;
    rhs[0] = bvp.left_value;
    if (bvp.right_is_flux) {
        rhs[dofs - 1] += bvp.right_value;
    } else {
        A.clear_row(dofs - 1);
        A(dofs - 1, dofs - 1) = 1.0;
        rhs[dofs - 1] = bvp.right_value;
    }

    FemSolution sol{mesh, degree, A.solve(rhs)};
    return sol;
}

FemSolution fem_solve(const ProblemSpec& problem, const Mesh& mesh, int degree)
{
    if (!problem.bvp) {
        throw std::invalid_argument("fem_solve: problem '" + problem.name +
                                    "' has no linear boundary-value form");
    }
    return fem_solve(*problem.bvp, mesh, degree);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                  const Rk45Options& opt)
{
    const Eigen::ArrayXd scale =
        opt.abs_tol + opt.rel_tol * y0.array().abs().max(y1.array().abs());
    return std::sqrt((err.array() / scale).square().mean());
}

double initial_step(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, double span, const Rk45Options& opt)
{
    const Eigen::ArrayXd scale = opt.abs_tol + opt.rel_tol * y0.array().abs();
    const double n0 = std::sqrt((y0.array() / scale).square().mean());
    const double n1 = std::sqrt((f0.array() / scale).square().mean());
    double h0 = (n0 < 1e-5 || n1 < 1e-5) ? 1e-6 : 0.01 * n0 / n1;
    h0 = std::min(h0, span);
    Eigen::VectorXd f1(y0.size());
    rhs(t0 + h0, y0 + h0 * f0, f1);
    const double n2 = std::sqrt(((f1 - f0).array() / scale).square().mean()) / h0;
    const double h1 = std::max(n1, n2) <= 1e-15 ? std::max(1e-6, 1e-3 * h0)
                                                 : std::pow(0.01 / std::max(n1, n2), 0.2);
    return std::min({100.0 * h0, h1, span});
}

} // namespace

Eigen::VectorXd Trajectory::operator()(double t) const
{
    if (t < start() || t > end()) {
        throw std::out_of_range("Trajectory: t outside the integrated interval");
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t step = static_cast<std::size_t>(std::distance(times_.begin(), it));
    step = std::clamp<std::size_t>(step, 1, times_.size() - 1) - 1;
    const double h = times_[step + 1] - times_[step];
    const double s = (t - times_[step]) / h;
    const double s1 = 1.0 - s;
    const auto& r = dense_[step];
    return r.col(0) + s * (r.col(1) + s1 * (r.col(2) + s * (r.col(3) + s1 * r.col(4))));
}

Trajectory rk45_solve(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                      const Rk45Options& opt)
{
    if (!(t1 > t0)) {
        throw std::invalid_argument("rk45_solve: t1 must exceed t0");
    }
    const Eigen::Index n = y0.size();
    Trajectory traj;
    traj.times_.push_back(t0);
    traj.states_.push_back(y0);

    Eigen::VectorXd y = y0;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n);
    rhs(t0, y, k1);
    double t = t0;
    double h = opt.first_step > 0.0 ? opt.first_step : initial_step(rhs, t0, y0, k1, t1 - t0, opt);
    long steps = 0;
    bool last_rejected = false;

    while (t < t1) {
        if (++steps > opt.max_steps) {
            throw std::runtime_error("rk45_solve: step limit exhausted at t=" + std::to_string(t));
        }
        if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            throw std::runtime_error("rk45_solve: step size underflow at t=" + std::to_string(t));
        }
        h = std::min(h, t1 - t);
        rhs(t + c2 * h, y + h * a21 * k1, k2);
        rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2), k3);
        rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
        rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
        rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, ynew, k7);
        const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, ynew, opt);
        if (!std::isfinite(en)) {
            h *= 0.1;
            last_rejected = true;
            ++traj.rejected_;
            continue;
        }
        if (en > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
            ++traj.rejected_;
            continue;
        }

        Eigen::Matrix<double, Eigen::Dynamic, 5> r(n, 5);
        const Eigen::VectorXd dy = ynew - y;
        const Eigen::VectorXd bspl = h * k1 - dy;
        r.col(0) = y;
        r.col(1) = dy;
        r.col(2) = bspl;
        r.col(3) = dy - h * k7 - bspl;
        r.col(4) = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        traj.dense_.push_back(std::move(r));

        t = (t1 - t - h <= 0.0) ? t1 : t + h;
        y = ynew;
        k1 = k7;
        traj.times_.push_back(t);
        traj.states_.push_back(y);

        double factor = en == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
        if (last_rejected) {
            factor = std::min(1.0, factor);
        }
        last_rejected = false;
        h *= factor;
    }
    return traj;
}

Trajectory solve_pendulum(const PendulumParams& p, const Rk45Options& options)
{
    const double gl = p.g / p.length;
    const double c = p.damping;
    const OdeRhs rhs = [gl, c](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy[0] = y[1];
        dy[1] = -c * y[1] - gl * std::sin(y[0]);
    };
    return rk45_solve(rhs, Eigen::Vector2d(p.theta0, p.omega0), 0.0, p.horizon, options);
}

double GridSolution::operator()(double t) const
{
    const Eigen::Index n = x.size();
    if (t <= x[0]) {
        return u[0];
    }
    if (t >= x[n - 1]) {
        return u[n - 1];
    }
    const auto it = std::upper_bound(x.data(), x.data() + n, t);
    const Eigen::Index i = std::distance(x.data(), it) - 1;
    const double s = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - s) * u[i] + s * u[i + 1];
}

Eigen::ArrayXd GridSolution::evaluate(const Eigen::ArrayXd& t) const
{
    return t.unaryExpr([this](double v) { return (*this)(v); });
}

GridSolution fdm_solve(const std::function<double(double)>& f, double a, double b, double ua,
                       double ub, int n)
{
    if (n < 3) {
        throw std::invalid_argument("fdm_solve: need at least 3 grid points");
    }
    GridSolution sol;
    sol.x = Eigen::VectorXd::LinSpaced(n, a, b);
    sol.x[n - 1] = b;
    const double h = (b - a) / (n - 1);
    const QuadratureRule& rule = gauss_legendre(4);
    const auto half_average = [&](double lo, double hi) {
        double s = 0.0;
        for (int q = 0; q < rule.order; ++q) {
            s += rule.weights[q] * f(lo + 0.5 * (rule.nodes[q] + 1.0) * (hi - lo));
        }
        return 0.5 * s;
    };

    // Thomas sweep on the interior system  -u_{i-1} + 2 u_i - u_{i+1} = h^2 f_i.
    const int m = n - 2;
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(m, 2.0);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        const double xi = sol.x[i + 1];
        rhs[i] = h * h * 0.5 * (half_average(xi - 0.5 * h, xi) + half_average(xi, xi + 0.5 * h));
    }
    rhs[0] += ua;
    rhs[m - 1] += ub;
    for (int i = 1; i < m; ++i) {
        const double w = -1.0 / diag[i - 1];
        diag[i] += w;
        rhs[i] -= w * rhs[i - 1];
    }
    sol.u.resize(n);
    sol.u[0] = ua;
    sol.u[n - 1] = ub;
    double next = 0.0;
    for (int i = m - 1; i >= 0; --i) {
        const double v = (rhs[i] + (i + 1 < m ? next : 0.0)) / diag[i];
        sol.u[i + 1] = v;
        next = v;
    }
    return sol;
}

GridSolution fdm_solve(const ProblemSpec& problem, int n)
{
    if (!problem.forcing || problem.essentials.size() != 2) {
        throw std::invalid_argument("fdm_solve: problem '" + problem.name +
                                    "' is not a two-point Poisson problem");
    }
    const double h = (problem.b - problem.a) / (n - 1);
    for (double bp : problem.breakpoints) {
        const double k = (bp - problem.a) / h;
        if (std::abs(k - std::round(k)) > 1e-9) {
            throw std::invalid_argument("fdm_solve: grid misses the breakpoint x=" + std::to_string(bp));
        }
    }
    double ua = 0.0;
    double ub = 0.0;
    for (const auto& e : problem.essentials) {
        (e.point == problem.a ? ua : ub) = e.value;
    }
    return fdm_solve(problem.forcing, problem.a, problem.b, ua, ub, n);
}

} // namespace fennm
