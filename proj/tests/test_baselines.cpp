#include "fennm/baselines.hpp"
#include "fennm/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

using namespace fennm;

namespace {

double fem_error_at(int degree, int elements, double x)
{
    const ProblemSpec p = equilibrium_problem();
    return std::abs(fem_solve(p, uniform_mesh(p.a, p.b, elements), degree)(x) - p.oracle_at(x));
}

} // namespace

TEST(Fem, EquilibriumTwoLinearElements)
{
    const ProblemSpec p = equilibrium_problem();
    const FemSolution s = fem_solve(p, uniform_mesh(1, 2, 2), 1);
    ASSERT_EQ(s.dof(), 3);
    EXPECT_DOUBLE_EQ(s.nodal[0], 2.0);
    EXPECT_NEAR(s.nodal[2], 1.3465735902799727, 0.25 * 0.25);
    EXPECT_GT(std::abs(s.nodal[2] - 1.3465735902799727), 1e-8);
}

TEST(Fem, EquilibriumConvergesAtExpectedRate)
{
    for (int p : {1, 2}) {
        const double e1 = fem_error_at(p, 8, 1.5);
        const double e2 = fem_error_at(p, 16, 1.5);
        const double rate = std::log2(e1 / e2);
        EXPECT_NEAR(rate, p == 1 ? 2.0 : 4.0, 0.2) << "p=" << p;
    }
}

TEST(Fem, DofCount)
{
    const ProblemSpec p = equilibrium_problem();
    EXPECT_EQ(fem_solve(p, uniform_mesh(1, 2, 7), 1).dof(), 8);
    EXPECT_EQ(fem_solve(p, uniform_mesh(1, 2, 7), 2).dof(), 15);
}

TEST(Fem, InterpolatesBetweenNodes)
{
    const ProblemSpec p = equilibrium_problem();
    const FemSolution s = fem_solve(p, uniform_mesh(1, 2, 4), 1);
    EXPECT_NEAR(s(1.125), 0.5 * (s.nodal[0] + s.nodal[1]), 1e-15);
    EXPECT_NEAR(s(2.0), s.nodal[4], 1e-15);
}

TEST(Fem, ExactForLinearSolution)
{
    // -u'' = 0, u(0) = 1, u'(1) = 2  ->  u = 1 + 2x
    LinearBvp bvp{[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
                  1.0, true, 2.0};
    const FemSolution s = fem_solve(bvp, uniform_mesh(0, 1, 3), 2);
    for (double x : {0.0, 0.3, 0.77, 1.0}) {
        EXPECT_NEAR(s(x), 1.0 + 2.0 * x, 1e-13);
    }
}

TEST(Fem, TransportOscillatesNearLayer)
{
    const ProblemSpec p = transport_problem();
    const FemSolution s = fem_solve(p, uniform_mesh(0, 1, 22), 1);
    int sign_changes = 0;
    for (Eigen::Index i = 1; i + 1 < s.nodal.size(); ++i) {
        const double d0 = s.nodal[i] - s.nodal[i - 1];
        const double d1 = s.nodal[i + 1] - s.nodal[i];
        sign_changes += d0 * d1 < 0.0;
    }
    EXPECT_GT(sign_changes, 0);
    EXPECT_GT(s.nodal.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Fem, Errors)
{
    const ProblemSpec p = equilibrium_problem();
    EXPECT_THROW(fem_solve(p, uniform_mesh(1, 2, 4), 3), std::invalid_argument);
    EXPECT_THROW(fem_solve(beam_problem(), uniform_mesh(0, 1, 4), 1), std::invalid_argument);
}

TEST(Rk45, ConstantSolution)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy = Eigen::VectorXd::Zero(y.size());
        dy[0] = y[1];
    };
    Eigen::VectorXd y0(2);
    y0 << 0.4, 0.0;
    const Trajectory t = rk45_solve(rhs, y0, 0.0, 5.0);
    EXPECT_DOUBLE_EQ(t(3.3)[0], 0.4);
    EXPECT_DOUBLE_EQ(t.states().back()[1], 0.0);
}

TEST(Rk45, ExponentialDecayWithDenseOutput)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; };
    const Trajectory t = rk45_solve(rhs, Eigen::VectorXd::Ones(1), 0.0, 4.0);
    for (double s : {0.0, 0.37, 1.9, 4.0}) {
        EXPECT_NEAR(t(s)[0], std::exp(-s), 1e-10);
    }
    EXPECT_THROW(t(4.5), std::out_of_range);
}

TEST(Rk45, HarmonicOscillator)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2);
        dy << y[1], -y[0];
    };
    Eigen::VectorXd y0(2);
    y0 << 1.0, 0.0;
    const Trajectory t = rk45_solve(rhs, y0, 0.0, 10.0);
    EXPECT_NEAR(t(10.0)[0], std::cos(10.0), 1e-9);
    EXPECT_NEAR(t(7.1)[1], -std::sin(7.1), 1e-9);
}

TEST(Rk45, Errors)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; };
    EXPECT_THROW(rk45_solve(rhs, Eigen::VectorXd::Ones(1), 1.0, 1.0), std::invalid_argument);
    Rk45Options few;
    few.max_steps = 3;
    EXPECT_THROW(rk45_solve(rhs, Eigen::VectorXd::Ones(1), 0.0, 10.0, few), std::runtime_error);
}

TEST(Rk45, PendulumEnergyConserved)
{
    const ProblemSpec p = pendulum_problem(false);
    const Trajectory t = solve_pendulum(*p.pendulum);
    Eigen::ArrayXd th(t.states().size());
    Eigen::ArrayXd om(t.states().size());
    for (std::size_t i = 0; i < t.states().size(); ++i) {
        th[static_cast<Eigen::Index>(i)] = t.states()[i][0];
        om[static_cast<Eigen::Index>(i)] = t.states()[i][1];
    }
    const Eigen::ArrayXd e = pendulum_energy(*p.pendulum, th, om);
    EXPECT_LT((e - 6.055875528498469).abs().maxCoeff() / 6.055875528498469, 1e-8);
}

TEST(Rk45, DampedPendulumLosesEnergy)
{
    const ProblemSpec p = pendulum_problem(true);
    const Trajectory t = solve_pendulum(*p.pendulum);
    double prev = 1e300;
    for (double s = 0.0; s <= 10.0; s += 0.25) {
        const Eigen::VectorXd y = t(s);
        const double e = pendulum_energy(*p.pendulum, Eigen::ArrayXd::Constant(1, y[0]),
                                         Eigen::ArrayXd::Constant(1, y[1]))[0];
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
}

TEST(Fdm, DiscontinuousPoisson)
{
    const ProblemSpec p = poisson_discontinuous_problem();
    const GridSolution s = fdm_solve(p, 2001);
    EXPECT_NEAR(s(0.5), 1.25, 1e-5);
    EXPECT_NEAR(s(0.0), 0.0, 1e-10);
    const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(401, -1, 1);
    EXPECT_LT((s.evaluate(x) - p.oracle_values(x)).abs().maxCoeff(), 1e-8);
}

TEST(Fdm, ZeroForcing)
{
    const GridSolution s = fdm_solve([](double) { return 0.0; }, 0, 1, 0, 0, 11);
    EXPECT_EQ(s.u.cwiseAbs().maxCoeff(), 0.0);
    const GridSolution lin = fdm_solve([](double) { return 0.0; }, 0, 2, 1, 3, 5);
    EXPECT_NEAR(lin(1.3), 2.3, 1e-14);
}

TEST(Fdm, SecondOrderConvergence)
{
    const auto f = [](double x) { return std::sin(x); };
    const auto err = [&](int n) {
        const GridSolution s = fdm_solve(f, 0, 3, 0, std::sin(3.0), n);
        return std::abs(s(1.5) - std::sin(1.5));
    };
    EXPECT_NEAR(std::log2(err(31) / err(61)), 2.0, 0.1);
}

TEST(Fdm, Errors)
{
    EXPECT_THROW(fdm_solve([](double) { return 0.0; }, 0, 1, 0, 0, 2), std::invalid_argument);
    EXPECT_THROW(fdm_solve(poisson_discontinuous_problem(), 2000), std::invalid_argument);
    EXPECT_THROW(fdm_solve(equilibrium_problem(), 101), std::invalid_argument);
}
