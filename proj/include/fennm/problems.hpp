#pragma once

#include "fennm/diffnet.hpp"
#include "fennm/weakform.hpp"

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fennm {

enum class OracleKind { Analytic, Fem, Rk45, Fdm };

std::string to_string(OracleKind kind);

/// Reference solution and its derivatives up to `order` at a batch of points.
using OracleFn = std::function<Jets(const Eigen::ArrayXd& x, int order)>;

/// Pointwise strong-form residual from solution jets.
using StrongResidualFn = std::function<Eigen::ArrayXd(const Eigen::ArrayXd& x, const Jets& jets)>;

/// -(k u')' + c u' = s on [a, b] with u(a) given and either u(b) given or
/// the flux k u'(b) given.
struct LinearBvp {
    std::function<double(double)> k;
    std::function<double(double)> c;
    std::function<double(double)> s;
    double left_value = 0.0;
    bool right_is_flux = false;
    double right_value = 0.0;
};

/// theta'' + c theta' + (g/L) sin(theta) = 0 with theta(0) = theta0, theta'(0) = omega0.
struct PendulumParams {
    double g = 9.81;
    double length = 1.0;
    double damping = 0.0;
    double theta0 = 0.0;
    double omega0 = 0.0;
    double horizon = 10.0;
};

/// Energy per unit mass  L^2 omega^2 / 2 + g L (1 - cos theta).
Eigen::ArrayXd pendulum_energy(const PendulumParams& p, const Eigen::ArrayXd& theta,
                               const Eigen::ArrayXd& omega);

/// Settings a problem is meant to be trained with.
struct Recommended {
    NetConfig net;
    int elements = 1;
    std::string space = "lagrange";
    int degree = 4;
    int quadrature = 8;
    long adam_epochs = 5000;
    long lbfgs_epochs = 5000;
};

struct ProblemSpec {
    std::string name;
    double a = 0.0;
    double b = 1.0;
    SignalSpec weak_form;
    std::vector<EssentialCondition> essentials;
    std::function<double(double)> forcing; // empty when the equation has none
    std::map<std::string, double> constants;
    OracleKind oracle_kind = OracleKind::Analytic;
    OracleFn oracle;
    StrongResidualFn strong_residual; // empty when it would need order > 3
    /// Points where an element boundary must sit (forcing discontinuities).
    std::vector<double> breakpoints;
    std::vector<double> probes;
    Recommended recommended;
    std::optional<LinearBvp> bvp;
    std::optional<PendulumParams> pendulum;

    double oracle_at(double x) const;
    Eigen::ArrayXd oracle_values(const Eigen::ArrayXd& x) const;
};

ProblemSpec equilibrium_problem();
ProblemSpec beam_problem();
ProblemSpec pendulum_problem(bool damped);
ProblemSpec transport_problem();
ProblemSpec poisson_steep_problem();
ProblemSpec poisson_boundary_layer_problem();
ProblemSpec poisson_discontinuous_problem();

/// Names accepted by make_problem.
const std::vector<std::string>& problem_names();

/// Looks a problem up by name; throws std::invalid_argument if unknown.
ProblemSpec make_problem(const std::string& name);

} // namespace fennm
