#include "fennm/problems.hpp"

#include "fennm/baselines.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace fennm {
namespace {

using Eigen::ArrayXd;
constexpr double pi = std::numbers::pi;

ArrayXd constant(const ArrayXd& like, double v) { return ArrayXd::Constant(like.size(), v); }

/// scale * u^(order)
SignalFn derivative_signal(int order, double scale = 1.0)
{
    return [order, scale](const ArrayXd& x, const Jets& jets) {
        SignalValue sv;
        sv.value = scale * jets.d[order];
        sv.partial[order] = constant(x, scale);
        return sv;
    };
}

/// f(x), independent of the network.
SignalFn source_signal(std::function<double(double)> f)
{
    return [f = std::move(f)](const ArrayXd& x, const Jets&) {
        SignalValue sv;
        sv.value = x.unaryExpr(f);
        return sv;
    };
}

Jets empty_jets(const ArrayXd& x, int order)
{
    if (order < 0 || order > kMaxJetOrder) {
        throw std::invalid_argument("oracle: derivative order must be in [0, 3]");
    }
    Jets j;
    j.points = x;
    j.max_order = order;
    for (int k = 0; k <= order; ++k) {
        j.d[k].resize(x.size());
    }
    return j;
}

/// Oracle from a scalar routine writing u, u', u'', u''' at one point.
OracleFn pointwise_oracle(std::function<void(double, double*)> eval)
{
    return [eval = std::move(eval)](const ArrayXd& x, int order) {
        Jets j = empty_jets(x, order);
        double d[4];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            eval(x[i], d);
            for (int k = 0; k <= order; ++k) {
                j.d[k][i] = d[k];
            }
        }
        return j;
    };
}

ProblemSpec poisson_base(std::string name, std::function<double(double)> f,
                         std::function<void(double, double*)> u)
{
    ProblemSpec p;
    p.name = std::move(name);
    p.a = -1.0;
    p.b = 1.0;
    p.forcing = f;
    p.weak_form.max_order = 1;
    p.weak_form.volumes.push_back({derivative_signal(1), TestSample::DXi, 1.0, 0});
    p.weak_form.volumes.push_back({source_signal(f), TestSample::Value, -1.0, 1});
    p.weak_form.fluxes.push_back({derivative_signal(1), TestSample::Value, -1.0, 0});
    p.oracle = pointwise_oracle(u);
    double ends[4];
    u(-1.0, ends);
    p.essentials.push_back({-1.0, 0, ends[0]});
    u(1.0, ends);
    p.essentials.push_back({1.0, 0, ends[0]});
    p.strong_residual = [f](const ArrayXd& x, const Jets& jets) -> ArrayXd {
        return -jets.d[2] - x.unaryExpr(f);
    };
    p.recommended.net = {4, 20, Activation::Sin, 0};
    p.recommended.degree = 4;
    p.recommended.quadrature = 10;
    p.recommended.adam_epochs = 10000;
    p.recommended.lbfgs_epochs = 10000;
    return p;
}

} // namespace

std::string to_string(OracleKind kind)
{
    switch (kind) {
    case OracleKind::Analytic:
        return "analytic";
    case OracleKind::Fem:
        return "fem";
    case OracleKind::Rk45:
        return "rk45";
    case OracleKind::Fdm:
        return "fdm";
    }
    return "unknown";
}

ArrayXd pendulum_energy(const PendulumParams& p, const ArrayXd& theta, const ArrayXd& omega)
{
    return 0.5 * p.length * p.length * omega.square() + p.g * p.length * (1.0 - theta.cos());
}

double ProblemSpec::oracle_at(double x) const
{
    return oracle(ArrayXd::Constant(1, x), 0).d[0][0];
}

ArrayXd ProblemSpec::oracle_values(const ArrayXd& x) const { return oracle(x, 0).d[0]; }

ProblemSpec equilibrium_problem()
{
    ProblemSpec p;
    p.name = "equilibrium";
    p.a = 1.0;
    p.b = 2.0;
    p.forcing = [](double x) { return 2.0 / (x * x); };

    const SignalFn flux = [](const ArrayXd& x, const Jets& jets) {
        SignalValue sv;
        sv.value = x * jets.d[1];
        sv.partial[1] = x;
        return sv;
    };
    p.weak_form.max_order = 1;
    p.weak_form.fluxes.push_back({flux, TestSample::Value, 1.0, 0});
    p.weak_form.volumes.push_back({flux, TestSample::DXi, -1.0, 0});
    p.weak_form.volumes.push_back({source_signal(p.forcing), TestSample::Value, -1.0, 1});
    // -x U'(2) = 1/2
    p.weak_form.overrides.push_back({2.0, Side::Right, 0, -0.5});
    p.essentials.push_back({1.0, 0, 2.0});

    p.oracle = pointwise_oracle([](double x, double* d) {
        d[0] = 2.0 / x + 0.5 * std::log(x);
        d[1] = -2.0 / (x * x) + 0.5 / x;
        d[2] = 4.0 / (x * x * x) - 0.5 / (x * x);
        d[3] = -12.0 / (x * x * x * x) + 1.0 / (x * x * x);
    });
    p.strong_residual = [](const ArrayXd& x, const Jets& jets) -> ArrayXd {
        return jets.d[1] + x * jets.d[2] - 2.0 / x.square();
    };
    p.probes = {1.5};
    p.bvp = LinearBvp{[](double x) { return x; }, [](double) { return 0.0; },
                      [](double x) { return -2.0 / (x * x); }, 2.0, true, -0.5};
    p.recommended = {{2, 20, Activation::Tanh, 0}, 1, "lagrange", 4, 8, 5000, 5000};
    return p;
}

ProblemSpec beam_problem()
{
    const double E = 69.9e9;
    const double I = 9e-9;
    const double EI = E * I;
    const double F = 100.0;
    const double L = 1.0;

    ProblemSpec p;
    p.name = "beam";
    p.a = 0.0;
    p.b = L;
    p.constants = {{"E", E}, {"I", I}, {"EI", EI}, {"F", F}, {"L", L}};
    p.weak_form.max_order = 3;
    p.weak_form.fluxes.push_back({derivative_signal(3, EI), TestSample::Value, 1.0, 0});
    p.weak_form.fluxes.push_back({derivative_signal(2, EI), TestSample::DXi, -1.0, -1});
    p.weak_form.volumes.push_back({derivative_signal(2, EI), TestSample::DXi2, 1.0, -1});
    // Point load and zero moment at mid-span, free end at x = L.
    p.weak_form.overrides.push_back({0.5 * L, Side::Right, 0, -F});
    p.weak_form.overrides.push_back({0.5 * L, Side::Right, 1, 0.0});
    p.weak_form.overrides.push_back({L, Side::Right, 0, 0.0});
    p.weak_form.overrides.push_back({L, Side::Right, 1, 0.0});
    p.essentials.push_back({0.0, 0, 0.0});
    p.essentials.push_back({0.0, 1, 0.0});
    p.breakpoints = {0.5 * L};

    const double c = F / EI;
    p.oracle = pointwise_oracle([c, L](double x, double* d) {
        const double h = 0.5 * L;
        if (x < h) {
            d[0] = c * (L * x * x / 4.0 - x * x * x / 6.0);
            d[1] = c * (L * x / 2.0 - x * x / 2.0);
            d[2] = c * (h - x);
            d[3] = -c;
            return;
        }
        const double mid = c * L * L * L / 24.0;
        const double slope = c * L * L / 8.0;
        d[0] = mid + slope * (x - h);
        d[1] = slope;
        d[2] = 0.0;
        d[3] = 0.0;
    });
    p.probes = {L};
    p.recommended = {{3, 20, Activation::Tanh, 0}, 4, "hermite", 3, 5, 5000, 10000};
    return p;
}

ProblemSpec pendulum_problem(bool damped)
{
    PendulumParams pp;
    pp.g = 9.81;
    pp.length = 1.0;
    pp.damping = damped ? 0.5 : 0.0;
    pp.theta0 = 3.0 * pi / 8.0;
    pp.omega0 = 0.0;
    pp.horizon = 10.0;
    const double gl = pp.g / pp.length;
    const double c = pp.damping;

    ProblemSpec p;
    p.name = damped ? "pendulum-damped" : "pendulum-undamped";
    p.a = 0.0;
    p.b = pp.horizon;
    p.constants = {{"g", pp.g}, {"L", pp.length}, {"c", c}, {"theta0", pp.theta0}};
    p.pendulum = pp;
    p.weak_form.max_order = 1;
    p.weak_form.fluxes.push_back({derivative_signal(1), TestSample::Value, 1.0, 0});
    p.weak_form.volumes.push_back({derivative_signal(1), TestSample::DXi, -1.0, 0});
    p.weak_form.volumes.push_back(
        {[gl, c](const ArrayXd& t, const Jets& jets) {
             SignalValue sv;
             sv.value = c * jets.d[1] + gl * jets.d[0].sin();
             sv.partial[0] = gl * jets.d[0].cos();
             sv.partial[1] = constant(t, c);
             return sv;
         },
         TestSample::Value, 1.0, 1});
    p.weak_form.overrides.push_back({0.0, Side::Left, 0, pp.omega0});
    p.essentials.push_back({0.0, 0, pp.theta0});

    auto trajectory = std::make_shared<Trajectory>(solve_pendulum(pp));
    p.oracle_kind = OracleKind::Rk45;
    p.oracle = [trajectory, gl, c](const ArrayXd& t, int order) {
        Jets j = empty_jets(t, order);
        if (order > 2) {
            throw std::invalid_argument("pendulum oracle: derivatives above order 2 unavailable");
        }
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const Eigen::VectorXd y = (*trajectory)(t[i]);
            j.d[0][i] = y[0];
            if (order >= 1) {
                j.d[1][i] = y[1];
            }
            if (order >= 2) {
                j.d[2][i] = -c * y[1] - gl * std::sin(y[0]);
            }
        }
        return j;
    };
    p.strong_residual = [gl, c](const ArrayXd&, const Jets& jets) -> ArrayXd {
        return jets.d[2] + c * jets.d[1] + gl * jets.d[0].sin();
    };
    p.recommended = {{4, 20, Activation::Sin, 0}, 25, "lagrange", 3, 5, 10000, 10000};
    return p;
}

ProblemSpec transport_problem()
{
    const double L = 1.0;
    const double vx = 1.0;
    const double alpha = 0.01;
    const double pe = L * vx / alpha;
    const double fhat = 1.0 / alpha;

    ProblemSpec p;
    p.name = "transport";
    p.a = 0.0;
    p.b = 1.0;
    p.constants = {{"Pe", pe}, {"f_hat", fhat}, {"alpha", alpha}, {"v_x", vx}, {"L", L}};
    p.forcing = [fhat](double) { return fhat; };
    p.weak_form.max_order = 1;
    p.weak_form.volumes.push_back({derivative_signal(1), TestSample::DXi, 1.0, 0});
    p.weak_form.fluxes.push_back({derivative_signal(1), TestSample::Value, -1.0, 0});
    p.weak_form.volumes.push_back(
        {[pe, fhat](const ArrayXd& x, const Jets& jets) {
             SignalValue sv;
             sv.value = pe * jets.d[1] - fhat;
             sv.partial[1] = constant(x, pe);
             return sv;
         },
         TestSample::Value, 1.0, 1});
    p.essentials.push_back({0.0, 0, 0.0});
    p.essentials.push_back({1.0, 0, 0.0});

    // u = x + (1 - e^{Pe x}) / (e^{Pe} - 1), written with e^{Pe (x - 1)} to stay finite.
    p.oracle = pointwise_oracle([pe](double x, double* d) {
        const double denom = -std::expm1(-pe);
        const double g = std::exp(pe * (x - 1.0));
        const double tail = std::exp(-pe);
        d[0] = x + (tail - g) / denom;
        d[1] = 1.0 - pe * g / denom;
        d[2] = -pe * pe * g / denom;
        d[3] = -pe * pe * pe * g / denom;
    });
    p.strong_residual = [pe, fhat](const ArrayXd&, const Jets& jets) -> ArrayXd {
        return pe * jets.d[1] - jets.d[2] - fhat;
    };
    p.probes = {0.5, 0.99};
    p.bvp = LinearBvp{[](double) { return 1.0; }, [pe](double) { return pe; },
                      [fhat](double) { return fhat; }, 0.0, false, 0.0};
    p.recommended = {{4, 20, Activation::Tanh, 0}, 22, "lagrange", 4, 10, 10000, 10000};
    return p;
}

ProblemSpec poisson_steep_problem()
{
    const auto f = [](double x) {
        const double t = std::tanh(80.0 * (x + 0.1));
        return 0.1 * 64.0 * pi * pi * std::sin(8.0 * pi * x) + 12800.0 * t * (1.0 - t * t);
    };
    ProblemSpec p = poisson_base("poisson-steep", f, [](double x, double* d) {
        const double w = 8.0 * pi;
        const double t = std::tanh(80.0 * (x + 0.1));
        const double s2 = 1.0 - t * t;
        d[0] = 0.1 * std::sin(w * x) + t;
        d[1] = 0.1 * w * std::cos(w * x) + 80.0 * s2;
        d[2] = -0.1 * w * w * std::sin(w * x) - 2.0 * 6400.0 * t * s2;
        d[3] = -0.1 * w * w * w * std::cos(w * x) + 2.0 * 512000.0 * s2 * (3.0 * t * t - 1.0);
    });
    p.probes = {-0.1};
    p.recommended.elements = 30;
    return p;
}

ProblemSpec poisson_boundary_layer_problem()
{
    const auto f = [](double x) {
        return 0.1 * 25.0 * pi * pi * std::sin(5.0 * pi * x) - 10000.0 * std::exp(100.0 * x - 99.0);
    };
    ProblemSpec p = poisson_base("poisson-boundary-layer", f, [](double x, double* d) {
        const double w = 5.0 * pi;
        const double e = std::exp(100.0 * x - 99.0);
        d[0] = 0.1 * std::sin(w * x) + e;
        d[1] = 0.1 * w * std::cos(w * x) + 100.0 * e;
        d[2] = -0.1 * w * w * std::sin(w * x) + 1e4 * e;
        d[3] = -0.1 * w * w * w * std::cos(w * x) + 1e6 * e;
    });
    p.probes = {0.99};
    p.recommended.elements = 25;
    return p;
}

ProblemSpec poisson_discontinuous_problem()
{
    const auto f = [](double x) { return x < 0.0 ? -10.0 : 10.0; };
    ProblemSpec p = poisson_base("poisson-discontinuous", f, [](double x, double* d) {
        if (x <= 0.0) {
            d[0] = 5.0 * x * (x + 1.0);
            d[1] = 10.0 * x + 5.0;
            d[2] = 10.0;
        } else {
            d[0] = 5.0 * x * (1.0 - x);
            d[1] = 5.0 - 10.0 * x;
            d[2] = -10.0;
        }
        d[3] = 0.0;
    });
    p.oracle_kind = OracleKind::Fdm;
    p.breakpoints = {0.0};
    p.probes = {0.5};
    p.recommended.elements = 30;
    p.recommended.degree = 4;
    p.recommended.quadrature = 3;
    return p;
}

const std::vector<std::string>& problem_names()
{
    static const std::vector<std::string> names = {
        "equilibrium",   "beam",          "pendulum-damped",        "pendulum-undamped",
        "transport",     "poisson-steep", "poisson-boundary-layer", "poisson-discontinuous"};
    return names;
}

ProblemSpec make_problem(const std::string& name)
{
    if (name == "equilibrium") {
        return equilibrium_problem();
    }
    if (name == "beam") {
        return beam_problem();
    }
    if (name == "pendulum-damped") {
        return pendulum_problem(true);
    }
    if (name == "pendulum-undamped") {
        return pendulum_problem(false);
    }
    if (name == "transport") {
        return transport_problem();
    }
    if (name == "poisson-steep") {
        return poisson_steep_problem();
    }
    if (name == "poisson-boundary-layer") {
        return poisson_boundary_layer_problem();
    }
    if (name == "poisson-discontinuous") {
        return poisson_discontinuous_problem();
    }
    throw std::invalid_argument("unknown problem '" + name + "'");
}

} // namespace fennm
