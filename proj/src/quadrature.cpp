#include "fennm/quadrature.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace fennm {
namespace {

struct LegendreEval {
    double value;
    double slope;
};

// Three-term recurrence for P_n and its derivative.
LegendreEval legendre(int n, double x)
{
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    if (n == 0) {
        return {1.0, 0.0};
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

QuadratureRule build_rule(int points)
{
    QuadratureRule rule;
    rule.order = points;
    rule.nodes.resize(points);
    rule.weights.resize(points);

    const int half = (points + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-type guess for the i-th largest root.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        LegendreEval p{};
        for (int iter = 0; iter < 100; ++iter) {
            p = legendre(points, x);
            const double dx = p.value / p.slope;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        p = legendre(points, x);
        const double w = 2.0 / ((1.0 - x * x) * p.slope * p.slope);
        rule.nodes[i] = -x;
        rule.nodes[points - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[points - 1 - i] = w;
    }
    if (points % 2 == 1) {
        rule.nodes[points / 2] = 0.0;
    }
    return rule;
}

} // namespace

const QuadratureRule& gauss_legendre(int points)
{
    if (points < 1 || points > kMaxQuadratureOrder) {
        throw std::invalid_argument("gauss_legendre: order must be in [1, 32], got " +
                                    std::to_string(points));
    }
    static std::array<std::optional<QuadratureRule>, kMaxQuadratureOrder + 1> cache;
    static std::mutex guard;
    std::lock_guard lock(guard);
    auto& slot = cache[points];
    if (!slot) {
        slot = build_rule(points);
    }
    return *slot;
}

} // namespace fennm
