#pragma once

#include <Eigen/Dense>

namespace fennm {

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct QuadratureRule {
    int order = 0;
    Eigen::VectorXd nodes;   // strictly increasing
    Eigen::VectorXd weights; // positive, summing to 2

    /// Applies the rule to samples of an integrand taken at `nodes`.
    template <typename Derived>
    double integrate(const Eigen::DenseBase<Derived>& samples) const
    {
        return weights.dot(samples.derived().matrix());
    }
};

inline constexpr int kMaxQuadratureOrder = 32;

/// Returns the cached Q-point Gauss-Legendre rule, 1 <= Q <= 32.
/// Throws std::invalid_argument outside that range.
const QuadratureRule& gauss_legendre(int points);

/// Smallest Gauss rule order that integrates a degree-p polynomial exactly.
constexpr int min_points_for_degree(int degree) noexcept
{
    return degree <= 0 ? 1 : (degree + 2) / 2;
}

} // namespace fennm
