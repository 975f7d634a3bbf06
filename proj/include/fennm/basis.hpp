#pragma once

#include "fennm/quadrature.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace fennm {

enum class SpaceKind { Lagrange, HermiteCubic };

/// Test functions on the reference element [-1, 1].
///
/// Every function is stored as monomial coefficients in xi (lowest order
/// first), so values and the first two derivatives come from Horner sweeps.
/// Lagrange functions are assembled from their barycentric weights on
/// equispaced nodes; Hermite functions use the standard value/slope cubics.
class TestFunctionSpace {
public:
    SpaceKind kind() const { return kind_; }
    int degree() const { return degree_; }
    int count() const { return static_cast<int>(coefficients_.size()); }
    std::string name() const;

    /// Interpolation nodes of a Lagrange space (empty for Hermite).
    const Eigen::VectorXd& nodes() const { return nodes_; }

    double value(int k, double xi) const { return eval(k, xi, 0); }
    double d_xi(int k, double xi) const { return eval(k, xi, 1); }
    double d_xi2(int k, double xi) const { return eval(k, xi, 2); }

    /// The `order`-th xi-derivative of function k at xi (order 0..2).
    double eval(int k, double xi, int order) const;

    friend TestFunctionSpace lagrange_space(int degree);
    friend TestFunctionSpace hermite_cubic_space();

private:
    SpaceKind kind_ = SpaceKind::Lagrange;
    int degree_ = 1;
    Eigen::VectorXd nodes_;
    std::vector<Eigen::VectorXd> coefficients_;
};

/// Cardinal polynomials of degree p (1..4) on p+1 equispaced nodes.
TestFunctionSpace lagrange_space(int degree);

/// Cubic Hermite interpolators ordered as
/// {value at -1, slope at -1, value at +1, slope at +1}.
TestFunctionSpace hermite_cubic_space();

/// Builds a space from a kind name ("lagrange" or "hermite") and degree.
TestFunctionSpace make_space(const std::string& kind, int degree);

/// Quadrature weights folded into test-function samples (K x Q each).
struct FilterBank {
    TestFunctionSpace space;
    QuadratureRule rule;
    Eigen::MatrixXd value;          // W_q phi_k(xi_q)
    Eigen::MatrixXd d_xi;           // W_q phi_k'(xi_q)
    Eigen::MatrixXd d_xi2;          // W_q phi_k''(xi_q)
    Eigen::MatrixXd boundary_value; // column 0: xi = -1, column 1: xi = +1
    Eigen::MatrixXd boundary_d_xi;
    /// Set when Q is below min_points_for_degree(p).
    bool degraded_accuracy = false;

    int functions() const { return static_cast<int>(value.rows()); }
    int points() const { return static_cast<int>(value.cols()); }
};

FilterBank build_filter_bank(const TestFunctionSpace& space, const QuadratureRule& rule);

} // namespace fennm
