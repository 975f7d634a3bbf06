#include "fennm/basis.hpp"

#include <stdexcept>

namespace fennm {
namespace {

Eigen::VectorXd multiply(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size() + b.size() - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i, b.size()) += a[i] * b;
    }
    return out;
}

Eigen::VectorXd linear_factor(double root)
{
    return Eigen::Vector2d(-root, 1.0);
}

} // namespace

double TestFunctionSpace::eval(int k, double xi, int order) const
{
    const Eigen::VectorXd& c = coefficients_.at(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (Eigen::Index i = c.size() - 1; i >= order; --i) {
        double factor = 1.0;
        for (int j = 0; j < order; ++j) {
            factor *= static_cast<double>(i - j);
        }
        acc = acc * xi + factor * c[i];
    }
    return acc;
}

std::string TestFunctionSpace::name() const
{
    if (kind_ == SpaceKind::HermiteCubic) {
        return "hermite";
    }
    return "lagrange" + std::to_string(degree_);
}

TestFunctionSpace lagrange_space(int degree)
{
    if (degree < 1 || degree > 4) {
        throw std::invalid_argument("lagrange_space: degree must be in [1, 4]");
    }
    TestFunctionSpace space;
    space.kind_ = SpaceKind::Lagrange;
    space.degree_ = degree;
    space.nodes_ = Eigen::VectorXd::LinSpaced(degree + 1, -1.0, 1.0);

    for (int j = 0; j <= degree; ++j) {
        double weight = 1.0;
        Eigen::VectorXd poly = Eigen::VectorXd::Ones(1);
        for (int i = 0; i <= degree; ++i) {
            if (i == j) {
                continue;
            }
            weight /= space.nodes_[j] - space.nodes_[i];
            poly = multiply(poly, linear_factor(space.nodes_[i]));
        }
        space.coefficients_.push_back(weight * poly);
    }
    return space;
}

TestFunctionSpace hermite_cubic_space()
{
    TestFunctionSpace space;
    space.kind_ = SpaceKind::HermiteCubic;
    space.degree_ = 3;
    // (1-xi)^2 (2+xi) / 4, (1-xi)^2 (1+xi) / 4, (1+xi)^2 (2-xi) / 4, (1+xi)^2 (xi-1) / 4
    space.coefficients_.push_back(Eigen::Vector4d(2.0, -3.0, 0.0, 1.0) / 4.0);
    space.coefficients_.push_back(Eigen::Vector4d(1.0, -1.0, -1.0, 1.0) / 4.0);
    space.coefficients_.push_back(Eigen::Vector4d(2.0, 3.0, 0.0, -1.0) / 4.0);
    space.coefficients_.push_back(Eigen::Vector4d(-1.0, -1.0, 1.0, 1.0) / 4.0);
    return space;
}

TestFunctionSpace make_space(const std::string& kind, int degree)
{
    if (kind == "lagrange") {
        return lagrange_space(degree);
    }
    if (kind == "hermite") {
        if (degree != 3) {
            throw std::invalid_argument("make_space: hermite space is cubic only");
        }
        return hermite_cubic_space();
    }
    throw std::invalid_argument("make_space: unknown test space kind '" + kind + "'");
}

FilterBank build_filter_bank(const TestFunctionSpace& space, const QuadratureRule& rule)
{
    const int K = space.count();
    const int Q = rule.order;
    FilterBank bank{space, rule, Eigen::MatrixXd(K, Q), Eigen::MatrixXd(K, Q),
                    Eigen::MatrixXd(K, Q), Eigen::MatrixXd(K, 2), Eigen::MatrixXd(K, 2)};
    for (int k = 0; k < K; ++k) {
        for (int q = 0; q < Q; ++q) {
            const double w = rule.weights[q];
            const double xi = rule.nodes[q];
            bank.value(k, q) = w * space.value(k, xi);
            bank.d_xi(k, q) = w * space.d_xi(k, xi);
            bank.d_xi2(k, q) = w * space.d_xi2(k, xi);
        }
        bank.boundary_value(k, 0) = space.value(k, -1.0);
        bank.boundary_value(k, 1) = space.value(k, 1.0);
        bank.boundary_d_xi(k, 0) = space.d_xi(k, -1.0);
        bank.boundary_d_xi(k, 1) = space.d_xi(k, 1.0);
    }
    bank.degraded_accuracy = Q < min_points_for_degree(space.degree());
    return bank;
}

} // namespace fennm
