#include "fennm/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

using namespace fennm;

TEST(Quadrature, MidpointRule)
{
    const auto& r = gauss_legendre(1);
    ASSERT_EQ(r.nodes.size(), 1);
    EXPECT_DOUBLE_EQ(r.nodes[0], 0.0);
    EXPECT_DOUBLE_EQ(r.weights[0], 2.0);
}

TEST(Quadrature, TwoPointNodes)
{
    const auto& r = gauss_legendre(2);
    EXPECT_NEAR(r.nodes[0], -0.5773502691896258, 1e-15);
    EXPECT_NEAR(r.nodes[1], 0.5773502691896258, 1e-15);
    EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(Quadrature, ThreePointRule)
{
    const auto& r = gauss_legendre(3);
    EXPECT_NEAR(r.nodes[2], 0.7745966692414834, 1e-15);
    EXPECT_NEAR(r.weights[0], 5.0 / 9.0, 1e-15);
    EXPECT_NEAR(r.weights[1], 8.0 / 9.0, 1e-15);
}

TEST(Quadrature, FivePointMonomials)
{
    const auto& r = gauss_legendre(5);
    EXPECT_NEAR(r.integrate(r.nodes.array().pow(9)), 0.0, 1e-15);
    EXPECT_NEAR(r.integrate(r.nodes.array().pow(8)), 2.0 / 9.0, 1e-14);
}

TEST(Quadrature, StructureForAllOrders)
{
    for (int q = 1; q <= kMaxQuadratureOrder; ++q) {
        const auto& r = gauss_legendre(q);
        ASSERT_EQ(r.order, q);
        EXPECT_NEAR(r.weights.sum(), 2.0, 1e-13) << "Q=" << q;
        EXPECT_TRUE((r.weights.array() > 0.0).all());
        for (int i = 0; i + 1 < q; ++i) {
            EXPECT_LT(r.nodes[i], r.nodes[i + 1]);
        }
        for (int i = 0; i < q; ++i) {
            EXPECT_NEAR(r.nodes[i], -r.nodes[q - 1 - i], 1e-15);
            EXPECT_NEAR(r.weights[i], r.weights[q - 1 - i], 1e-15);
        }
    }
}

TEST(Quadrature, ExactUpToDegree2QMinus1)
{
    for (int q = 1; q <= 20; ++q) {
        const auto& r = gauss_legendre(q);
        for (int k = 0; k <= 2 * q - 1; ++k) {
            const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
            EXPECT_NEAR(r.integrate(r.nodes.array().pow(k)), exact, 1e-13) << "Q=" << q << " k=" << k;
        }
    }
}

TEST(Quadrature, NotExactAt2Q)
{
    const auto& r = gauss_legendre(3);
    EXPECT_GT(std::abs(r.integrate(r.nodes.array().pow(6)) - 2.0 / 7.0), 1e-3);
}

TEST(Quadrature, CachedInstance)
{
    EXPECT_EQ(&gauss_legendre(7), &gauss_legendre(7));
}

TEST(Quadrature, RejectsOutOfRange)
{
    EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
    EXPECT_THROW(gauss_legendre(33), std::invalid_argument);
}

TEST(Quadrature, MinimumPoints)
{
    EXPECT_EQ(min_points_for_degree(0), 1);
    EXPECT_EQ(min_points_for_degree(1), 1);
    EXPECT_EQ(min_points_for_degree(2), 2);
    EXPECT_EQ(min_points_for_degree(3), 2);
    EXPECT_EQ(min_points_for_degree(4), 3);
}
