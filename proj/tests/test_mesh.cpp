#include "fennm/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

using namespace fennm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(v.size());
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

void expect_boundaries(const Mesh& m, std::initializer_list<double> expected)
{
    ASSERT_EQ(m.boundaries().size(), static_cast<Eigen::Index>(expected.size()));
    Eigen::Index i = 0;
    for (double x : expected) {
        EXPECT_NEAR(m.boundaries()[i++], x, 1e-15);
    }
}

} // namespace

TEST(Mesh, UniformFiveElements)
{
    const Mesh m = uniform_mesh(1, 2, 5);
    expect_boundaries(m, {1, 1.2, 1.4, 1.6, 1.8, 2});
    for (int n = 0; n < 5; ++n) {
        EXPECT_NEAR(m.jacobian(n), 0.1, 1e-15);
    }
}

TEST(Mesh, UniformSingleAndSymmetric)
{
    EXPECT_DOUBLE_EQ(uniform_mesh(0, 1, 1).jacobian(0), 0.5);
    expect_boundaries(uniform_mesh(-1, 1, 4), {-1, -0.5, 0, 0.5, 1});
}

TEST(Mesh, UniformRejectsBadInput)
{
    EXPECT_THROW(uniform_mesh(1, 1, 3), std::invalid_argument);
    EXPECT_THROW(uniform_mesh(2, 1, 3), std::invalid_argument);
    EXPECT_THROW(uniform_mesh(0, 1, 0), std::invalid_argument);
    EXPECT_THROW(Mesh(vec({0, 0.5, 0.5, 1})), std::invalid_argument);
    EXPECT_THROW(Mesh(vec({0})), std::invalid_argument);
}

TEST(Mesh, QuadraturePositions)
{
    const auto pts = element_points(uniform_mesh(1, 2, 5), gauss_legendre(1));
    ASSERT_EQ(pts.size(), 5u);
    EXPECT_NEAR(pts[0].positions[0], 1.1, 1e-15);
    const auto x = quadrature_positions(uniform_mesh(0, 1, 1), gauss_legendre(2));
    EXPECT_NEAR(x[0], 0.21132486540518713, 1e-15);
    EXPECT_NEAR(x[1], 0.78867513459481287, 1e-15);
    const auto y = quadrature_positions(uniform_mesh(0, 1, 3), gauss_legendre(4));
    EXPECT_EQ(y.size(), 12);
    for (int n = 0; n < 3; ++n) {
        for (int q = 0; q < 4; ++q) {
            EXPECT_GT(y[4 * n + q], n / 3.0);
            EXPECT_LT(y[4 * n + q], (n + 1) / 3.0);
        }
    }
}

TEST(Mesh, Locate)
{
    const Mesh m = uniform_mesh(0, 1, 4);
    EXPECT_EQ(m.locate(0.0), 0);
    EXPECT_EQ(m.locate(0.3), 1);
    EXPECT_EQ(m.locate(1.0), 3);
}

TEST(Mesh, Refine)
{
    expect_boundaries(refine(uniform_mesh(0, 1, 2), {1}), {0, 0.5, 0.75, 1});
    EXPECT_EQ(refine(uniform_mesh(0, 1, 2), {}), uniform_mesh(0, 1, 2));
    expect_boundaries(refine(uniform_mesh(-1, 1, 4), {1, 2}), {-1, -0.5, -0.25, 0, 0.25, 0.5, 1});
    EXPECT_THROW(refine(uniform_mesh(0, 1, 2), {2}), std::invalid_argument);
}

TEST(Mesh, Coarsen)
{
    expect_boundaries(coarsen(Mesh(vec({0, 0.25, 0.5, 1})), {0}), {0, 0.5, 1});
    EXPECT_EQ(coarsen(uniform_mesh(0, 1, 3), {}), uniform_mesh(0, 1, 3));
    EXPECT_THROW(coarsen(uniform_mesh(0, 1, 4), {0, 1}), std::invalid_argument);
    EXPECT_THROW(coarsen(uniform_mesh(0, 1, 4), {3}), std::invalid_argument);
}

TEST(Mesh, RefineThenCoarsenIsIdentity)
{
    const Mesh m = uniform_mesh(-1, 1, 5);
    EXPECT_EQ(coarsen(refine(m, {2}), {2}), m);
}

TEST(Mesh, TextRoundTrip)
{
    const Mesh m(vec({0.1, 1.0 / 3.0, 0.7, 2.0}));
    std::stringstream ss;
    write_mesh(ss, m);
    EXPECT_EQ(read_mesh(ss), m);
    std::istringstream bad("0\nabc\n");
    EXPECT_THROW(read_mesh(bad), std::invalid_argument);
}
