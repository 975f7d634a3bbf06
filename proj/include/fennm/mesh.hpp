#pragma once

#include "fennm/quadrature.hpp"

#include <Eigen/Dense>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fennm {

/// Ordered 1D grid stored as its element boundaries x_0 < ... < x_N.
class Mesh {
public:
    Mesh() = default;
    /// Throws std::invalid_argument unless boundaries are strictly increasing
    /// with at least two entries.
    explicit Mesh(Eigen::VectorXd boundaries);

    int elements() const { return static_cast<int>(boundaries_.size()) - 1; }
    const Eigen::VectorXd& boundaries() const { return boundaries_; }
    double left() const { return boundaries_[0]; }
    double right() const { return boundaries_[boundaries_.size() - 1]; }

    double element_left(int n) const { return boundaries_[n]; }
    double element_right(int n) const { return boundaries_[n + 1]; }
    /// Half the element length: x = x_n + J (1 + xi).
    double jacobian(int n) const { return 0.5 * (boundaries_[n + 1] - boundaries_[n]); }
    Eigen::VectorXd jacobians() const;

    /// Maps a local coordinate of element n to global coordinates.
    double to_global(int n, double xi) const { return boundaries_[n] + jacobian(n) * (1.0 + xi); }

    /// Index of the element containing x (right-closed on the last element).
    int locate(double x) const;

    bool operator==(const Mesh& other) const
    {
        return boundaries_.size() == other.boundaries_.size() &&
               boundaries_ == other.boundaries_;
    }

private:
    Eigen::VectorXd boundaries_;
};

struct ElementPoints {
    int element = 0;
    Eigen::VectorXd positions; // x_n + J_n (1 + xi_q)
    double left = 0.0;
    double right = 0.0;
};

Mesh uniform_mesh(double a, double b, int elements);

std::vector<ElementPoints> element_points(const Mesh& mesh, const QuadratureRule& rule);

/// All quadrature positions, element-major (element n occupies
/// entries [n Q, (n + 1) Q)).
Eigen::VectorXd quadrature_positions(const Mesh& mesh, const QuadratureRule& rule);

/// Bisects every marked element.
Mesh refine(const Mesh& mesh, const std::set<int>& marks);

/// Merges each marked pair (n, n + 1) into a single element. Pairs are named
/// by their left element index and must not overlap.
Mesh coarsen(const Mesh& mesh, const std::set<int>& pair_starts);

/// One boundary per line, 17 significant digits.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

} // namespace fennm
