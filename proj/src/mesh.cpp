#include "fennm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fennm {

Mesh::Mesh(Eigen::VectorXd boundaries) : boundaries_(std::move(boundaries))
{
    if (boundaries_.size() < 2) {
        throw std::invalid_argument("Mesh: need at least two boundaries");
    }
    for (Eigen::Index i = 0; i < boundaries_.size(); ++i) {
        if (!std::isfinite(boundaries_[i])) {
            throw std::invalid_argument("Mesh: non-finite boundary");
        }
        if (i > 0 && !(boundaries_[i] > boundaries_[i - 1])) {
            throw std::invalid_argument("Mesh: boundaries must be strictly increasing");
        }
    }
}

Eigen::VectorXd Mesh::jacobians() const
{
    const Eigen::Index n = boundaries_.size() - 1;
    return 0.5 * (boundaries_.tail(n) - boundaries_.head(n));
}

int Mesh::locate(double x) const
{
    const auto* begin = boundaries_.data();
    const auto* end = begin + boundaries_.size();
    const auto it = std::upper_bound(begin + 1, end - 1, x);
    return static_cast<int>(it - begin) - 1;
}

Mesh uniform_mesh(double a, double b, int elements)
{
    if (!(a < b)) {
        throw std::invalid_argument("uniform_mesh: require a < b");
    }
    if (elements < 1) {
        throw std::invalid_argument("uniform_mesh: need at least one element");
    }
    Eigen::VectorXd x(elements + 1);
    const double h = (b - a) / elements;
    for (int i = 0; i <= elements; ++i) {
        x[i] = a + h * i;
    }
    x[elements] = b;
    return Mesh(std::move(x));
}

std::vector<ElementPoints> element_points(const Mesh& mesh, const QuadratureRule& rule)
{
    std::vector<ElementPoints> out;
    out.reserve(static_cast<std::size_t>(mesh.elements()));
    for (int n = 0; n < mesh.elements(); ++n) {
        ElementPoints pts;
        pts.element = n;
        pts.left = mesh.element_left(n);
        pts.right = mesh.element_right(n);
        pts.positions = (pts.left + mesh.jacobian(n) * (1.0 + rule.nodes.array())).matrix();
        out.push_back(std::move(pts));
    }
    return out;
}

Eigen::VectorXd quadrature_positions(const Mesh& mesh, const QuadratureRule& rule)
{
    const int Q = rule.order;
    Eigen::VectorXd x(static_cast<Eigen::Index>(mesh.elements()) * Q);
    for (int n = 0; n < mesh.elements(); ++n) {
        x.segment(n * Q, Q) =
            (mesh.element_left(n) + mesh.jacobian(n) * (1.0 + rule.nodes.array())).matrix();
    }
    return x;
}

Mesh refine(const Mesh& mesh, const std::set<int>& marks)
{
    for (int m : marks) {
        if (m < 0 || m >= mesh.elements()) {
            throw std::invalid_argument("refine: element index out of range");
        }
    }
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(mesh.elements() + 1 + static_cast<int>(marks.size())));
    for (int n = 0; n < mesh.elements(); ++n) {
        x.push_back(mesh.element_left(n));
        if (marks.contains(n)) {
            x.push_back(0.5 * (mesh.element_left(n) + mesh.element_right(n)));
        }
    }
    x.push_back(mesh.right());
    return Mesh(Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

Mesh coarsen(const Mesh& mesh, const std::set<int>& pair_starts)
{
    int previous = -2;
    for (int m : pair_starts) {
        if (m < 0 || m + 1 >= mesh.elements()) {
            throw std::invalid_argument("coarsen: pair index out of range");
        }
        if (m <= previous + 1) {
            throw std::invalid_argument("coarsen: overlapping pairs");
        }
        previous = m;
    }
    std::vector<double> x;
    for (int i = 0; i <= mesh.elements(); ++i) {
        // Drop the interior boundary of each merged pair.
        if (i > 0 && pair_starts.contains(i - 1)) {
            continue;
        }
        x.push_back(mesh.boundaries()[i]);
    }
    return Mesh(Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

void write_mesh(std::ostream& out, const Mesh& mesh)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < mesh.boundaries().size(); ++i) {
        out << mesh.boundaries()[i] << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

Mesh read_mesh(std::istream& in)
{
    std::vector<double> x;
    double v = 0.0;
    while (in >> v) {
        x.push_back(v);
    }
    if (!in.eof()) {
        throw std::invalid_argument("read_mesh: malformed boundary line");
    }
    return Mesh(Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

void save_mesh(const std::string& path, const Mesh& mesh)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_mesh: cannot open " + path);
    }
    write_mesh(out, mesh);
}

Mesh load_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_mesh: cannot open " + path);
    }
    return read_mesh(in);
}

} // namespace fennm
