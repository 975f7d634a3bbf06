#pragma once

#include "fennm/weakform.hpp"

#include <Eigen/Dense>
#include <functional>

namespace fennm::testing {

/// Jets of a closed-form function; `eval` fills d[0..3] at x.
inline Jets jets_of(const Eigen::ArrayXd& x, int order,
                    const std::function<void(double, double*)>& eval)
{
    Jets j;
    j.points = x;
    j.max_order = order;
    for (int k = 0; k <= order; ++k) {
        j.d[k] = Eigen::ArrayXd::Zero(x.size());
    }
    double d[4];
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        eval(x[i], d);
        for (int k = 0; k <= order; ++k) {
            j.d[k][i] = d[k];
        }
    }
    return j;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace fennm::testing
