#include "fennm/weakform.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fennm {
namespace {

constexpr double kNoOverride = std::numeric_limits<double>::quiet_NaN();

const Eigen::MatrixXd& filter_for(const FilterBank& bank, TestSample s)
{
    switch (s) {
    case TestSample::Value:
        return bank.value;
    case TestSample::DXi:
        return bank.d_xi;
    case TestSample::DXi2:
        return bank.d_xi2;
    }
    throw std::logic_error("filter_for: unknown sample");
}

const Eigen::MatrixXd& boundary_for(const FilterBank& bank, TestSample s)
{
    switch (s) {
    case TestSample::Value:
        return bank.boundary_value;
    case TestSample::DXi:
        return bank.boundary_d_xi;
    case TestSample::DXi2:
        break;
    }
    throw std::invalid_argument("flux terms support value and d/dxi test samples only");
}

bool same_point(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

} // namespace

WeakForm::WeakForm(Mesh mesh, FilterBank bank, SignalSpec spec,
                   std::vector<EssentialCondition> essentials)
    : mesh_(std::move(mesh)), bank_(std::move(bank)), spec_(std::move(spec)),
      essentials_(std::move(essentials))
{
    order_ = spec_.max_order;
    for (const auto& e : essentials_) {
        order_ = std::max(order_, e.order);
    }
    if (order_ > kMaxJetOrder) {
        throw std::invalid_argument("WeakForm: jet order above 3 requested");
    }

    const int N = mesh_.elements();
    const int Q = bank_.points();
    quad_count_ = static_cast<Eigen::Index>(N) * Q;
    points_.resize(quad_count_ + N + 1 + static_cast<Eigen::Index>(essentials_.size()));
    points_.head(quad_count_) = quadrature_positions(mesh_, bank_.rule);
    points_.segment(quad_count_, N + 1) = mesh_.boundaries();
    for (std::size_t i = 0; i < essentials_.size(); ++i) {
        points_[quad_count_ + N + 1 + static_cast<Eigen::Index>(i)] = essentials_[i].point;
    }
    jacobian_ = mesh_.jacobians();

    overridden_.assign(spec_.fluxes.size(), Eigen::Array2Xd::Constant(2, N, kNoOverride));
    for (const auto& ov : spec_.overrides) {
        if (ov.term < 0 || ov.term >= static_cast<int>(spec_.fluxes.size())) {
            throw std::invalid_argument("WeakForm: flux override names an unknown term");
        }
        int boundary = -1;
        for (int i = 0; i <= N; ++i) {
            if (same_point(mesh_.boundaries()[i], ov.position)) {
                boundary = i;
                break;
            }
        }
        const int element = ov.side == Side::Right ? boundary - 1 : boundary;
        if (boundary < 0 || element < 0 || element >= N) {
            throw std::invalid_argument("WeakForm: flux override at x=" + std::to_string(ov.position) +
                                        " does not sit on a matching element boundary");
        }
        overridden_[static_cast<std::size_t>(ov.term)](ov.side == Side::Left ? 0 : 1, element) =
            ov.value;
    }
}

Jets WeakForm::slice(const Jets& jets, Eigen::Index start, Eigen::Index count) const
{
    Jets out;
    out.max_order = jets.max_order;
    out.points = jets.points.segment(start, count);
    for (int j = 0; j <= jets.max_order; ++j) {
        out.d[j] = jets.d[j].segment(start, count);
    }
    return out;
}

void WeakForm::accumulate(Jets& target, Eigen::Index start, const SignalValue& signal,
                          const Eigen::ArrayXd& weight) const
{
    for (int j = 0; j <= kMaxJetOrder; ++j) {
        if (signal.partial[j].size() == 0) {
            continue;
        }
        if (j > target.max_order) {
            throw std::logic_error("signal depends on a jet order above the declared maximum");
        }
        target.d[j].segment(start, weight.size()) += weight * signal.partial[j];
    }
}

Eigen::MatrixXd WeakForm::residuals(const Jets& jets) const
{
    if (jets.size() != points_.size() || jets.max_order < order_) {
        throw std::invalid_argument("WeakForm::residuals: jets do not cover the pass points");
    }
    const int N = mesh_.elements();
    const int Q = bank_.points();
    const int K = bank_.functions();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(K, N);

    const Jets quad = slice(jets, 0, quad_count_);
    const Jets bnd = slice(jets, quad_count_, N + 1);

    for (const auto& term : spec_.volumes) {
        const SignalValue sv = term.integrand(quad.points, quad);
        const Eigen::Map<const Eigen::MatrixXd> S(sv.value.data(), Q, N);
        const Eigen::ArrayXd scale = term.coefficient * jacobian_.array().pow(term.jacobian_power);
        R.noalias() += (filter_for(bank_, term.filter) * S) * scale.matrix().asDiagonal();
    }
    for (std::size_t t = 0; t < spec_.fluxes.size(); ++t) {
        const auto& term = spec_.fluxes[t];
        const SignalValue sv = term.flux(bnd.points, bnd);
        const Eigen::MatrixXd& B = boundary_for(bank_, term.test);
        const auto& ov = overridden_[t];
        for (int n = 0; n < N; ++n) {
            const double left = std::isnan(ov(0, n)) ? sv.value[n] : ov(0, n);
            const double right = std::isnan(ov(1, n)) ? sv.value[n + 1] : ov(1, n);
            const double scale = term.coefficient * std::pow(jacobian_[n], term.jacobian_power);
            R.col(n) += scale * (B.col(1) * right - B.col(0) * left);
        }
    }
    return R;
}

WeakForm::Losses WeakForm::losses(const Jets& jets, double tau_r, double tau_b, Jets* adjoint) const
{
    const int N = mesh_.elements();
    const int Q = bank_.points();
    const int K = bank_.functions();
    const Eigen::MatrixXd R = residuals(jets);

    Losses out;
    out.residual = residual_loss(R);
    const Eigen::Index essential_start = quad_count_ + N + 1;
    const auto ne = static_cast<Eigen::Index>(essentials_.size());
    Eigen::ArrayXd violation(ne);
    for (Eigen::Index i = 0; i < ne; ++i) {
        const auto& e = essentials_[static_cast<std::size_t>(i)];
        violation[i] = jets.d[e.order][essential_start + i] - e.value;
    }
    out.boundary = ne > 0 ? violation.square().mean() : 0.0;

    if (adjoint == nullptr) {
        return out;
    }

    for (Eigen::Index i = 0; i < ne; ++i) {
        const auto& e = essentials_[static_cast<std::size_t>(i)];
        adjoint->d[e.order][essential_start + i] += tau_b * 2.0 * violation[i] / ne;
    }

    // dL/dR, then through each term to the signal values and on to the jets.
    const Eigen::MatrixXd G = (tau_r * 2.0 / (static_cast<double>(K) * N)) * R;
    const Jets quad = slice(jets, 0, quad_count_);
    const Jets bnd = slice(jets, quad_count_, N + 1);

    for (const auto& term : spec_.volumes) {
        const SignalValue sv = term.integrand(quad.points, quad);
        const Eigen::ArrayXd scale = term.coefficient * jacobian_.array().pow(term.jacobian_power);
        const Eigen::MatrixXd dS =
            filter_for(bank_, term.filter).transpose() * (G * scale.matrix().asDiagonal());
        const Eigen::Map<const Eigen::ArrayXd> weight(dS.data(), static_cast<Eigen::Index>(Q) * N);
        accumulate(*adjoint, 0, sv, weight);
    }
    for (std::size_t t = 0; t < spec_.fluxes.size(); ++t) {
        const auto& term = spec_.fluxes[t];
        const SignalValue sv = term.flux(bnd.points, bnd);
        const Eigen::MatrixXd& B = boundary_for(bank_, term.test);
        const auto& ov = overridden_[t];
        Eigen::ArrayXd weight = Eigen::ArrayXd::Zero(N + 1);
        for (int n = 0; n < N; ++n) {
            const double scale = term.coefficient * std::pow(jacobian_[n], term.jacobian_power);
            if (std::isnan(ov(1, n))) {
                weight[n + 1] += scale * B.col(1).dot(G.col(n));
            }
            if (std::isnan(ov(0, n))) {
                weight[n] -= scale * B.col(0).dot(G.col(n));
            }
        }
        accumulate(*adjoint, quad_count_, sv, weight);
    }
    return out;
}

WeakForm::Losses WeakForm::evaluate(const Net& net) const
{
    const Jets jets = net.forward_jets(points_, order_);
    return losses(jets, 1.0, 1.0, nullptr);
}

WeakForm::Losses WeakForm::evaluate(const Net& net, double tau_r, double tau_b,
                                    Eigen::VectorXd& gradient) const
{
    Losses out;
    net.param_gradient(points_, order_,
                       [&](const Jets& jets, Jets& adjoint) {
                           out = losses(jets, tau_r, tau_b, &adjoint);
                           return tau_r * out.residual + tau_b * out.boundary;
                       },
                       gradient);
    return out;
}

Eigen::MatrixXd WeakForm::residuals(const Net& net) const
{
    return residuals(net.forward_jets(points_, order_));
}

Eigen::VectorXd element_residual(int n, const FilterBank& bank, const SignalSpec& spec,
                                 const Jets& quadrature_jets, const Jets& boundary_jets)
{
    if (boundary_jets.size() != 2) {
        throw std::invalid_argument("element_residual: element " + std::to_string(n) +
                                    " needs jets at both end points");
    }
    if (boundary_jets.max_order < spec.max_order || quadrature_jets.max_order < spec.max_order) {
        throw std::invalid_argument("element_residual: jets below the signal order");
    }
    if (quadrature_jets.size() != bank.points()) {
        throw std::invalid_argument("element_residual: one jet per quadrature point required");
    }
    const double left = boundary_jets.points[0];
    const double right = boundary_jets.points[1];

    SignalSpec local = spec;
    local.overrides.clear();
    for (const auto& ov : spec.overrides) {
        const double at = ov.side == Side::Left ? left : right;
        if (same_point(at, ov.position)) {
            local.overrides.push_back(ov);
        }
    }
    const WeakForm form(Mesh(Eigen::Vector2d(left, right)), bank, std::move(local), {});

    Jets all;
    all.max_order = std::min(quadrature_jets.max_order, boundary_jets.max_order);
    all.points.resize(bank.points() + 2);
    all.points << quadrature_jets.points, boundary_jets.points;
    for (int j = 0; j <= all.max_order; ++j) {
        all.d[j].resize(all.points.size());
        all.d[j] << quadrature_jets.d[j], boundary_jets.d[j];
    }
    return form.residuals(all).col(0);
}

double residual_loss(const Eigen::MatrixXd& residuals)
{
    if (residuals.size() == 0) {
        return 0.0;
    }
    return residuals.squaredNorm() / static_cast<double>(residuals.size());
}

double boundary_loss(const std::vector<EssentialCondition>& essentials, const Net& net)
{
    if (essentials.empty()) {
        return 0.0;
    }
    int order = 0;
    Eigen::VectorXd x(static_cast<Eigen::Index>(essentials.size()));
    for (std::size_t i = 0; i < essentials.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = essentials[i].point;
        order = std::max(order, essentials[i].order);
    }
    const Jets jets = net.forward_jets(x, order);
    double sum = 0.0;
    for (std::size_t i = 0; i < essentials.size(); ++i) {
        const double v = jets.d[essentials[i].order][static_cast<Eigen::Index>(i)] - essentials[i].value;
        sum += v * v;
    }
    return sum / static_cast<double>(essentials.size());
}

double total_loss(const LossState& state)
{
    return state.tau_r * state.loss_r + state.tau_b * state.loss_b;
}

LossState update_penalties(const LossState& state, double rate)
{
    if (state.phase == Phase::Lbfgs) {
        return state;
    }
    LossState next = state;
    next.tau_r = std::max(state.tau_r, state.tau_r + rate * state.loss_r);
    next.tau_b = std::max(state.tau_b, state.tau_b + rate * state.loss_b);
    return next;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << "iter,loss_r,loss_b,tau_r,tau_b,total\n" << std::setprecision(17);
    for (const auto& row : history) {
        out << row.iteration << ',' << row.loss_r << ',' << row.loss_b << ',' << row.tau_r << ','
            << row.tau_b << ',' << row.total << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

std::vector<HistoryRow> read_history_csv(std::istream& in)
{
    std::vector<HistoryRow> rows;
    std::string line;
    if (!std::getline(in, line) || line.rfind("iter,loss_r", 0) != 0) {
        throw std::invalid_argument("read_history_csv: missing header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        HistoryRow row;
        if (!(fields >> row.iteration >> row.loss_r >> row.loss_b >> row.tau_r >> row.tau_b >>
              row.total)) {
            throw std::invalid_argument("read_history_csv: malformed row");
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace fennm
