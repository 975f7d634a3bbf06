#pragma once

#include "fennm/basis.hpp"
#include "fennm/diffnet.hpp"
#include "fennm/mesh.hpp"

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fennm {

using Jets = JetBatch<double>;

/// A network-derived field sampled at a batch of points, with its partial
/// derivatives with respect to each jet order (empty partial = zero).
struct SignalValue {
    Eigen::ArrayXd value;
    std::array<Eigen::ArrayXd, kMaxJetOrder + 1> partial;
};

/// Maps (global positions, jets at those positions) to a signal.
using SignalFn = std::function<SignalValue(const Eigen::ArrayXd& x, const Jets& jets)>;

enum class TestSample { Value, DXi, DXi2 };

/// Boundary bracket  c J^p [ B_k(+1) F(x_{n+1}) - B_k(-1) F(x_n) ],
/// with B the test functions (or their xi-derivative) at the element ends.
struct FluxTerm {
    SignalFn flux;
    TestSample test = TestSample::Value;
    double coefficient = 1.0;
    int jacobian_power = 0;
};

/// Quadrature sum  c J^p sum_q filter[k][q] g(x_q).
struct VolumeTerm {
    SignalFn integrand;
    TestSample filter = TestSample::Value;
    double coefficient = 1.0;
    int jacobian_power = 0;
};

enum class Side { Left, Right };

/// Replaces the flux signal of `term` on the `side` boundary of the element
/// whose that-side boundary sits at `position` (natural conditions and
/// point loads).
struct FluxOverride {
    double position = 0.0;
    Side side = Side::Right;
    int term = 0;
    double value = 0.0;
};

struct SignalSpec {
    int max_order = 1;
    std::vector<FluxTerm> fluxes;
    std::vector<VolumeTerm> volumes;
    std::vector<FluxOverride> overrides;
};

/// u^(order)(point) = value, enforced through the boundary loss.
struct EssentialCondition {
    double point = 0.0;
    int order = 0;
    double value = 0.0;
};

/// Per-element residual vector (K entries) for element n, given the jets at
/// its Q quadrature points and at its two end points (left, right).
/// Throws std::invalid_argument when the boundary jets are missing or of too
/// low an order.
Eigen::VectorXd element_residual(int n, const FilterBank& bank, const SignalSpec& spec,
                                 const Jets& quadrature_jets, const Jets& boundary_jets);

/// Residual matrix (K x N_el) together with its adjoint, for a fixed mesh.
///
/// The network is evaluated once per pass on the concatenation
/// [quadrature points | element boundaries | essential-condition points];
/// each boundary jet is shared by the two elements that meet there.
class WeakForm {
public:
    WeakForm(Mesh mesh, FilterBank bank, SignalSpec spec,
             std::vector<EssentialCondition> essentials);

    const Mesh& mesh() const { return mesh_; }
    const FilterBank& bank() const { return bank_; }
    const SignalSpec& spec() const { return spec_; }
    const std::vector<EssentialCondition>& essentials() const { return essentials_; }
    int jet_order() const { return order_; }

    /// Points fed to the network, in pass order.
    const Eigen::VectorXd& points() const { return points_; }
    Eigen::Index quadrature_count() const { return quad_count_; }

    struct Losses {
        double residual = 0.0; // L_R
        double boundary = 0.0; // L_B
    };

    /// Residuals R (K x N_el) from jets over points().
    Eigen::MatrixXd residuals(const Jets& jets) const;

    /// L_R, L_B, and adjoint += d(tau_R L_R + tau_B L_B)/d(jets).
    Losses losses(const Jets& jets, double tau_r, double tau_b, Jets* adjoint) const;

    /// L_R and L_B of a network (no gradient).
    Losses evaluate(const Net& net) const;

    /// L_R, L_B, and gradient of tau_R L_R + tau_B L_B with respect to the
    /// network parameters.
    Losses evaluate(const Net& net, double tau_r, double tau_b, Eigen::VectorXd& gradient) const;

    /// Residual matrix for a network.
    Eigen::MatrixXd residuals(const Net& net) const;

private:
    Jets slice(const Jets& jets, Eigen::Index start, Eigen::Index count) const;
    void accumulate(Jets& target, Eigen::Index start, const SignalValue& signal,
                    const Eigen::ArrayXd& weight) const;

    Mesh mesh_;
    FilterBank bank_;
    SignalSpec spec_;
    std::vector<EssentialCondition> essentials_;
    int order_ = 0;
    Eigen::VectorXd points_;
    Eigen::Index quad_count_ = 0;
    Eigen::VectorXd jacobian_;
    // overridden_[term](side, n): override value or NaN when the network flux is used.
    std::vector<Eigen::Array2Xd> overridden_;
};

/// Mean of squared entries of a residual matrix.
double residual_loss(const Eigen::MatrixXd& residuals);

/// Mean squared violation of the essential conditions.
double boundary_loss(const std::vector<EssentialCondition>& essentials, const Net& net);

enum class Phase { Adam, Lbfgs };

struct LossState {
    double loss_r = 0.0;
    double loss_b = 0.0;
    double tau_r = 1.0;
    double tau_b = 1.0;
    Phase phase = Phase::Adam;
};

/// tau_R L_R + tau_B L_B.
double total_loss(const LossState& state);

/// Gradient ascent on the penalties during the Adam phase, clamped to be
/// nondecreasing; no-op during L-BFGS.
LossState update_penalties(const LossState& state, double rate);

struct HistoryRow {
    long iteration = 0;
    double loss_r = 0.0;
    double loss_b = 0.0;
    double tau_r = 1.0;
    double tau_b = 1.0;
    double total = 0.0;
    Phase phase = Phase::Adam;
};

/// iter,loss_r,loss_b,tau_r,tau_b,total
void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history);
std::vector<HistoryRow> read_history_csv(std::istream& in);

} // namespace fennm
