#pragma once

#include "fennm/diffnet.hpp"
#include "fennm/weakform.hpp"

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace fennm {

/// f(x), writing the gradient into g.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

struct AdamState {
    long step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected ADAM update of `params` in place. Throws
/// std::runtime_error on a non-finite gradient.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad);

struct LbfgsState {
    int history = 20;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 40;
    long iteration = 0;
    std::deque<Eigen::VectorXd> s;
    std::deque<Eigen::VectorXd> y;
};

enum class LbfgsStop { MaxIterations, GradientTolerance, LossFloor, LineSearchFailure, NonFinite };

struct LbfgsResult {
    std::vector<double> history; // loss after each accepted iteration
    long iterations = 0;
    long evaluations = 0;
    LbfgsStop reason = LbfgsStop::MaxIterations;
};

/// Called after every accepted iteration with (iteration, loss, params).
using IterationHook = std::function<void(long, double, const Eigen::VectorXd&)>;

inline constexpr double kMachineFloor = 2.220e-16;

/// Two-loop L-BFGS with a strong-Wolfe line search. Stops on max_iters,
/// ||g|| <= tol, or f <= loss_floor. A failed line search restarts once from
/// steepest descent; a second consecutive failure terminates.
LbfgsResult lbfgs_run(LbfgsState& state, Eigen::VectorXd& params, const Objective& objective,
                      long max_iters, double tol, double loss_floor = kMachineFloor,
                      const IterationHook& hook = {});

/// Ascent: tau += eta * L. Adam: the same ascent direction through ADAM
/// moments. Both are clamped nondecreasing.
enum class PenaltyRule { Ascent, Adam };

struct Schedule {
    long adam_epochs = 5000;
    long lbfgs_epochs = 5000;
    double alpha = 1e-3;
    /// Penalty ascent rate; negative means "same as alpha".
    double eta_tau = -1.0;
    /// Early stop on total loss; non-finite disables it.
    double epsilon = kMachineFloor;
    double lbfgs_tol = 0.0;
    PenaltyRule penalty_rule = PenaltyRule::Ascent;

    double penalty_rate() const { return eta_tau < 0.0 ? alpha : eta_tau; }
};

struct TrainResult {
    Net net;
    std::vector<HistoryRow> history;
    LossState final_state;
    bool diverged = false;
    bool early_stopped = false;
};

/// ADAM with simultaneous penalty ascent, then L-BFGS with frozen penalties.
/// Row i of the history holds the losses after i parameter updates.
TrainResult train(const WeakForm& form, Net net, const Schedule& schedule,
                  LossState initial = LossState{});

} // namespace fennm
