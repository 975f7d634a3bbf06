#include "fennm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fennm {

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad)
{
    if (grad.size() != params.size()) {
        throw std::invalid_argument("adam_step: gradient and parameter sizes differ");
    }
    if (!grad.allFinite()) {
        throw std::runtime_error("adam_step: non-finite gradient at step " +
                                 std::to_string(state.step + 1));
    }
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
    }
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= state.alpha * (state.m.array() / c1) /
                      ((state.v.array() / c2).sqrt() + state.epsilon);
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

class LineSearch {
public:
    LineSearch(const Objective& objective, const LbfgsState& cfg, const Eigen::VectorXd& x0,
               double f0, const Eigen::VectorXd& d, long& evaluations)
        : objective_(objective), cfg_(cfg), x0_(x0), d_(d), evaluations_(evaluations)
    {
        origin_.f = f0;
    }

    bool run(double slope0, double alpha, Probe& out)
    {
        origin_.slope = slope0;
        Probe prev = origin_;
        for (int i = 1; i <= cfg_.max_line_search; ++i) {
            Probe cur = probe(alpha);
            if (!std::isfinite(cur.f) || !std::isfinite(cur.slope)) {
                cur.f = std::numeric_limits<double>::infinity();
                return zoom(prev, cur, out);
            }
            if (cur.f > origin_.f + cfg_.c1 * alpha * slope0 || (i > 1 && cur.f >= prev.f)) {
                return zoom(prev, cur, out);
            }
            if (std::abs(cur.slope) <= -cfg_.c2 * slope0) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope >= 0.0) {
                return zoom(cur, prev, out);
            }
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return false;
    }

private:
    Probe probe(double alpha)
    {
        Probe p;
        p.alpha = alpha;
        p.x = x0_ + alpha * d_;
        p.g.resize(p.x.size());
        p.f = objective_(p.x, p.g);
        p.slope = p.g.dot(d_);
        ++evaluations_;
        return p;
    }

    static double interpolate(const Probe& a, const Probe& b)
    {
        const double lo = std::min(a.alpha, b.alpha);
        const double hi = std::max(a.alpha, b.alpha);
        const double width = hi - lo;
        double t = 0.5 * (lo + hi);
        if (std::isfinite(b.f)) {
            const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
            const double disc = d1 * d1 - a.slope * b.slope;
            if (disc >= 0.0) {
                const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
                const double cubic =
                    b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
                if (std::isfinite(cubic)) {
                    t = cubic;
                }
            }
        }
        return std::clamp(t, lo + 0.1 * width, hi - 0.1 * width);
    }

    bool zoom(Probe lo, Probe hi, Probe& out)
    {
        const double slope0 = origin_.slope;
        for (int j = 0; j < cfg_.max_line_search; ++j) {
            if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) {
                break;
            }
            const double alpha = interpolate(lo, hi);
            Probe cur = probe(alpha);
            if (!std::isfinite(cur.f) || cur.f > origin_.f + cfg_.c1 * alpha * slope0 || cur.f >= lo.f) {
                if (!std::isfinite(cur.f)) {
                    cur.f = std::numeric_limits<double>::infinity();
                }
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -cfg_.c2 * slope0) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) {
                hi = lo;
            }
            lo = std::move(cur);
        }
        // Interval collapsed: keep the best sufficient-decrease point if any.
        if (lo.alpha > 0.0 && lo.f < origin_.f) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const Objective& objective_;
    const LbfgsState& cfg_;
    const Eigen::VectorXd& x0_;
    const Eigen::VectorXd& d_;
    long& evaluations_;
    Probe origin_;
};

Eigen::VectorXd two_loop(const LbfgsState& state, const Eigen::VectorXd& g)
{
    const std::size_t m = state.s.size();
    Eigen::VectorXd q = g;
    std::vector<double> alpha(m);
    std::vector<double> rho(m);
    for (std::size_t i = m; i-- > 0;) {
        rho[i] = 1.0 / state.y[i].dot(state.s[i]);
        alpha[i] = rho[i] * state.s[i].dot(q);
        q -= alpha[i] * state.y[i];
    }
    if (m > 0) {
        q *= state.s.back().dot(state.y.back()) / state.y.back().squaredNorm();
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * state.y[i].dot(q);
        q += (alpha[i] - beta) * state.s[i];
    }
    return -q;
}

} // namespace

LbfgsResult lbfgs_run(LbfgsState& state, Eigen::VectorXd& params, const Objective& objective,
                      long max_iters, double tol, double loss_floor, const IterationHook& hook)
{
    LbfgsResult result;
    Eigen::VectorXd g(params.size());
    double f = objective(params, g);
    ++result.evaluations;
    if (!std::isfinite(f) || !g.allFinite()) {
        result.reason = LbfgsStop::NonFinite;
        return result;
    }
    if (f <= loss_floor) {
        result.reason = LbfgsStop::LossFloor;
        return result;
    }
    if (g.norm() <= tol) {
        result.reason = LbfgsStop::GradientTolerance;
        return result;
    }

    int failures = 0;
    while (result.iterations < max_iters) {
        Eigen::VectorXd d = two_loop(state, g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            state.s.clear();
            state.y.clear();
            d = -g;
            slope = -g.squaredNorm();
        }
        const double alpha0 = state.s.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

        Probe accepted;
        LineSearch search(objective, state, params, f, d, result.evaluations);
        if (!search.run(slope, alpha0, accepted)) {
            ++failures;
            if (failures >= 2 || state.s.empty()) {
                result.reason = LbfgsStop::LineSearchFailure;
                return result;
            }
            // Retry from steepest descent.
            state.s.clear();
            state.y.clear();
            continue;
        }
        failures = 0;

        Eigen::VectorXd s = accepted.x - params;
        Eigen::VectorXd y = accepted.g - g;
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            state.s.push_back(std::move(s));
            state.y.push_back(std::move(y));
            if (static_cast<int>(state.s.size()) > state.history) {
                state.s.pop_front();
                state.y.pop_front();
            }
        }
        params = std::move(accepted.x);
        g = std::move(accepted.g);
        f = accepted.f;
        ++result.iterations;
        ++state.iteration;
        result.history.push_back(f);
        if (hook) {
            hook(result.iterations, f, params);
        }
        if (!std::isfinite(f)) {
            result.reason = LbfgsStop::NonFinite;
            return result;
        }
        if (f <= loss_floor) {
            result.reason = LbfgsStop::LossFloor;
            return result;
        }
        if (g.norm() <= tol) {
            result.reason = LbfgsStop::GradientTolerance;
            return result;
        }
    }
    result.reason = LbfgsStop::MaxIterations;
    return result;
}

TrainResult train(const WeakForm& form, Net net, const Schedule& schedule, LossState initial)
{
    TrainResult result;
    LossState state = initial;
    state.phase = Phase::Adam;
    Eigen::VectorXd params = net.parameters();
    Eigen::VectorXd grad(params.size());
    const double rate = schedule.penalty_rate();
    const auto stop_early = [&](double total) {
        return std::isfinite(schedule.epsilon) && total <= schedule.epsilon;
    };
    const auto record = [&](long iteration) {
        result.history.push_back(
            {iteration, state.loss_r, state.loss_b, state.tau_r, state.tau_b, total_loss(state), state.phase});
    };

    AdamState adam;
    adam.alpha = schedule.alpha;
    AdamState tau_adam;
    tau_adam.alpha = rate;
    Eigen::VectorXd tau(2);
    Eigen::VectorXd tau_grad(2);
    bool finished = false;
    for (long i = 0;; ++i) {
        net.set_parameters(params);
        const auto losses = form.evaluate(net, state.tau_r, state.tau_b, grad);
        state.loss_r = losses.residual;
        state.loss_b = losses.boundary;
        record(i);
        const double total = total_loss(state);
        if (!std::isfinite(total) || !grad.allFinite()) {
            result.diverged = true;
            finished = true;
            break;
        }
        if (stop_early(total)) {
            result.early_stopped = true;
            finished = true;
            break;
        }
        if (i >= schedule.adam_epochs) {
            break;
        }
        if (schedule.penalty_rule == PenaltyRule::Adam) {
            tau << state.tau_r, state.tau_b;
            tau_grad << -state.loss_r, -state.loss_b;
            adam_step(tau_adam, tau, tau_grad);
            state.tau_r = std::max(state.tau_r, tau[0]);
            state.tau_b = std::max(state.tau_b, tau[1]);
        } else {
            state = update_penalties(state, rate);
        }
        adam_step(adam, params, grad);
    }

    if (!finished && schedule.lbfgs_epochs > 0) {
        state.phase = Phase::Lbfgs;
        const long offset = schedule.adam_epochs;
        Eigen::VectorXd last_x;
        WeakForm::Losses last{};
        const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            net.set_parameters(x);
            last = form.evaluate(net, state.tau_r, state.tau_b, g);
            last_x = x;
            return state.tau_r * last.residual + state.tau_b * last.boundary;
        };
        const IterationHook hook = [&](long it, double, const Eigen::VectorXd& x) {
            if (x.size() != last_x.size() || x != last_x) {
                net.set_parameters(x);
                last = form.evaluate(net);
            }
            state.loss_r = last.residual;
            state.loss_b = last.boundary;
            record(offset + it);
        };
        LbfgsState lbfgs;
        const double floor = std::isfinite(schedule.epsilon) ? schedule.epsilon : -1.0;
        const LbfgsResult run =
            lbfgs_run(lbfgs, params, objective, schedule.lbfgs_epochs, schedule.lbfgs_tol, floor, hook);
        result.diverged = run.reason == LbfgsStop::NonFinite;
        result.early_stopped = run.reason == LbfgsStop::LossFloor;
    }

    net.set_parameters(params);
    result.net = std::move(net);
    result.final_state = state;
    return result;
}

} // namespace fennm
