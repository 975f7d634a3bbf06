#include "fennm/harness.hpp"

#include "fennm/baselines.hpp"
#include "fennm/basis.hpp"
#include "fennm/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fennm {
namespace {

using nlohmann::json;

double epsilon_from_json(const json& j)
{
    if (j.is_null()) {
        return std::numeric_limits<double>::infinity();
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "none" || s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        throw std::invalid_argument("config: schedule.epsilon must be a number, null or \"none\"");
    }
    return j.get<double>();
}

template <typename T>
void read_field(const json& obj, const char* key, T& target)
{
    if (obj.contains(key)) {
        target = obj.at(key).get<T>();
    }
}

json array_json(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

/// Replaces non-finite values, which JSON cannot carry, by null.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

RunConfig recommended_config(const std::string& problem)
{
    const ProblemSpec spec = make_problem(problem);
    const Recommended& r = spec.recommended;
    RunConfig cfg;
    cfg.problem = problem;
    cfg.mesh.elements = r.elements;
    cfg.test_space = {r.space, r.degree};
    cfg.quadrature_points = r.quadrature;
    cfg.net = r.net;
    cfg.schedule.adam_epochs = r.adam_epochs;
    cfg.schedule.lbfgs_epochs = r.lbfgs_epochs;
    return cfg;
}

RunConfig parse_config(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("problem")) {
        throw std::invalid_argument("config: a \"problem\" entry is required");
    }
    try {
        RunConfig cfg = recommended_config(doc.at("problem").get<std::string>());
        if (doc.contains("mesh")) {
            const json& m = doc.at("mesh");
            if (m.contains("boundaries")) {
                cfg.mesh.boundaries = m.at("boundaries").get<std::vector<double>>();
                cfg.mesh.elements = static_cast<int>(cfg.mesh.boundaries.size()) - 1;
            }
            read_field(m, "elements", cfg.mesh.elements);
        }
        if (doc.contains("test_space")) {
            read_field(doc.at("test_space"), "kind", cfg.test_space.kind);
            read_field(doc.at("test_space"), "degree", cfg.test_space.degree);
        }
        read_field(doc, "quadrature_points", cfg.quadrature_points);
        if (doc.contains("net")) {
            const json& n = doc.at("net");
            read_field(n, "layers", cfg.net.layers);
            read_field(n, "width", cfg.net.width);
            if (n.contains("activation")) {
                cfg.net.activation = parse_activation(n.at("activation").get<std::string>());
            }
        }
        if (doc.contains("schedule")) {
            const json& s = doc.at("schedule");
            read_field(s, "adam_epochs", cfg.schedule.adam_epochs);
            read_field(s, "lbfgs_epochs", cfg.schedule.lbfgs_epochs);
            read_field(s, "alpha", cfg.schedule.alpha);
            read_field(s, "eta_tau", cfg.schedule.eta_tau);
            if (s.contains("epsilon")) {
                cfg.schedule.epsilon = epsilon_from_json(s.at("epsilon"));
            }
            if (s.contains("penalty_rule")) {
                const auto rule = s.at("penalty_rule").get<std::string>();
                if (rule == "ascent") {
                    cfg.schedule.penalty_rule = PenaltyRule::Ascent;
                } else if (rule == "adam") {
                    cfg.schedule.penalty_rule = PenaltyRule::Adam;
                } else {
                    throw std::invalid_argument("config: penalty_rule must be \"ascent\" or \"adam\"");
                }
            }
        }
        read_field(doc, "seeds", cfg.seeds);
        read_field(doc, "output_dir", cfg.output_dir);
        read_field(doc, "eval_points", cfg.eval_points);
        if (cfg.seeds.empty()) {
            throw std::invalid_argument("config: seeds must not be empty");
        }
        if (cfg.eval_points < 2) {
            throw std::invalid_argument("config: eval_points must be at least 2");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg)
{
    json doc;
    doc["problem"] = cfg.problem;
    if (cfg.mesh.boundaries.empty()) {
        doc["mesh"] = {{"elements", cfg.mesh.elements}};
    } else {
        doc["mesh"] = {{"boundaries", cfg.mesh.boundaries}};
    }
    doc["test_space"] = {{"kind", cfg.test_space.kind}, {"degree", cfg.test_space.degree}};
    doc["quadrature_points"] = cfg.quadrature_points;
    doc["net"] = {{"layers", cfg.net.layers},
                  {"width", cfg.net.width},
                  {"activation", to_string(cfg.net.activation)}};
    doc["schedule"] = {{"adam_epochs", cfg.schedule.adam_epochs},
                       {"lbfgs_epochs", cfg.schedule.lbfgs_epochs},
                       {"alpha", cfg.schedule.alpha},
                       {"eta_tau", cfg.schedule.penalty_rate()},
                       {"epsilon", number_json(cfg.schedule.epsilon)},
                       {"penalty_rule",
                        cfg.schedule.penalty_rule == PenaltyRule::Adam ? "adam" : "ascent"}};
    doc["seeds"] = cfg.seeds;
    doc["output_dir"] = cfg.output_dir;
    doc["eval_points"] = cfg.eval_points;
    return doc.dump(2);
}

Mesh build_mesh(const RunConfig& cfg, const ProblemSpec& problem)
{
    Mesh mesh = cfg.mesh.boundaries.empty()
                    ? uniform_mesh(problem.a, problem.b, cfg.mesh.elements)
                    : Mesh(Eigen::Map<const Eigen::VectorXd>(cfg.mesh.boundaries.data(),
                                                             static_cast<Eigen::Index>(
                                                                 cfg.mesh.boundaries.size())));
    if (std::abs(mesh.left() - problem.a) > 1e-12 || std::abs(mesh.right() - problem.b) > 1e-12) {
        throw std::invalid_argument("mesh does not span the domain of '" + problem.name + "'");
    }
    for (double bp : problem.breakpoints) {
        const bool aligned = (mesh.boundaries().array() - bp).abs().minCoeff() <= 1e-12;
        if (!aligned) {
            throw std::invalid_argument("mesh needs an element boundary at x=" + std::to_string(bp) +
                                        " for '" + problem.name + "'");
        }
    }
    return mesh;
}

Metrics compute_metrics(const Eigen::ArrayXd& u, const Eigen::ArrayXd& oracle)
{
    if (u.size() != oracle.size() || u.size() == 0) {
        throw std::invalid_argument("compute_metrics: sample arrays differ in length");
    }
    Metrics m;
    m.pointwise_error = (u - oracle).abs();
    m.avg_abs_error = m.pointwise_error.mean();
    m.max_abs_error = m.pointwise_error.maxCoeff();
    return m;
}

Eigen::VectorXd element_strong_residual(const Net& net, const ProblemSpec& problem,
                                        const Mesh& mesh, const QuadratureRule& rule)
{
    if (!problem.strong_residual) {
        return {};
    }
    const Eigen::VectorXd x = quadrature_positions(mesh, rule);
    const Jets jets = net.forward_jets(x, 2);
    const Eigen::ArrayXd r = problem.strong_residual(x.array(), jets).abs();
    const Eigen::Map<const Eigen::MatrixXd> per(r.data(), rule.order, mesh.elements());
    return per.colwise().mean().transpose();
}

Eigen::ArrayXd network_energy(const Net& net, const PendulumParams& params, const Eigen::ArrayXd& t)
{
    const Jets jets = net.forward_jets(t.matrix(), 1);
    return pendulum_energy(params, jets.d[0], jets.d[1]);
}

Eigen::VectorXd element_average_energy(const Net& net, const PendulumParams& params,
                                       const Mesh& mesh, const QuadratureRule& rule)
{
    const Eigen::VectorXd t = quadrature_positions(mesh, rule);
    const Eigen::ArrayXd e = network_energy(net, params, t.array());
    const Eigen::Map<const Eigen::MatrixXd> per(e.data(), rule.order, mesh.elements());
    return 0.5 * per.transpose() * rule.weights;
}

namespace {

RunReport train_and_report(const RunConfig& cfg, const ProblemSpec& problem, const Mesh& mesh,
                           Net net, std::uint64_t seed, LossState initial)
{
    const auto start = std::chrono::steady_clock::now();
    const TestFunctionSpace space = make_space(cfg.test_space.kind, cfg.test_space.degree);
    const QuadratureRule& rule = gauss_legendre(cfg.quadrature_points);
    const WeakForm form(mesh, build_filter_bank(space, rule), problem.weak_form,
                        problem.essentials);

    TrainResult trained = train(form, std::move(net), cfg.schedule, initial);

    RunReport report;
    report.problem = problem.name;
    report.seed = seed;
    report.mesh = mesh;
    report.history = std::move(trained.history);
    report.final_state = trained.final_state;
    report.diverged = trained.diverged;
    report.early_stopped = trained.early_stopped;
    report.net = std::move(trained.net);

    report.x = Eigen::ArrayXd::LinSpaced(cfg.eval_points, problem.a, problem.b);
    report.u_nn = report.net.forward_jets(report.x.matrix(), 0).d[0];
    report.oracle = problem.oracle_values(report.x);
    report.metrics = compute_metrics(report.u_nn, report.oracle);
    for (double xp : problem.probes) {
        const double u = report.net.forward_jets(Eigen::VectorXd::Constant(1, xp), 0).d[0][0];
        const double ref = problem.oracle_at(xp);
        report.metrics.probes.push_back({xp, std::abs(u - ref) / std::abs(ref)});
    }
    report.metrics.element_residual = element_strong_residual(report.net, problem, mesh, rule);
    if (problem.pendulum) {
        report.metrics.energy = network_energy(report.net, *problem.pendulum, report.x);
        report.metrics.element_energy =
            element_average_energy(report.net, *problem.pendulum, mesh, rule);
    }
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace

RunReport run_case(const RunConfig& config) { return run_case(config, config.seeds.front()); }

RunReport run_case(const RunConfig& config, std::uint64_t seed)
{
    const ProblemSpec problem = make_problem(config.problem);
    const Mesh mesh = build_mesh(config, problem);
    NetConfig net_cfg = config.net;
    net_cfg.seed = seed;
    RunReport report = train_and_report(config, problem, mesh, init_network(net_cfg), seed, {});
    if (!config.output_dir.empty()) {
        write_report(report, config.output_dir);
    }
    return report;
}

void write_solution_csv(std::ostream& out, const Eigen::ArrayXd& x, const Eigen::ArrayXd& u,
                        const Eigen::ArrayXd& oracle)
{
    out << "x,u_nn,oracle,pwe\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out << x[i] << ',' << u[i] << ',' << oracle[i] << ',' << std::abs(u[i] - oracle[i]) << '\n';
    }
}

std::string metrics_json(const RunReport& r)
{
    json doc;
    doc["problem"] = r.problem;
    doc["seed"] = r.seed;
    doc["diverged"] = r.diverged;
    doc["early_stopped"] = r.early_stopped;
    doc["elements"] = r.mesh.elements();
    doc["dof"] = r.net.dof();
    doc["seconds"] = r.seconds;
    doc["avg_abs_error"] = number_json(r.metrics.avg_abs_error);
    doc["max_abs_error"] = number_json(r.metrics.max_abs_error);
    doc["probes"] = json::array();
    for (const auto& p : r.metrics.probes) {
        doc["probes"].push_back({{"x", p.x}, {"relative_error", number_json(p.relative_error)}});
    }
    doc["element_residual"] = array_json(r.metrics.element_residual);
    if (r.metrics.element_energy.size() > 0) {
        doc["element_energy"] = array_json(r.metrics.element_energy);
    }
    doc["final_loss_r"] = number_json(r.final_state.loss_r);
    doc["final_loss_b"] = number_json(r.final_state.loss_b);
    doc["tau_r"] = r.final_state.tau_r;
    doc["tau_b"] = r.final_state.tau_b;
    if (!r.stop_reason.empty()) {
        doc["stop_reason"] = r.stop_reason;
    }
    if (!r.cycles.empty()) {
        doc["cycles"] = json::array();
        for (const auto& c : r.cycles) {
            doc["cycles"].push_back({{"elements", c.mesh.elements()},
                                     {"peak_residual", number_json(c.peak_residual)},
                                     {"mean_residual", number_json(c.mean_residual)},
                                     {"avg_abs_error", number_json(c.avg_abs_error)}});
        }
    }
    return doc.dump(2);
}

void write_report(const RunReport& report, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    {
        std::ofstream out(base / "solution.csv");
        write_solution_csv(out, report.x, report.u_nn, report.oracle);
    }
    {
        std::ofstream out(base / "history.csv");
        write_history_csv(out, report.history);
    }
    {
        std::ofstream out(base / "metrics.json");
        out << metrics_json(report) << '\n';
    }
    save_mesh((base / "mesh.txt").string(), report.mesh);
}

const QuadratureCell& QuadratureTable::at(int degree, int points) const
{
    for (const auto& c : cells) {
        if (c.degree == degree && c.points == points) {
            return c;
        }
    }
    throw std::out_of_range("QuadratureTable: no cell for this degree and Q");
}

int saturation_point(const std::vector<int>& points, const std::vector<double>& errors)
{
    if (points.empty() || points.size() != errors.size()) {
        throw std::invalid_argument("saturation_point: mismatched inputs");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best_after = std::numeric_limits<double>::infinity();
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            best_after = std::min(best_after, errors[j]);
        }
        if (!(best_after < 0.9 * errors[i])) {
            return points[i];
        }
    }
    return points.back();
}

namespace {

double median_of(std::vector<double> v)
{
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

QuadratureTable quadrature_sweep(const RunConfig& base, const std::vector<int>& degrees,
                                 const std::vector<int>& points)
{
    const int elements =
        base.mesh.boundaries.empty() ? base.mesh.elements : static_cast<int>(base.mesh.boundaries.size()) - 1;
    if (elements != 1) {
        throw std::invalid_argument("quadrature_sweep: expects a single-element mesh");
    }
    QuadratureTable table;
    for (int p : degrees) {
        std::vector<double> medians;
        for (int q : points) {
            RunConfig cfg = base;
            cfg.output_dir.clear();
            cfg.test_space = {"lagrange", p};
            cfg.quadrature_points = q;
            QuadratureCell cell;
            cell.degree = p;
            cell.points = q;
            cell.below_minimum = q < min_points_for_degree(p);
            for (std::uint64_t seed : base.seeds) {
                cell.errors.push_back(run_case(cfg, seed).metrics.avg_abs_error);
            }
            cell.median_error = median_of(cell.errors);
            medians.push_back(cell.median_error);
            table.cells.push_back(std::move(cell));
        }
        table.saturation[p] = saturation_point(points, medians);
    }
    return table;
}

const ConvergenceCell& ConvergenceTable::at(int degree, int elements) const
{
    for (const auto& c : cells) {
        if (c.degree == degree && c.elements == elements) {
            return c;
        }
    }
    throw std::out_of_range("ConvergenceTable: no cell for this degree and mesh size");
}

MedianInterval median_interval(const std::vector<double>& values, int resamples)
{
    if (values.empty()) {
        throw std::invalid_argument("median_interval: no values");
    }
    MedianInterval out;
    out.median = median_of(values);
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> medians(static_cast<std::size_t>(resamples));
    std::vector<double> sample(values.size());
    for (auto& m : medians) {
        for (auto& s : sample) {
            s = values[pick(rng)];
        }
        m = median_of(sample);
    }
    std::sort(medians.begin(), medians.end());
    const auto at = [&](double q) {
        const auto i = static_cast<std::size_t>(std::floor(q * (resamples - 1)));
        return medians[i];
    };
    out.low = at(0.025);
    out.high = at(0.975);
    return out;
}

double pre_plateau_slope(const std::vector<int>& elements, const std::vector<double>& errors,
                         double min_ratio)
{
    if (elements.size() < 2 || elements.size() != errors.size()) {
        throw std::invalid_argument("pre_plateau_slope: need at least two mesh sizes");
    }
    std::size_t end = 1;
    while (end < errors.size() && errors[end] * min_ratio <= errors[end - 1]) {
        ++end;
    }
    const std::size_t count = std::max<std::size_t>(end, 2);
    Eigen::ArrayXd lx(static_cast<Eigen::Index>(count));
    Eigen::ArrayXd ly(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        lx[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(elements[i]));
        ly[static_cast<Eigen::Index>(i)] = std::log(errors[i]);
    }
    const Eigen::ArrayXd dx = lx - lx.mean();
    return -(dx * (ly - ly.mean())).sum() / dx.square().sum();
}

ConvergenceTable convergence_sweep(const RunConfig& base, const std::vector<int>& degrees,
                                   const std::vector<int>& mesh_sizes,
                                   const std::vector<std::uint64_t>& seeds)
{
    if (mesh_sizes.size() < 2) {
        throw std::invalid_argument("convergence_sweep: need at least two mesh sizes");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("convergence_sweep: need at least one seed");
    }
    const ProblemSpec problem = make_problem(base.problem);
    if (problem.probes.empty()) {
        throw std::invalid_argument("convergence_sweep: problem has no probe point");
    }
    ConvergenceTable table;
    table.probe = problem.probes.front();
    const double exact = problem.oracle_at(table.probe);

    for (int p : degrees) {
        std::vector<double> medians;
        std::vector<double> fem_errors;
        for (int n : mesh_sizes) {
            RunConfig cfg = base;
            cfg.output_dir.clear();
            cfg.mesh = {n, {}};
            cfg.test_space = {"lagrange", p};
            cfg.quadrature_points = p + 2;
            ConvergenceCell cell;
            cell.degree = p;
            cell.elements = n;
            for (std::uint64_t seed : seeds) {
                cell.errors.push_back(run_case(cfg, seed).metrics.probes.front().relative_error);
            }
            const MedianInterval mi = median_interval(cell.errors);
            cell.median = mi.median;
            cell.ci_low = mi.low;
            cell.ci_high = mi.high;
            cell.fennm_dof = expected_dof(cfg.net.layers, cfg.net.width);
            cell.fem_dof = static_cast<long>(p) * n + 1;
            cell.fem_error = std::numeric_limits<double>::quiet_NaN();
            if (problem.bvp && p <= 2) {
                const FemSolution fem = fem_solve(problem, uniform_mesh(problem.a, problem.b, n), p);
                cell.fem_error = std::abs(fem(table.probe) - exact) / std::abs(exact);
                fem_errors.push_back(cell.fem_error);
            }
            medians.push_back(cell.median);
            table.cells.push_back(std::move(cell));
        }
        table.slope[p] = pre_plateau_slope(mesh_sizes, medians);
        if (fem_errors.size() == mesh_sizes.size()) {
            table.fem_slope[p] = pre_plateau_slope(mesh_sizes, fem_errors);
        }
    }
    return table;
}

Mesh adapt_mesh(const Mesh& mesh, const Eigen::VectorXd& indicator, double refine_factor,
                double coarsen_factor, const std::vector<double>& keep)
{
    const int N = mesh.elements();
    if (indicator.size() != N) {
        throw std::invalid_argument("adapt_mesh: one indicator value per element expected");
    }
    const double mean = indicator.mean();
    std::set<int> refine_marks;
    for (int n = 0; n < N; ++n) {
        if (indicator[n] > refine_factor * mean) {
            refine_marks.insert(n);
        }
    }
    std::set<int> pairs;
    for (int n = 0; n + 1 < N; n += 2) {
        const double shared = mesh.boundaries()[n + 1];
        const bool pinned = std::any_of(keep.begin(), keep.end(), [&](double k) {
            return std::abs(k - shared) <= 1e-12 * std::max(1.0, std::abs(k));
        });
        if (!pinned && indicator[n] < coarsen_factor * mean && indicator[n + 1] < coarsen_factor * mean) {
            pairs.insert(n);
        }
    }
    if (refine_marks.empty() && pairs.empty()) {
        return mesh;
    }
    const Mesh merged = pairs.empty() ? mesh : coarsen(mesh, pairs);
    std::set<int> shifted;
    for (int n : refine_marks) {
        const auto before = static_cast<int>(std::distance(pairs.begin(), pairs.lower_bound(n)));
        shifted.insert(n - before);
    }
    return shifted.empty() ? merged : refine(merged, shifted);
}

RunReport refine_loop(const RunConfig& config, const RefineOptions& options)
{
    const ProblemSpec problem = make_problem(config.problem);
    if (!problem.strong_residual) {
        throw std::invalid_argument("refine_loop: '" + problem.name +
                                    "' has no strong-form residual evaluator");
    }
    Mesh mesh = build_mesh(config, problem);
    NetConfig net_cfg = config.net;
    net_cfg.seed = config.seeds.front();
    Net net = init_network(net_cfg);
    LossState state;
    std::vector<CycleSummary> cycles;
    std::vector<HistoryRow> history;
    double seconds = 0.0;

    for (int cycle = 0;; ++cycle) {
        RunReport report = train_and_report(config, problem, mesh, net, net_cfg.seed, state);
        const Eigen::VectorXd& r = report.metrics.element_residual;
        cycles.push_back({mesh, r.maxCoeff(), r.mean(), report.metrics.avg_abs_error});
        const long offset = history.empty() ? 0 : history.back().iteration + 1;
        for (auto row : report.history) {
            row.iteration += offset;
            history.push_back(row);
        }
        seconds += report.seconds;
        net = report.net;
        state = report.final_state;

        const bool hot = (r.array() > options.refine_factor * r.mean()).any();
        Mesh next = mesh;
        if (report.diverged) {
            report.stop_reason = "diverged";
        } else if (cycle >= options.max_cycles) {
            report.stop_reason = "max_cycles";
        } else if (!hot) {
            report.stop_reason = "no_marked_elements";
        } else {
            next = adapt_mesh(mesh, r, options.refine_factor, options.coarsen_factor,
                              problem.breakpoints);
            const double smallest =
                (next.boundaries().tail(next.elements()) - next.boundaries().head(next.elements()))
                    .minCoeff();
            if (smallest < options.min_element) {
                report.stop_reason = "element below " + std::to_string(options.min_element);
                next = mesh;
            } else if (next == mesh) {
                report.stop_reason = "mesh_unchanged";
            }
        }
        if (next == mesh) {
            report.cycles = std::move(cycles);
            report.history = std::move(history);
            report.seconds = seconds;
            if (!config.output_dir.empty()) {
                write_report(report, config.output_dir);
            }
            return report;
        }
        mesh = std::move(next);
        state.phase = Phase::Adam;
    }
}

} // namespace fennm
