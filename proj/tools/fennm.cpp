#include "fennm/baselines.hpp"
#include "fennm/harness.hpp"
#include "fennm/problems.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using namespace fennm;

std::ofstream open_out(const std::string& dir, const std::string& name)
{
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) {
        throw std::runtime_error("cannot write " + dir + "/" + name);
    }
    return out;
}

void print_summary(const RunReport& r)
{
    std::cout << r.problem << " seed " << r.seed << ": avg_abs_error " << r.metrics.avg_abs_error
              << ", max_abs_error " << r.metrics.max_abs_error << ", L_R "
              << r.final_state.loss_r << ", L_B " << r.final_state.loss_b << ", "
              << r.history.size() << " history rows, " << r.seconds << " s"
              << (r.diverged ? " [diverged]" : "") << '\n';
}

int run_command(const std::string& path)
{
    RunConfig cfg = load_config(path);
    const std::string root = cfg.output_dir;
    for (std::uint64_t seed : cfg.seeds) {
        RunConfig one = cfg;
        if (!root.empty() && cfg.seeds.size() > 1) {
            one.output_dir = (std::filesystem::path(root) / ("seed_" + std::to_string(seed))).string();
        }
        const RunReport r = run_case(one, seed);
        print_summary(r);
        if (r.diverged) {
            return 2;
        }
    }
    return 0;
}

int quadrature_command(const std::string& path, const std::vector<int>& degrees,
                       const std::vector<int>& points)
{
    const RunConfig cfg = load_config(path);
    const QuadratureTable t = quadrature_sweep(cfg, degrees, points);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.output_dir.empty()) {
        file = open_out(cfg.output_dir, "quadrature_sweep.csv");
        out = &file;
    }
    *out << "degree,q,median_avg_abs_error,below_minimum,saturation_q\n" << std::setprecision(10);
    for (const auto& c : t.cells) {
        *out << c.degree << ',' << c.points << ',' << c.median_error << ','
             << (c.below_minimum ? 1 : 0) << ',' << t.saturation.at(c.degree) << '\n';
    }
    return 0;
}

int convergence_command(const std::string& path, const std::vector<int>& degrees,
                        const std::vector<int>& elements)
{
    const RunConfig cfg = load_config(path);
    const ConvergenceTable t = convergence_sweep(cfg, degrees, elements, cfg.seeds);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.output_dir.empty()) {
        file = open_out(cfg.output_dir, "convergence_sweep.csv");
        out = &file;
    }
    *out << "degree,elements,median_rel_error,ci_low,ci_high,fennm_dof,fem_dof,fem_rel_error\n"
         << std::setprecision(10);
    for (const auto& c : t.cells) {
        *out << c.degree << ',' << c.elements << ',' << c.median << ',' << c.ci_low << ','
             << c.ci_high << ',' << c.fennm_dof << ',' << c.fem_dof << ',' << c.fem_error << '\n';
    }
    for (const auto& [p, s] : t.slope) {
        std::cerr << "degree " << p << ": FENNM slope " << s;
        if (t.fem_slope.count(p)) {
            std::cerr << ", FEM slope " << t.fem_slope.at(p);
        }
        std::cerr << '\n';
    }
    return 0;
}

int refine_command(const std::string& path, const RefineOptions& opts)
{
    const RunConfig cfg = load_config(path);
    const RunReport r = refine_loop(cfg, opts);
    for (std::size_t i = 0; i < r.cycles.size(); ++i) {
        const auto& c = r.cycles[i];
        std::cout << "cycle " << i << ": " << c.mesh.elements() << " elements, peak residual "
                  << c.peak_residual << ", avg_abs_error " << c.avg_abs_error << '\n';
    }
    std::cout << "stopped: " << r.stop_reason << '\n';
    return 0;
}

int fem_command(const std::string& problem_name, int elements, int degree, int samples,
                const std::string& dir)
{
    const ProblemSpec problem = make_problem(problem_name);
    const FemSolution sol = fem_solve(problem, uniform_mesh(problem.a, problem.b, elements), degree);
    const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(samples, problem.a, problem.b);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!dir.empty()) {
        file = open_out(dir, "solution.csv");
        out = &file;
    }
    write_solution_csv(*out, x, sol.evaluate(x), problem.oracle_values(x));
    return 0;
}

int rk45_command(const std::string& problem_name, double rtol, double atol, int samples,
                 const std::string& dir)
{
    const ProblemSpec problem = make_problem(problem_name);
    if (!problem.pendulum) {
        throw std::invalid_argument("rk45 baseline needs a pendulum problem");
    }
    const Trajectory traj = solve_pendulum(*problem.pendulum, {rtol, atol, 0.0, 1000000});
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!dir.empty()) {
        file = open_out(dir, "trajectory.csv");
        out = &file;
    }
    *out << "t,theta,omega,energy\n" << std::setprecision(17);
    const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(samples, problem.a, problem.b);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const Eigen::VectorXd y = traj(t[i]);
        const double e = pendulum_energy(*problem.pendulum, Eigen::ArrayXd::Constant(1, y[0]),
                                         Eigen::ArrayXd::Constant(1, y[1]))[0];
        *out << t[i] << ',' << y[0] << ',' << y[1] << ',' << e << '\n';
    }
    return 0;
}

int fdm_command(const std::string& problem_name, int points, const std::string& dir)
{
    const ProblemSpec problem = make_problem(problem_name);
    const GridSolution sol = fdm_solve(problem, points);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!dir.empty()) {
        file = open_out(dir, "solution.csv");
        out = &file;
    }
    write_solution_csv(*out, sol.x.array(), sol.u.array(), problem.oracle_values(sol.x.array()));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finite element neural network method for 1D differential equations"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "Train and evaluate the configured case");
    run->add_option("config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);

    std::vector<int> degrees{1, 2, 3, 4};
    std::vector<int> points{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    auto* sweep_q = app.add_subcommand("sweep-quadrature", "Error against quadrature points");
    sweep_q->add_option("config", config)->required()->check(CLI::ExistingFile);
    sweep_q->add_option("--degrees", degrees)->delimiter(',');
    sweep_q->add_option("--points", points)->delimiter(',');

    std::vector<int> cr_degrees{1, 2, 3};
    std::vector<int> elements{1, 2, 4, 8, 16, 32};
    auto* sweep_c = app.add_subcommand("sweep-convergence", "Error against mesh size");
    sweep_c->add_option("config", config)->required()->check(CLI::ExistingFile);
    sweep_c->add_option("--degrees", cr_degrees)->delimiter(',');
    sweep_c->add_option("--elements", elements)->delimiter(',');

    RefineOptions refine_opts;
    auto* refine = app.add_subcommand("refine", "Residual-driven mesh adaptation");
    refine->add_option("config", config)->required()->check(CLI::ExistingFile);
    refine->add_option("--cycles", refine_opts.max_cycles);
    refine->add_option("--beta", refine_opts.refine_factor);
    refine->add_option("--gamma", refine_opts.coarsen_factor);

    auto* baseline = app.add_subcommand("baseline", "Classical reference solvers");
    baseline->require_subcommand(1);
    std::string problem;
    std::string out_dir;
    int samples = 1001;
    int fem_elements = 22;
    int fem_degree = 1;
    auto* fem = baseline->add_subcommand("fem", "Galerkin FEM (equilibrium, transport)");
    fem->add_option("--problem", problem)->required();
    fem->add_option("--elements", fem_elements);
    fem->add_option("--degree", fem_degree);
    fem->add_option("--samples", samples);
    fem->add_option("--out", out_dir);
    double rtol = 1e-10;
    double atol = 1e-12;
    auto* rk45 = baseline->add_subcommand("rk45", "Dormand-Prince pendulum trajectory");
    rk45->add_option("--problem", problem)->required();
    rk45->add_option("--rtol", rtol);
    rk45->add_option("--atol", atol);
    rk45->add_option("--samples", samples);
    rk45->add_option("--out", out_dir);
    int fdm_points = 2001;
    auto* fdm = baseline->add_subcommand("fdm", "Three-point finite differences (Poisson)");
    fdm->add_option("--problem", problem)->required();
    fdm->add_option("--points", fdm_points);
    fdm->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return run_command(config);
        }
        if (*sweep_q) {
            return quadrature_command(config, degrees, points);
        }
        if (*sweep_c) {
            return convergence_command(config, cr_degrees, elements);
        }
        if (*refine) {
            return refine_command(config, refine_opts);
        }
        if (*fem) {
            return fem_command(problem, fem_elements, fem_degree, samples, out_dir);
        }
        if (*rk45) {
            return rk45_command(problem, rtol, atol, samples, out_dir);
        }
        if (*fdm) {
            return fdm_command(problem, fdm_points, out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "fennm: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
