#pragma once

#include "fennm/diffnet.hpp"
#include "fennm/mesh.hpp"
#include "fennm/optim.hpp"
#include "fennm/problems.hpp"
#include "fennm/weakform.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fennm {

struct MeshSpec {
    int elements = 1;
    std::vector<double> boundaries; // overrides `elements` when non-empty
};

struct SpaceSpec {
    std::string kind = "lagrange";
    int degree = 4;
};

struct RunConfig {
    std::string problem;
    MeshSpec mesh;
    SpaceSpec test_space;
    int quadrature_points = 8;
    NetConfig net;
    Schedule schedule;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir; // empty: nothing is written
    int eval_points = 1001;
};

/// The problem's recommended settings as a run configuration.
RunConfig recommended_config(const std::string& problem);

/// Parses a JSON document with lower_snake_case keys mirroring RunConfig.
/// Keys left out take the problem's recommended values. Throws
/// std::invalid_argument on unknown problems, empty seed lists and malformed
/// fields.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

Mesh build_mesh(const RunConfig& config, const ProblemSpec& problem);

struct ProbeError {
    double x = 0.0;
    double relative_error = 0.0;
};

struct Metrics {
    double avg_abs_error = 0.0;
    double max_abs_error = 0.0;
    Eigen::ArrayXd pointwise_error;
    std::vector<ProbeError> probes;
    /// Mean |strong-form residual| over each element's quadrature points.
    Eigen::VectorXd element_residual;
    /// Pendulum only: energy per unit mass on the evaluation grid and its
    /// quadrature average over each element.
    Eigen::ArrayXd energy;
    Eigen::VectorXd element_energy;
};

/// Error metrics of samples u against oracle values on the same grid.
Metrics compute_metrics(const Eigen::ArrayXd& u, const Eigen::ArrayXd& oracle);

/// Per-element mean |strong residual| at the rule's points, or an empty
/// vector when the problem has no strong-form evaluator.
Eigen::VectorXd element_strong_residual(const Net& net, const ProblemSpec& problem,
                                        const Mesh& mesh, const QuadratureRule& rule);

/// Energy per unit mass of a network trajectory.
Eigen::ArrayXd network_energy(const Net& net, const PendulumParams& params,
                              const Eigen::ArrayXd& t);

/// Quadrature average of the energy over each element.
Eigen::VectorXd element_average_energy(const Net& net, const PendulumParams& params,
                                       const Mesh& mesh, const QuadratureRule& rule);

struct CycleSummary {
    Mesh mesh;
    double peak_residual = 0.0;
    double mean_residual = 0.0;
    double avg_abs_error = 0.0;
};

struct RunReport {
    std::string problem;
    std::uint64_t seed = 0;
    Eigen::ArrayXd x;
    Eigen::ArrayXd u_nn;
    Eigen::ArrayXd oracle;
    std::vector<HistoryRow> history;
    Metrics metrics;
    Mesh mesh;
    std::vector<CycleSummary> cycles; // refinement history, empty for plain runs
    Net net;
    LossState final_state;
    bool diverged = false;
    bool early_stopped = false;
    double seconds = 0.0;
    std::string stop_reason; // refinement loops only
};

/// Trains one network for the config's first seed (or `seed`) and evaluates it.
RunReport run_case(const RunConfig& config);
RunReport run_case(const RunConfig& config, std::uint64_t seed);

/// solution.csv, history.csv, metrics.json and mesh.txt under `dir`.
void write_report(const RunReport& report, const std::string& dir);
void write_solution_csv(std::ostream& out, const Eigen::ArrayXd& x, const Eigen::ArrayXd& u,
                        const Eigen::ArrayXd& oracle);
std::string metrics_json(const RunReport& report);

struct QuadratureCell {
    int degree = 1;
    int points = 1;
    double median_error = 0.0;
    std::vector<double> errors; // one per seed
    bool below_minimum = false;
};

struct QuadratureTable {
    std::vector<QuadratureCell> cells;
    std::map<int, int> saturation; // degree -> saturating Q

    const QuadratureCell& at(int degree, int points) const;
};

/// First Q after which no later Q improves the error by 10% or more.
int saturation_point(const std::vector<int>& points, const std::vector<double>& errors);

/// avg_abs_error over (degree, Q) on a single element, median over seeds.
QuadratureTable quadrature_sweep(const RunConfig& base, const std::vector<int>& degrees,
                                 const std::vector<int>& points);

struct ConvergenceCell {
    int degree = 1;
    int elements = 1;
    std::vector<double> errors; // |relative error| at the probe, one per seed
    double median = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long fennm_dof = 0;
    long fem_dof = 0;
    double fem_error = 0.0; // NaN when no FEM of this degree exists
};

struct ConvergenceTable {
    double probe = 1.5;
    std::vector<ConvergenceCell> cells;
    std::map<int, double> slope;     // FENNM, per test-function degree
    std::map<int, double> fem_slope; // FEM, per element degree

    const ConvergenceCell& at(int degree, int elements) const;
};

/// Median and 95% bootstrap interval of the median (fixed resampling seed).
struct MedianInterval {
    double median = 0.0;
    double low = 0.0;
    double high = 0.0;
};
MedianInterval median_interval(const std::vector<double>& values, int resamples = 2000);

/// Least-squares rate -d log(e) / d log(N) over the prefix of the sequence
/// that keeps improving by at least `min_ratio` per step.
double pre_plateau_slope(const std::vector<int>& elements, const std::vector<double>& errors,
                         double min_ratio = 1.5);

/// Relative error at the problem's first probe for each (degree, N_el, seed),
/// with Q = degree + 2, alongside FEM of the same degree when available.
ConvergenceTable convergence_sweep(const RunConfig& base, const std::vector<int>& degrees,
                                   const std::vector<int>& mesh_sizes,
                                   const std::vector<std::uint64_t>& seeds);

struct RefineOptions {
    int max_cycles = 3;
    double refine_factor = 2.0;  // beta
    double coarsen_factor = 0.2; // gamma
    double min_element = 1e-6;
};

/// Residual-driven h-adaptivity: train, mark elements above beta times the
/// mean strong residual for bisection and sibling pairs (2i, 2i+1) below
/// gamma times the mean for merging, retrain warm-started. Cycle 0 is the
/// run on the configured mesh.
RunReport refine_loop(const RunConfig& config, const RefineOptions& options);

/// The mesh after one marking pass, or the input mesh when nothing is marked.
/// Boundaries listed in `keep` are never merged away.
Mesh adapt_mesh(const Mesh& mesh, const Eigen::VectorXd& indicator, double refine_factor,
                double coarsen_factor, const std::vector<double>& keep = {});

} // namespace fennm
