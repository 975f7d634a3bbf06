#include "fennm/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

using namespace fennm;

namespace {

RunConfig quick(const std::string& problem, long adam, long lbfgs)
{
    RunConfig c = recommended_config(problem);
    c.schedule.adam_epochs = adam;
    c.schedule.lbfgs_epochs = lbfgs;
    c.eval_points = 101;
    return c;
}

} // namespace

TEST(Config, RecommendedDefaults)
{
    const RunConfig c = parse_config(R"({"problem": "beam"})");
    EXPECT_EQ(c.mesh.elements, 4);
    EXPECT_EQ(c.test_space.kind, "hermite");
    EXPECT_EQ(c.quadrature_points, 5);
    EXPECT_EQ(c.net.layers, 3);
    EXPECT_EQ(c.schedule.adam_epochs, 5000);
    EXPECT_EQ(c.schedule.lbfgs_epochs, 10000);
    EXPECT_EQ(c.schedule.penalty_rule, PenaltyRule::Ascent);
}

TEST(Config, Overrides)
{
    const RunConfig c = parse_config(R"({
        "problem": "equilibrium",
        "mesh": {"boundaries": [1, 1.25, 2]},
        "test_space": {"kind": "lagrange", "degree": 2},
        "quadrature_points": 4,
        "net": {"layers": 3, "width": 7, "activation": "sin"},
        "schedule": {"adam_epochs": 10, "lbfgs_epochs": 20, "alpha": 0.01, "eta_tau": 0.5,
                     "epsilon": null, "penalty_rule": "adam"},
        "seeds": [3, 4],
        "output_dir": "out",
        "eval_points": 11
    })");
    EXPECT_EQ(c.mesh.boundaries.size(), 3u);
    EXPECT_EQ(c.test_space.degree, 2);
    EXPECT_EQ(c.net.activation, Activation::Sin);
    EXPECT_EQ(c.schedule.alpha, 0.01);
    EXPECT_EQ(c.schedule.penalty_rate(), 0.5);
    EXPECT_TRUE(std::isinf(c.schedule.epsilon));
    EXPECT_EQ(c.schedule.penalty_rule, PenaltyRule::Adam);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(build_mesh(c, make_problem("equilibrium")).elements(), 2);

    const RunConfig back = parse_config(config_to_json(c));
    EXPECT_EQ(back.mesh.boundaries, c.mesh.boundaries);
    EXPECT_EQ(back.net.width, 7);
    EXPECT_TRUE(std::isinf(back.schedule.epsilon));
    EXPECT_EQ(back.schedule.penalty_rule, PenaltyRule::Adam);
    EXPECT_EQ(back.output_dir, "out");
}

TEST(Config, Errors)
{
    EXPECT_THROW(parse_config(R"({"problem": "nope"})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"mesh": {"elements": 3}})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"problem": "beam", "seeds": []})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"problem": "beam", "net": {"width": "wide"}})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"problem": "beam", "schedule": {"penalty_rule": "sgd"}})"),
                 std::invalid_argument);
    EXPECT_THROW(parse_config("{"), std::invalid_argument);
    EXPECT_THROW(load_config("/nonexistent/config.json"), std::runtime_error);
}

TEST(Config, MeshMustRespectBreakpoints)
{
    RunConfig c = recommended_config("poisson-discontinuous");
    c.mesh.elements = 5;
    EXPECT_THROW(build_mesh(c, make_problem(c.problem)), std::invalid_argument);
    c.mesh.elements = 4;
    EXPECT_EQ(build_mesh(c, make_problem(c.problem)).elements(), 4);
    c.mesh.boundaries = {0.0, 1.0};
    EXPECT_THROW(build_mesh(c, make_problem(c.problem)), std::invalid_argument);
}

TEST(Metrics, IdentityAndOffset)
{
    const Eigen::ArrayXd o = Eigen::ArrayXd::LinSpaced(11, -1, 1).sin();
    const Metrics same = compute_metrics(o, o);
    EXPECT_EQ(same.avg_abs_error, 0.0);
    EXPECT_EQ(same.max_abs_error, 0.0);
    const Metrics off = compute_metrics(o + 0.25, o);
    EXPECT_NEAR(off.avg_abs_error, 0.25, 1e-15);
    EXPECT_NEAR(off.max_abs_error, 0.25, 1e-15);
    EXPECT_THROW(compute_metrics(o, o.head(3)), std::invalid_argument);
}

TEST(Statistics, SaturationPoint)
{
    EXPECT_EQ(saturation_point({1, 2, 3, 4}, {1.0, 0.1, 0.095, 0.094}), 2);
    EXPECT_EQ(saturation_point({1, 2, 3}, {1.0, 0.5, 0.25}), 3);
    EXPECT_EQ(saturation_point({5}, {1.0}), 5);
    EXPECT_THROW(saturation_point({1, 2}, {1.0}), std::invalid_argument);
}

TEST(Statistics, MedianInterval)
{
    const MedianInterval m = median_interval({5.0, 1.0, 3.0, 2.0, 4.0});
    EXPECT_EQ(m.median, 3.0);
    EXPECT_LE(m.low, m.median);
    EXPECT_GE(m.high, m.median);
    EXPECT_GE(m.low, 1.0);
    EXPECT_LE(m.high, 5.0);
    const MedianInterval again = median_interval({5.0, 1.0, 3.0, 2.0, 4.0});
    EXPECT_EQ(again.low, m.low);
    EXPECT_EQ(median_interval({2.0, 4.0}).median, 3.0);
    EXPECT_THROW(median_interval({}), std::invalid_argument);
}

TEST(Statistics, PrePlateauSlope)
{
    const std::vector<int> n{1, 2, 4, 8, 16, 32};
    std::vector<double> e;
    for (int k : n) {
        e.push_back(std::max(std::pow(k, -2.0), 0.05));
    }
    // 1, 1/4, 1/16, then the floor stops the prefix
    EXPECT_NEAR(pre_plateau_slope(n, e), 2.0, 1e-12);
    EXPECT_NEAR(pre_plateau_slope({1, 2, 4}, {1.0, 0.125, 0.015625}), 3.0, 1e-12);
    EXPECT_THROW(pre_plateau_slope({1}, {1.0}), std::invalid_argument);
}

TEST(Refinement, AdaptMesh)
{
    const Mesh m = uniform_mesh(0, 1, 4);
    Eigen::VectorXd r(4);
    r << 0.01, 0.01, 1.0, 10.0;
    // mean 2.755: element 3 refined, pair (0, 1) merged
    const Mesh a = adapt_mesh(m, r, 2.0, 0.2);
    ASSERT_EQ(a.elements(), 4);
    EXPECT_NEAR(a.boundaries()[1], 0.5, 1e-15);
    EXPECT_NEAR(a.boundaries()[3], 0.875, 1e-15);
    EXPECT_EQ(adapt_mesh(m, r, 2.0, 0.2, {0.25}).elements(), 5);
    EXPECT_EQ(adapt_mesh(m, Eigen::VectorXd::Ones(4), 2.0, 0.2), m);
    EXPECT_THROW(adapt_mesh(m, Eigen::VectorXd::Ones(3), 2.0, 0.2), std::invalid_argument);
}

TEST(RunCase, UntrainedNetwork)
{
    const RunReport r = run_case(quick("equilibrium", 0, 0));
    ASSERT_EQ(r.history.size(), 1u);
    EXPECT_GT(r.metrics.avg_abs_error, 0.1);
    EXPECT_EQ(r.x.size(), 101);
    EXPECT_EQ(r.metrics.element_residual.size(), 1);
    EXPECT_FALSE(r.diverged);
}

TEST(RunCase, ShortTrainingImproves)
{
    const RunReport r0 = run_case(quick("equilibrium", 0, 0));
    const RunReport r = run_case(quick("equilibrium", 300, 300));
    EXPECT_LT(r.metrics.avg_abs_error, 0.1 * r0.metrics.avg_abs_error);
    EXPECT_EQ(r.metrics.probes.size(), 1u);
    EXPECT_NEAR(r.metrics.probes[0].x, 1.5, 1e-15);
}

TEST(RunCase, PendulumEnergyDiagnostics)
{
    RunConfig c = quick("pendulum-undamped", 0, 0);
    c.mesh.elements = 5;
    const RunReport r = run_case(c);
    EXPECT_EQ(r.metrics.energy.size(), 101);
    EXPECT_EQ(r.metrics.element_energy.size(), 5);
}

TEST(RunCase, WritesReportFiles)
{
    const auto dir = std::filesystem::temp_directory_path() / "fennm_report_test";
    std::filesystem::remove_all(dir);
    RunConfig c = quick("equilibrium", 5, 5);
    c.output_dir = dir.string();
    run_case(c);
    for (const char* f : {"solution.csv", "history.csv", "metrics.json", "mesh.txt"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::ifstream sol(dir / "solution.csv");
    std::string header;
    std::getline(sol, header);
    EXPECT_EQ(header, "x,u_nn,oracle,pwe");
    std::ifstream hist(dir / "history.csv");
    EXPECT_EQ(read_history_csv(hist).size(), 11u);
    EXPECT_EQ(load_mesh((dir / "mesh.txt").string()), uniform_mesh(1, 2, 1));
    std::filesystem::remove_all(dir);
}

TEST(Refinement, ZeroCyclesMatchesRunCase)
{
    RunConfig c = quick("poisson-steep", 20, 10);
    c.mesh.elements = 6;
    RefineOptions o;
    o.max_cycles = 0;
    const RunReport a = refine_loop(c, o);
    const RunReport b = run_case(c);
    EXPECT_EQ(a.stop_reason, "max_cycles");
    ASSERT_EQ(a.cycles.size(), 1u);
    EXPECT_EQ(a.net.parameters(), b.net.parameters());
    EXPECT_EQ(a.metrics.avg_abs_error, b.metrics.avg_abs_error);
}

TEST(Refinement, HistoryIsContinuous)
{
    RunConfig c = quick("poisson-steep", 20, 10);
    c.mesh.elements = 6;
    RefineOptions o;
    o.max_cycles = 2;
    const RunReport r = refine_loop(c, o);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        EXPECT_EQ(r.history[i].iteration, r.history[i - 1].iteration + 1);
        EXPECT_GE(r.history[i].tau_r, r.history[i - 1].tau_r);
    }
    EXPECT_GE(r.cycles.size(), 1u);
}

TEST(Sweeps, QuadratureSweepShape)
{
    RunConfig c = quick("equilibrium", 30, 10);
    c.seeds = {0, 1};
    const QuadratureTable t = quadrature_sweep(c, {1, 3}, {1, 2, 4});
    EXPECT_EQ(t.cells.size(), 6u);
    EXPECT_TRUE(t.at(3, 1).below_minimum);
    EXPECT_FALSE(t.at(1, 1).below_minimum);
    EXPECT_EQ(t.at(1, 4).errors.size(), 2u);
    EXPECT_EQ(t.saturation.size(), 2u);
    EXPECT_THROW(t.at(2, 1), std::out_of_range);
}

TEST(Sweeps, ConvergenceSweepShape)
{
    const RunConfig c = quick("equilibrium", 30, 10);
    const ConvergenceTable t = convergence_sweep(c, {1, 3}, {1, 2, 4}, {0, 1});
    EXPECT_EQ(t.cells.size(), 6u);
    EXPECT_EQ(t.at(1, 4).fennm_dof, 481);
    EXPECT_EQ(t.at(1, 4).fem_dof, 5);
    EXPECT_TRUE(std::isnan(t.at(3, 4).fem_error));
    EXPECT_EQ(t.slope.size(), 2u);
    EXPECT_EQ(t.fem_slope.count(1), 1u);
    EXPECT_EQ(t.fem_slope.count(3), 0u);
}
