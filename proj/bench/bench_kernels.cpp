// Serial reference vs OpenMP kernels.

#include "occ/covariance.hpp"
#include "occ/evaluation.hpp"
#include "occ/hierarchy.hpp"
#include "occ/simulation.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

Eigen::MatrixXd random_panel(int rows, int cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) X(r, c) = nd(rng) + 0.3 * (c > 0 ? X(r, c - 1) : 0.0);
    return X;
}

void BM_ShrinkLambdaSerial(benchmark::State& state) {
    const Eigen::MatrixXd X = random_panel(200, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(occ::serial::schafer_strimmer_lambda(X));
}

void BM_ShrinkLambdaParallel(benchmark::State& state) {
    const Eigen::MatrixXd X = random_panel(200, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(occ::schafer_strimmer_lambda(X));
}

struct Experiment {
    occ::ConstraintMatrix C;
    occ::Dataset data;
    occ::RollingPlan plan;
    occ::ExperimentConfig config;
};

Experiment make_experiment(int threads) {
    Experiment ex;
    const auto spec = occ::make_grid_hierarchy({"Z1", "Z2", "Z3"}, {"S1", "S2", "S3", "S4"});
    ex.C = occ::build_constraint_matrix(spec);
    const Eigen::MatrixXd S = occ::summing_matrix(ex.C);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    const int T = 200;
    Eigen::MatrixXd B(T, ex.C.n_bottom());
    for (int t = 0; t < T; ++t)
        for (int b = 0; b < B.cols(); ++b) B(t, b) = 50.0 + 10.0 * std::sin(2.0 * M_PI * t / 7.0 + b) + nd(rng);
    ex.data.values = B * S.transpose();
    ex.data.series_ids = ex.C.ids();
    for (int t = 0; t < T; ++t) ex.data.dates.push_back("d" + std::to_string(t));
    ex.plan = occ::rolling_origin_plan(T, 120, 7);
    for (const char* e : {"snaive", "mean", "drift", "ses"}) ex.config.experts.push_back(occ::ExpertModel::parse(e));
    ex.config.approaches = {"ew", "ow_var", "ow_cov", "mint_shr", "src", "scr_ew",
                            "scr_var", "scr_cov", "occ_wlsv", "occ_be"};
    ex.config.threads = threads;
    return ex;
}

void BM_RunExperimentSerial(benchmark::State& state) {
    const Experiment ex = make_experiment(1);
    for (auto _ : state) benchmark::DoNotOptimize(occ::serial::run_experiment(ex.data, ex.C, ex.plan, ex.config));
}

void BM_RunExperimentParallel(benchmark::State& state) {
    const Experiment ex = make_experiment(0);
    for (auto _ : state) benchmark::DoNotOptimize(occ::run_experiment(ex.data, ex.C, ex.plan, ex.config));
}

void BM_SimulateSerial(benchmark::State& state) {
    occ::SimulationConfig cfg;
    cfg.replications = 200;
    cfg.meta_runs = 8;
    for (auto _ : state) benchmark::DoNotOptimize(occ::serial::simulate(cfg));
}

void BM_SimulateParallel(benchmark::State& state) {
    occ::SimulationConfig cfg;
    cfg.replications = 200;
    cfg.meta_runs = 8;
    cfg.threads = 0;
    for (auto _ : state) benchmark::DoNotOptimize(occ::simulate(cfg));
}

}  // namespace

BENCHMARK(BM_ShrinkLambdaSerial)->Arg(45)->Arg(228)->Arg(600);
BENCHMARK(BM_ShrinkLambdaParallel)->Arg(45)->Arg(228)->Arg(600);
BENCHMARK(BM_RunExperimentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunExperimentParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
