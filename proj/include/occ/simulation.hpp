#pragma once

#include "occ/covariance.hpp"
#include "occ/hierarchy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace occ {

/// Monte Carlo scenario: a zones x sources grouped hierarchy, p experts whose
/// zero-mean Gaussian errors are heteroscedastic across series and
/// equicorrelated within each expert, independent across experts.
struct SimulationConfig {
    int zones = 2;
    int sources = 4;
    int experts = 3;
    int replications = 1000;   // forecast cases per meta-run
    int meta_runs = 20;        // independent residual panels for the estimated W
    int residual_rows = 200;   // T_obs of each estimation panel
    std::uint64_t seed = 42;
    int threads = 1;
    std::vector<double> expert_scale{1.0, 1.6, 2.2};
    std::vector<double> expert_corr{0.3, 0.5, 0.6};
};

struct SimulationScenario {
    GroupedHierarchySpec spec;
    ConstraintMatrix C;
    Eigen::MatrixXd S;       // summing matrix
    Eigen::MatrixXd W_true;  // m x m error covariance
};

SimulationScenario make_scenario(const SimulationConfig& config);

/// Approaches scored in every meta-run, in report order.
const std::vector<std::string>& simulation_approaches();

struct MetaRunResult {
    std::vector<Eigen::VectorXd> mse;  // per approach, per series
    std::vector<Eigen::VectorXd> mae;
    Eigen::VectorXd oracle_error_sum;     // sum of (occ_oracle - truth)
    Eigen::VectorXd oracle_error_sq_sum;  // sum of squares of the same
    Eigen::VectorXd be_error_sum;
    Eigen::VectorXd be_error_sq_sum;
    double max_residual = 0.0;            // over every coherent approach
    std::vector<double> be_lambda;
};

struct SimulationReport {
    SimulationConfig config;
    std::vector<MetaRunResult> runs;

    int approach_index(const std::string& id) const;
    /// Geometric mean over series of MSE (MAE) ratios vs plain ew in one meta-run.
    double ar_mse(int run, const std::string& id) const;
    double ar_mae(int run, const std::string& id) const;
    /// Mean over series and meta-runs of the per-series MSE.
    double mean_mse(const std::string& id) const;
    double mean_mse(int run, const std::string& id) const;
    /// Largest |mean error| / standard error over series, pooled over meta-runs.
    double oracle_bias_z() const;
    double be_bias_z() const;
    double max_residual() const;
};

/// Meta-runs execute in parallel; each draws from its own generator seeded by
/// (seed, meta-run index), so results do not depend on the thread count.
SimulationReport simulate(const SimulationConfig& config);

/// Deterministic plain-text rendering (fixed precision).
std::string format_simulation(const SimulationReport& report);
/// Long CSV: meta_run,approach,metric,value.
std::string simulation_csv(const SimulationReport& report);

namespace serial {

SimulationReport simulate(const SimulationConfig& config);

}  // namespace serial

}  // namespace occ
