#pragma once

#include "occ/baseforecast.hpp"
#include "occ/combiner.hpp"
#include "occ/hierarchy.hpp"

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace occ {

/// Aligned observations, one row per date and one column per series in
/// hierarchy column order.
struct Dataset {
    std::vector<std::string> dates;
    std::vector<std::string> series_ids;
    Eigen::MatrixXd values;

    int length() const noexcept { return static_cast<int>(values.rows()); }
};

/// Expanding-window origins. Origin o trains on observations [0, o) and
/// forecasts indices o, ..., o + H - 1, truncated at the end of the data.
struct RollingPlan {
    int total_len = 0;
    int first_train_len = 0;
    int max_horizon = 1;
    int step = 1;
    std::vector<int> origins;
    std::vector<int> cases;  // Q_h, indexed by h - 1

    int q(int h) const { return cases.at(static_cast<std::size_t>(h - 1)); }
    /// Horizons available at the k-th origin.
    int horizons_at(std::size_t k) const;
};

/// Throws EmptyTestSet when no h = H forecast can be scored.
RollingPlan rolling_origin_plan(int total_len, int first_train_len, int max_horizon, int step = 1);

/// Forecasts of one approach over a plan: values[k][h - 1] is the n-vector
/// issued at origin k for horizon h. failed[k] marks origins where the
/// approach raised an error; their cases are skipped rather than scored.
struct ApproachForecasts {
    std::vector<std::vector<Eigen::VectorXd>> values;
    std::vector<char> failed;
};

struct HorizonScores {
    std::vector<Eigen::VectorXd> mae;  // [h - 1](series)
    std::vector<Eigen::VectorXd> mse;
    std::vector<int> cases;            // scored cases per horizon
};

/// MAE and MSE per horizon and series. Throws MissingForecast.
HorizonScores score(const Eigen::Ref<const Eigen::MatrixXd>& actuals, const ApproachForecasts& forecasts,
                    const RollingPlan& plan);

struct ArMetrics {
    double mae = 1.0;
    double mse = 1.0;
    int pairs = 0;     // (horizon, series) ratios used
    int excluded = 0;  // pairs dropped for a zero benchmark
};

/// Geometric mean over the (horizon, series) pairs of app / benchmark MAE and
/// MSE. A single horizon reproduces a per-horizon column; several horizons
/// pool all their pairs with equal weight. Pairs with a zero benchmark are
/// excluded and counted; ZeroBenchmark is thrown when none remain.
ArMetrics ar_relative(const HorizonScores& app, const HorizonScores& benchmark, std::span<const int> horizons);

struct ApproachResult {
    std::string id;
    HorizonScores scores;
    int failures = 0;
    std::string first_failure;
    double max_residual = 0.0;
    bool coherent = false;
};

struct CoherenceRecord {
    std::string approach;
    std::string origin;
    int horizon = 0;
    double residual = 0.0;
};

struct EvalReport {
    std::vector<std::string> series_ids;
    int max_horizon = 0;
    std::string benchmark = "ew";
    std::vector<ApproachResult> approaches;
    std::vector<CoherenceRecord> audit;

    const ApproachResult& find(const std::string& id) const;
};

ArMetrics ar_relative(const EvalReport& report, const std::string& approach, const std::string& benchmark,
                      std::span<const int> horizons);

/// Horizon columns of the comparison table: 1, 2, 3, 5, 7 capped at H.
std::vector<int> table_horizons(int max_horizon);
/// 1..H, the pooled column.
std::vector<int> all_horizons(int max_horizon);

/// Externally produced forecasts keyed by (origin date, horizon). Bundles
/// stack experts in `experts` order and series in hierarchy column order.
struct ImportedForecasts {
    std::vector<std::string> experts;
    std::map<std::pair<std::string, int>, ForecastBundle> bundles;
};

struct ExperimentConfig {
    std::vector<ExpertModel> experts;  // ignored when `imported` is set
    const ImportedForecasts* imported = nullptr;
    std::vector<std::string> approaches;
    std::string benchmark = "ew";
    int period = 7;
    int threads = 1;
};

/// Throws Config unless `id` names a known approach: ew, ow_var, ow_cov, src,
/// scr_ew, scr_var, scr_cov, occ_wlsv, occ_be, occ_shr, mint_shr,
/// mint_shr:<expert> or base:<expert>.
void validate_approach(const std::string& id, const std::vector<std::string>& expert_names);

/// Rolling-origin experiment: at each origin fit the experts on the expanding
/// window, forecast h = 1..H, estimate covariances from the in-sample
/// residuals, apply every approach and score them. Origins run in parallel
/// with `config.threads` OpenMP threads; results do not depend on the thread
/// count. Approach errors are recorded per origin and the run continues.
EvalReport run_experiment(const Dataset& data, const ConstraintMatrix& C, const RollingPlan& plan,
                          const ExperimentConfig& config);

namespace serial {

/// Single-threaded reference for run_experiment.
EvalReport run_experiment(const Dataset& data, const ConstraintMatrix& C, const RollingPlan& plan,
                          const ExperimentConfig& config);

}  // namespace serial

}  // namespace occ
