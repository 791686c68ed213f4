#pragma once

#include "occ/covariance.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace occ {

struct SeriesData {
    std::string id;
    std::vector<double> values;
    int period = 7;
};

enum class ModelKind { seasonal_naive, mean, drift, ses };

/// A simple deterministic forecaster standing in for a full modelling expert.
struct ExpertModel {
    ModelKind kind = ModelKind::seasonal_naive;
    double alpha = 0.2;  // ses smoothing, in (0, 1)

    /// "snaive", "mean", "drift", "ses" or "ses:<alpha>".
    static ExpertModel parse(const std::string& text);
    std::string name() const;
};

/// Observations consumed before the first one-step residual is defined.
int warmup(const ExpertModel& model, int period);

/// h-step-ahead point forecasts from the whole history. Throws SeriesTooShort.
Eigen::VectorXd forecast_base(const ExpertModel& model, std::span<const double> y, int period, int h);
Eigen::VectorXd forecast_base(const ExpertModel& model, const SeriesData& series, int h);

/// One-step-ahead in-sample errors y_t - yhat_{t|t-1} for t >= start, each
/// forecast using only y_0..y_{t-1}. start < 0 means the model's own warm-up.
Eigen::VectorXd insample_residuals(const ExpertModel& model, std::span<const double> y, int period, int start = -1);
Eigen::VectorXd insample_residuals(const ExpertModel& model, const SeriesData& series, int start = -1);

/// Residual panel over `history` (T x n, one column per series) for every
/// expert, trimmed to the largest warm-up so all experts share the same rows.
ResidualPanel build_residual_panel(const std::vector<ExpertModel>& experts,
                                   const Eigen::Ref<const Eigen::MatrixXd>& history, int period);

}  // namespace occ
