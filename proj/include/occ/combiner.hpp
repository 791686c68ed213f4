#pragma once

#include "occ/covariance.hpp"
#include "occ/hierarchy.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace occ {

/// Base forecasts of p experts for n series, stacked expert-major:
/// position of (expert j, series i) is j * n + i.
class ForecastBundle {
public:
    ForecastBundle() = default;
    ForecastBundle(Eigen::VectorXd values, int n, int p);

    static ForecastBundle from_experts(const std::vector<Eigen::VectorXd>& experts);

    const Eigen::VectorXd& values() const noexcept { return values_; }
    int n() const noexcept { return n_; }
    int p() const noexcept { return p_; }
    int m() const noexcept { return n_ * p_; }

    double at(int expert, int series) const { return values_(static_cast<Eigen::Index>(expert) * n_ + series); }
    Eigen::VectorXd expert(int j) const { return values_.segment(static_cast<Eigen::Index>(j) * n_, n_); }
    /// n x p view with one column per expert.
    Eigen::Map<const Eigen::MatrixXd> as_matrix() const { return {values_.data(), n_, p_}; }

private:
    Eigen::VectorXd values_;
    int n_ = 0;
    int p_ = 0;
};

enum class Method {
    base,
    ew,
    ow_var,
    ow_cov,
    mint_shr,
    src,
    scr_ew,
    scr_var,
    scr_cov,
    occ_wlsv,
    occ_be,
    occ_shr,
    occ,
};

const char* to_string(Method method) noexcept;

/// Tolerance on coherence_residual for a forecast to count as coherent.
inline constexpr double kCoherenceTol = 1e-8;

struct CoherentForecast {
    Eigen::VectorXd y;
    Method method = Method::occ;
    bool coherent = false;
    double residual = 0.0;
};

/// Tags a vector with its coherence residual against C.
CoherentForecast make_forecast(Eigen::VectorXd y, Method method, const ConstraintMatrix& C);

/// Optimal coherent combination of p experts' base forecasts:
///
///   argmin_y (yhat - K y)' W^{-1} (yhat - K y)  s.t.  C y = 0,  K = 1_p (x) I_n
///
/// evaluated in closed form as y = M Omega' yhat with W_c = (K' W^{-1} K)^{-1},
/// Omega = W^{-1} K W_c and M = I - W_c C' (C W_c C')^{-1} C. K is never formed
/// for diagonal or expert-block W; every inverse is a Cholesky solve.
///
/// The method tag follows W's kind (diagonal -> occ_wlsv, expert block ->
/// occ_be, full shrunk -> occ_shr, anything else -> occ).
CoherentForecast occ_combine(const ForecastBundle& bundle, const WMatrix& W, const ConstraintMatrix& C);

/// Unconstrained GLS combination Omega' yhat = W_c K' W^{-1} yhat.
Eigen::VectorXd gls_combine(const ForecastBundle& bundle, const WMatrix& W);

/// Dense KKT solve of the same constrained problem with K materialized and
/// full-pivot LU throughout. Test oracle for occ_combine; O((n + n_u)^3).
Eigen::VectorXd qp_oracle_combine(const ForecastBundle& bundle, const Eigen::MatrixXd& W,
                                  const ConstraintMatrix& C);

/// Single-vector least squares adjustment y - W C' (C W C')^{-1} C y.
CoherentForecast mint_reconcile(const Eigen::Ref<const Eigen::VectorXd>& y_hat,
                                const Eigen::Ref<const Eigen::MatrixXd>& W_n, const ConstraintMatrix& C,
                                Method tag = Method::mint_shr);

// Single-task combination. Weight matrices are n x p, one row per series.

Eigen::VectorXd combine_ew(const ForecastBundle& bundle);
Eigen::VectorXd combine_weighted(const ForecastBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& weights);

/// Inverse in-sample MSE weights per series. Zero MSEs are floored to
/// 1e-12 * (largest residual column variance).
Eigen::MatrixXd ow_var_weights(const ResidualPanel& panel);

/// Newbold-Granger weights Sigma^{-1} 1 / (1' Sigma^{-1} 1) from the p x p
/// matrix of mean cross products of one series' residuals. Weights sum to one
/// and may be negative.
Eigen::MatrixXd ow_cov_weights(const ResidualPanel& panel);
Eigen::VectorXd ow_cov_weights(const Eigen::Ref<const Eigen::MatrixXd>& sigma);

Eigen::VectorXd combine_ow_var(const ForecastBundle& bundle, const ResidualPanel& panel);
Eigen::VectorXd combine_ow_cov(const ForecastBundle& bundle, const ResidualPanel& panel);

enum class WeightKind { ew, var, cov };

Eigen::MatrixXd single_task_weights(const ResidualPanel& panel, WeightKind kind);

/// T_obs x n residuals of the single-task combined forecast.
Eigen::MatrixXd combined_residuals(const ResidualPanel& panel, const Eigen::Ref<const Eigen::MatrixXd>& weights);

/// Reconcile each expert with its own W, then average.
CoherentForecast pipeline_src(const ForecastBundle& bundle, const std::vector<Eigen::MatrixXd>& per_expert_W,
                              const ConstraintMatrix& C);

/// Combine with the given weights, then reconcile with W_n.
CoherentForecast pipeline_scr(const ForecastBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                              const ConstraintMatrix& C, const Eigen::Ref<const Eigen::MatrixXd>& W_n,
                              Method tag);

/// Combine-then-reconcile with weights and W_n both estimated from the panel;
/// W_n is the shrunk covariance of the combined residuals.
CoherentForecast pipeline_scr(const ForecastBundle& bundle, const ResidualPanel& panel, const ConstraintMatrix& C,
                              WeightKind kind);

}  // namespace occ
