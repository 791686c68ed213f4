#include "occ/combiner.hpp"

#include "occ/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace occ {

ForecastBundle::ForecastBundle(Eigen::VectorXd values, int n, int p) : values_(std::move(values)), n_(n), p_(p) {
    if (n <= 0 || p <= 0 || values_.size() != static_cast<Eigen::Index>(n) * p) {
        throw Error(ErrorKind::DimensionMismatch, "forecast bundle: expected " + std::to_string(n * p) +
                                                      " values, got " + std::to_string(values_.size()));
    }
}

ForecastBundle ForecastBundle::from_experts(const std::vector<Eigen::VectorXd>& experts) {
    if (experts.empty()) throw Error(ErrorKind::DimensionMismatch, "forecast bundle: no experts");
    const auto n = experts.front().size();
    Eigen::VectorXd v(n * static_cast<Eigen::Index>(experts.size()));
    for (std::size_t j = 0; j < experts.size(); ++j) {
        if (experts[j].size() != n) {
            throw Error(ErrorKind::UnbalancedBundle, "forecast bundle: experts disagree on series count");
        }
        v.segment(static_cast<Eigen::Index>(j) * n, n) = experts[j];
    }
    return ForecastBundle(std::move(v), static_cast<int>(n), static_cast<int>(experts.size()));
}

const char* to_string(Method method) noexcept {
    switch (method) {
        case Method::base: return "base";
        case Method::ew: return "ew";
        case Method::ow_var: return "ow_var";
        case Method::ow_cov: return "ow_cov";
        case Method::mint_shr: return "mint_shr";
        case Method::src: return "src";
        case Method::scr_ew: return "scr_ew";
        case Method::scr_var: return "scr_var";
        case Method::scr_cov: return "scr_cov";
        case Method::occ_wlsv: return "occ_wlsv";
        case Method::occ_be: return "occ_be";
        case Method::occ_shr: return "occ_shr";
        case Method::occ: return "occ";
    }
    return "unknown";
}

CoherentForecast make_forecast(Eigen::VectorXd y, Method method, const ConstraintMatrix& C) {
    CoherentForecast out;
    out.residual = coherence_residual(C, y);
    out.coherent = out.residual <= kCoherenceTol;
    out.method = method;
    out.y = std::move(y);
    return out;
}

namespace {

void check_shapes(const ForecastBundle& bundle, Eigen::Index w_size, const ConstraintMatrix& C) {
    if (w_size != bundle.m()) {
        throw Error(ErrorKind::DimensionMismatch, "W is " + std::to_string(w_size) + " square but the bundle has m = " +
                                                      std::to_string(bundle.m()));
    }
    if (C.n() != bundle.n()) {
        throw Error(ErrorKind::DimensionMismatch, "constraint matrix has " + std::to_string(C.n()) +
                                                      " columns but the bundle has n = " + std::to_string(bundle.n()));
    }
}

// y - G (C G)^{-1} C y where G = V C' for the metric V of the projection.
Eigen::VectorXd project(const Eigen::VectorXd& y, const Eigen::MatrixXd& G, const ConstraintMatrix& C,
                        ErrorKind on_failure) {
    if (C.n_upper() == 0) return y;
    const Eigen::MatrixXd& Cm = C.matrix();
    Eigen::MatrixXd CG = Cm * G;
    CG = 0.5 * (CG + CG.transpose());
    if (!is_positive_definite(CG)) {
        throw Error(on_failure, "C W C' is not positive definite (constraints rank deficient?)");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(CG);
    return y - G * llt.solve(Cm * y);
}

// Accumulates A = K' W^{-1} K and b = K' W^{-1} yhat without forming K when
// W's structure allows it.
struct Normal {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

Normal normal_equations(const ForecastBundle& bundle, const WMatrix& W) {
    const int n = bundle.n();
    const int p = bundle.p();
    Normal ne{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};

    if (W.kind == WKind::identity || W.kind == WKind::diagonal) {
        const Eigen::VectorXd d = W.W.diagonal();
        if (!(d.minCoeff() > 0.0)) throw Error(ErrorKind::SingularW, "diagonal W has a non-positive entry");
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < p; ++j) {
            const auto dj = d.segment(static_cast<Eigen::Index>(j) * n, n).array();
            a.array() += dj.inverse();
            ne.b.array() += bundle.expert(j).array() / dj;
        }
        ne.A.diagonal() = a;
        return ne;
    }

    if (W.block_size == n && W.kind != WKind::general) {
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        for (int j = 0; j < p; ++j) {
            Eigen::LLT<Eigen::MatrixXd> llt(W.block(j));
            if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularW, "expert block of W is not p.d.");
            ne.A += llt.solve(I);
            ne.b += llt.solve(bundle.expert(j));
        }
        return ne;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(W.W);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularW, "W is not positive definite");
    Eigen::MatrixXd K(bundle.m(), n);
    for (int j = 0; j < p; ++j) K.middleRows(static_cast<Eigen::Index>(j) * n, n).setIdentity();
    const Eigen::MatrixXd WinvK = llt.solve(K);
    const Eigen::VectorXd Winvy = llt.solve(bundle.values());
    for (int j = 0; j < p; ++j) {
        ne.A += WinvK.middleRows(static_cast<Eigen::Index>(j) * n, n);
        ne.b += Winvy.segment(static_cast<Eigen::Index>(j) * n, n);
    }
    ne.A = 0.5 * (ne.A + ne.A.transpose());
    return ne;
}

Method tag_for(WKind kind) {
    switch (kind) {
        case WKind::diagonal: return Method::occ_wlsv;
        case WKind::expert_block_shrunk: return Method::occ_be;
        case WKind::full_shrunk: return Method::occ_shr;
        default: return Method::occ;
    }
}

}  // namespace

Eigen::VectorXd gls_combine(const ForecastBundle& bundle, const WMatrix& W) {
    if (W.size() != bundle.m()) {
        throw Error(ErrorKind::DimensionMismatch, "W does not match the bundle size");
    }
    const Normal ne = normal_equations(bundle, W);
    Eigen::LLT<Eigen::MatrixXd> llt(ne.A);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularW, "K' W^-1 K is not positive definite");
    return llt.solve(ne.b);
}

CoherentForecast occ_combine(const ForecastBundle& bundle, const WMatrix& W, const ConstraintMatrix& C) {
    check_shapes(bundle, W.size(), C);
    const Normal ne = normal_equations(bundle, W);
    Eigen::LLT<Eigen::MatrixXd> llt(ne.A);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularW, "K' W^-1 K is not positive definite");

    // Omega' yhat = W_c K' W^{-1} yhat, then project in the W_c metric.
    const Eigen::VectorXd combined = llt.solve(ne.b);
    Eigen::VectorXd y = combined;
    if (C.n_upper() > 0) {
        const Eigen::MatrixXd Wc_Ct = llt.solve(C.matrix().transpose());
        y = project(combined, Wc_Ct, C, ErrorKind::RankDeficientConstraints);
    }
    return make_forecast(std::move(y), tag_for(W.kind), C);
}

Eigen::VectorXd qp_oracle_combine(const ForecastBundle& bundle, const Eigen::MatrixXd& W, const ConstraintMatrix& C) {
    check_shapes(bundle, W.rows(), C);
    const int n = bundle.n();
    const int nu = C.n_upper();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(bundle.m(), n);
    for (int j = 0; j < bundle.p(); ++j) K.middleRows(static_cast<Eigen::Index>(j) * n, n).setIdentity();

    Eigen::FullPivLU<Eigen::MatrixXd> w_lu(W);
    if (!w_lu.isInvertible()) throw Error(ErrorKind::SingularKKT, "oracle: W is singular");
    const Eigen::MatrixXd WinvK = w_lu.solve(K);

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + nu, n + nu);
    kkt.topLeftCorner(n, n) = K.transpose() * WinvK;
    kkt.topRightCorner(n, nu) = C.matrix().transpose();
    kkt.bottomLeftCorner(nu, n) = C.matrix();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + nu);
    rhs.head(n) = WinvK.transpose() * bundle.values();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularKKT, "oracle: KKT matrix is singular");
    return lu.solve(rhs).head(n);
}

CoherentForecast mint_reconcile(const Eigen::Ref<const Eigen::VectorXd>& y_hat,
                                const Eigen::Ref<const Eigen::MatrixXd>& W_n, const ConstraintMatrix& C,
                                Method tag) {
    if (y_hat.size() != C.n() || W_n.rows() != C.n() || W_n.cols() != C.n()) {
        throw Error(ErrorKind::DimensionMismatch, "mint_reconcile: shapes of y, W and C disagree");
    }
    Eigen::VectorXd y = y_hat;
    if (C.n_upper() > 0) {
        const Eigen::MatrixXd G = W_n * C.matrix().transpose();
        y = project(y, G, C, ErrorKind::SingularProjection);
    }
    return make_forecast(std::move(y), tag, C);
}

Eigen::VectorXd combine_ew(const ForecastBundle& bundle) {
    return bundle.as_matrix().rowwise().mean();
}

Eigen::VectorXd combine_weighted(const ForecastBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& weights) {
    if (weights.rows() != bundle.n() || weights.cols() != bundle.p()) {
        throw Error(ErrorKind::DimensionMismatch, "weights must be n x p");
    }
    return bundle.as_matrix().cwiseProduct(weights).rowwise().sum();
}

namespace {

void require_panel(const ResidualPanel& panel) {
    if (panel.rows() < 1 || panel.m() == 0) {
        throw Error(ErrorKind::DegeneratePanel, "residual panel is empty");
    }
    if (!panel.residuals().allFinite()) {
        throw Error(ErrorKind::DegeneratePanel, "residual panel has non-finite values");
    }
}

}  // namespace

Eigen::MatrixXd ow_var_weights(const ResidualPanel& panel) {
    require_panel(panel);
    const Eigen::MatrixXd& E = panel.residuals();
    const Eigen::RowVectorXd mse = E.colwise().squaredNorm() / static_cast<double>(E.rows());

    double max_var = 0.0;
    if (E.rows() >= 2) max_var = sample_covariance(E).diagonal().maxCoeff();
    double floor = 1e-12 * max_var;
    if (!(floor > 0.0)) floor = std::numeric_limits<double>::min();

    Eigen::MatrixXd w(panel.n(), panel.p());
    for (int i = 0; i < panel.n(); ++i) {
        for (int j = 0; j < panel.p(); ++j) {
            w(i, j) = 1.0 / std::max(mse(static_cast<Eigen::Index>(j) * panel.n() + i), floor);
        }
        w.row(i) /= w.row(i).sum();
    }
    return w;
}

Eigen::VectorXd ow_cov_weights(const Eigen::Ref<const Eigen::MatrixXd>& sigma) {
    WMatrix pd;
    try {
        pd = ensure_pd(sigma);
    } catch (const Error& e) {
        throw Error(ErrorKind::SingularSeriesCovariance, std::string("ow_cov: ") + e.what());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(pd.W);
    const Eigen::VectorXd z = llt.solve(Eigen::VectorXd::Ones(sigma.rows()));
    const double s = z.sum();
    if (!std::isfinite(s) || s == 0.0) {
        throw Error(ErrorKind::SingularSeriesCovariance, "ow_cov: 1' Sigma^-1 1 vanishes");
    }
    return z / s;
}

Eigen::MatrixXd ow_cov_weights(const ResidualPanel& panel) {
    require_panel(panel);
    Eigen::MatrixXd w(panel.n(), panel.p());
    for (int i = 0; i < panel.n(); ++i) {
        const Eigen::MatrixXd Ei = panel.series_block(i);
        Eigen::MatrixXd sigma = (Ei.transpose() * Ei) / static_cast<double>(Ei.rows());
        sigma = 0.5 * (sigma + sigma.transpose());
        w.row(i) = ow_cov_weights(sigma).transpose();
    }
    return w;
}

Eigen::VectorXd combine_ow_var(const ForecastBundle& bundle, const ResidualPanel& panel) {
    return combine_weighted(bundle, ow_var_weights(panel));
}

Eigen::VectorXd combine_ow_cov(const ForecastBundle& bundle, const ResidualPanel& panel) {
    return combine_weighted(bundle, ow_cov_weights(panel));
}

Eigen::MatrixXd single_task_weights(const ResidualPanel& panel, WeightKind kind) {
    switch (kind) {
        case WeightKind::var: return ow_var_weights(panel);
        case WeightKind::cov: return ow_cov_weights(panel);
        case WeightKind::ew: break;
    }
    return Eigen::MatrixXd::Constant(panel.n(), panel.p(), 1.0 / panel.p());
}

Eigen::MatrixXd combined_residuals(const ResidualPanel& panel, const Eigen::Ref<const Eigen::MatrixXd>& weights) {
    if (weights.rows() != panel.n() || weights.cols() != panel.p()) {
        throw Error(ErrorKind::DimensionMismatch, "weights must be n x p");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(panel.rows(), panel.n());
    for (int j = 0; j < panel.p(); ++j) {
        out += panel.expert_block(j) * weights.col(j).asDiagonal();
    }
    return out;
}

CoherentForecast pipeline_src(const ForecastBundle& bundle, const std::vector<Eigen::MatrixXd>& per_expert_W,
                              const ConstraintMatrix& C) {
    if (static_cast<int>(per_expert_W.size()) != bundle.p()) {
        throw Error(ErrorKind::DimensionMismatch, "src needs one W per expert");
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(bundle.n());
    for (int j = 0; j < bundle.p(); ++j) {
        acc += mint_reconcile(bundle.expert(j), per_expert_W[static_cast<std::size_t>(j)], C).y;
    }
    return make_forecast(acc / bundle.p(), Method::src, C);
}

CoherentForecast pipeline_scr(const ForecastBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                              const ConstraintMatrix& C, const Eigen::Ref<const Eigen::MatrixXd>& W_n,
                              Method tag) {
    return mint_reconcile(combine_weighted(bundle, weights), W_n, C, tag);
}

CoherentForecast pipeline_scr(const ForecastBundle& bundle, const ResidualPanel& panel, const ConstraintMatrix& C,
                              WeightKind kind) {
    const Eigen::MatrixXd w = single_task_weights(panel, kind);
    const Eigen::MatrixXd ec = combined_residuals(panel, w);
    const WMatrix W_n = ensure_pd(shrunk_covariance(ec).S);
    const Method tag = kind == WeightKind::ew ? Method::scr_ew : kind == WeightKind::var ? Method::scr_var
                                                                                         : Method::scr_cov;
    return pipeline_scr(bundle, w, C, W_n.W, tag);
}

}  // namespace occ
