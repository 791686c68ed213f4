#include "occ/covariance.hpp"

#include "occ/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace occ {

ResidualPanel::ResidualPanel(const Eigen::MatrixXd& residuals, int n, int p) : n_(n), p_(p) {
    if (n <= 0 || p <= 0 || residuals.cols() != static_cast<Eigen::Index>(n) * p) {
        throw Error(ErrorKind::DimensionMismatch, "residual panel: expected " + std::to_string(n * p) +
                                                      " columns, got " + std::to_string(residuals.cols()));
    }
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(residuals.rows()));
    for (Eigen::Index t = 0; t < residuals.rows(); ++t) {
        if (residuals.row(t).allFinite()) keep.push_back(t);
    }
    E_.resize(static_cast<Eigen::Index>(keep.size()), residuals.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) E_.row(static_cast<Eigen::Index>(r)) = residuals.row(keep[r]);
    dropped_ = static_cast<int>(residuals.rows()) - static_cast<int>(keep.size());
}

Eigen::MatrixXd ResidualPanel::expert_block(int expert) const {
    return E_.middleCols(static_cast<Eigen::Index>(expert) * n_, n_);
}

Eigen::MatrixXd ResidualPanel::series_block(int series) const {
    Eigen::MatrixXd out(E_.rows(), p_);
    for (int j = 0; j < p_; ++j) out.col(j) = E_.col(static_cast<Eigen::Index>(j) * n_ + series);
    return out;
}

const char* to_string(WKind kind) noexcept {
    switch (kind) {
        case WKind::identity: return "identity";
        case WKind::diagonal: return "diagonal";
        case WKind::expert_block_shrunk: return "expert_block_shrunk";
        case WKind::full_shrunk: return "full_shrunk";
        case WKind::general: return "general";
    }
    return "unknown";
}

Eigen::MatrixXd sample_covariance(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() < 2) {
        throw Error(ErrorKind::TooFewObservations,
                    "sample covariance needs at least 2 observations, got " + std::to_string(X.rows()));
    }
    const Eigen::RowVectorXd mu = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mu;
    Eigen::MatrixXd S = (Xc.transpose() * Xc) / static_cast<double>(X.rows() - 1);
    // exact symmetry regardless of the product kernel
    return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd sample_covariance(const ResidualPanel& panel, std::optional<int> expert) {
    if (expert) return sample_covariance(panel.expert_block(*expert));
    return sample_covariance(panel.residuals());
}

namespace {

void require_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& S, const char* who) {
    if (S.rows() != S.cols()) {
        throw Error(ErrorKind::NotSymmetric, std::string(who) + ": matrix is not square");
    }
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::NotSymmetric, std::string(who) + ": matrix is not symmetric");
    }
}

struct Standardized {
    Eigen::MatrixXd Z;            // centered columns divided by their sd
    std::vector<char> usable;     // false for zero-variance columns
};

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() < 2) {
        throw Error(ErrorKind::TooFewObservations,
                    "shrinkage intensity needs at least 2 observations, got " + std::to_string(X.rows()));
    }
    Standardized out;
    out.Z = X.rowwise() - X.colwise().mean();
    out.usable.assign(static_cast<std::size_t>(X.cols()), 1);
    const double denom = static_cast<double>(X.rows() - 1);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double sd = std::sqrt(out.Z.col(j).squaredNorm() / denom);
        if (!(sd > 0.0) || !std::isfinite(sd)) {
            out.usable[static_cast<std::size_t>(j)] = 0;
            out.Z.col(j).setZero();
        } else {
            out.Z.col(j) /= sd;
        }
    }
    return out;
}

// (var_hat(r_ij), r_ij^2) for one column pair.
std::array<double, 2> pair_terms(const Eigen::MatrixXd& Z, Eigen::Index i, Eigen::Index j) {
    const double T = static_cast<double>(Z.rows());
    const Eigen::ArrayXd w = Z.col(i).array() * Z.col(j).array();
    const double w_bar = w.mean();
    const double r = T / (T - 1.0) * w_bar;
    const double var_r = T / ((T - 1.0) * (T - 1.0) * (T - 1.0)) * (w - w_bar).square().sum();
    return {var_r, r * r};
}

double finish_lambda(double sum_var, double sum_r2) {
    if (!(sum_r2 > 0.0)) return 1.0;
    return std::clamp(sum_var / sum_r2, 0.0, 1.0);
}

}  // namespace

namespace serial {

double schafer_strimmer_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Standardized s = standardize(X);
    const Eigen::Index k = X.cols();
    double sum_var = 0.0;
    double sum_r2 = 0.0;
    for (Eigen::Index j = 1; j < k; ++j) {
        if (!s.usable[static_cast<std::size_t>(j)]) continue;
        for (Eigen::Index i = 0; i < j; ++i) {
            if (!s.usable[static_cast<std::size_t>(i)]) continue;
            const auto t = pair_terms(s.Z, i, j);
            sum_var += t[0];
            sum_r2 += t[1];
        }
    }
    return finish_lambda(sum_var, sum_r2);
}

}  // namespace serial

double schafer_strimmer_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Standardized s = standardize(X);
    const long k = static_cast<long>(X.cols());
    double sum_var = 0.0;
    double sum_r2 = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : sum_var, sum_r2) if (k > 32)
#endif
    for (long j = 1; j < k; ++j) {
        if (!s.usable[static_cast<std::size_t>(j)]) continue;
        for (long i = 0; i < j; ++i) {
            if (!s.usable[static_cast<std::size_t>(i)]) continue;
            const auto t = pair_terms(s.Z, i, j);
            sum_var += t[0];
            sum_r2 += t[1];
        }
    }
    return finish_lambda(sum_var, sum_r2);
}

Shrunk shrink_to_diagonal(const Eigen::Ref<const Eigen::MatrixXd>& S, double lambda) {
    require_symmetric(S, "shrink_to_diagonal");
    lambda = std::clamp(lambda, 0.0, 1.0);
    Shrunk out;
    out.lambda = lambda;
    out.S = (1.0 - lambda) * S;
    // diagonal copied, not mixed, so it is preserved bit-for-bit
    out.S.diagonal() = S.diagonal();
    return out;
}

Shrunk shrunk_covariance(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    return shrink_to_diagonal(sample_covariance(X), schafer_strimmer_lambda(X));
}

bool is_positive_definite(const Eigen::Ref<const Eigen::MatrixXd>& W) {
    if (W.rows() == 0) return true;
    if (!W.allFinite()) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success) return false;
    const double mean_diag = W.diagonal().mean();
    const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
    return piv.minCoeff() > 0.0 && piv.cwiseAbs2().minCoeff() > 1e-14 * mean_diag;
}

WMatrix ensure_pd(Eigen::MatrixXd W, WKind kind, int block_size) {
    require_symmetric(W, "ensure_pd");
    WMatrix out;
    out.kind = kind;
    out.block_size = block_size;
    if (is_positive_definite(W)) {
        out.W = std::move(W);
        return out;
    }
    const double mean_diag = W.rows() > 0 ? W.diagonal().mean() : 0.0;
    if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) {
        throw Error(ErrorKind::SingularAfterConditioning, "ensure_pd: matrix has no positive scale to jitter");
    }
    for (double delta = 1e-10; delta <= 1e-6 * 1.0000001; delta *= 10.0) {
        Eigen::MatrixXd Wj = W;
        Wj.diagonal().array() += delta * mean_diag;
        if (is_positive_definite(Wj)) {
            out.W = std::move(Wj);
            out.jitter = delta;
            return out;
        }
    }
    throw Error(ErrorKind::SingularAfterConditioning, "ensure_pd: still not positive definite after jitter 1e-6");
}

WMatrix identity_W(int n, int p) {
    WMatrix out;
    out.W = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n) * p, static_cast<Eigen::Index>(n) * p);
    out.kind = WKind::identity;
    out.block_size = n;
    return out;
}

WMatrix assemble_W(const ResidualPanel& panel, WKind kind) {
    const int n = panel.n();
    const int p = panel.p();
    const int m = panel.m();
    if (kind == WKind::identity) return identity_W(n, p);
    if (panel.rows() < 2) {
        throw Error(ErrorKind::TooFewObservations,
                    "assemble_W needs at least 2 residual rows, got " + std::to_string(panel.rows()));
    }

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> lambdas;
    int block_size = 0;
    switch (kind) {
        case WKind::diagonal: {
            W.diagonal() = sample_covariance(panel.residuals()).diagonal();
            block_size = n;
            break;
        }
        case WKind::expert_block_shrunk: {
            for (int j = 0; j < p; ++j) {
                const Shrunk s = shrunk_covariance(panel.expert_block(j));
                W.block(j * n, j * n, n, n) = s.S;
                lambdas.push_back(s.lambda);
            }
            block_size = n;
            break;
        }
        case WKind::full_shrunk: {
            const Shrunk s = shrunk_covariance(panel.residuals());
            W = s.S;
            lambdas.push_back(s.lambda);
            break;
        }
        case WKind::general:
            throw Error(ErrorKind::DimensionMismatch, "assemble_W: kind 'general' is not estimable from residuals");
        case WKind::identity:
            break;
    }
    WMatrix out = ensure_pd(std::move(W), kind, block_size);
    out.shrink_lambda = std::move(lambdas);
    return out;
}

}  // namespace occ
