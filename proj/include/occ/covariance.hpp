#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace occ {

/// In-sample one-step residuals, T_obs x m with columns stacked expert-major:
/// expert 0's n series, then expert 1's, and so on.
class ResidualPanel {
public:
    ResidualPanel() = default;

    /// Rows holding any non-finite value are dropped (listwise deletion).
    ResidualPanel(const Eigen::MatrixXd& residuals, int n, int p);

    const Eigen::MatrixXd& residuals() const noexcept { return E_; }
    int n() const noexcept { return n_; }
    int p() const noexcept { return p_; }
    int m() const noexcept { return n_ * p_; }
    int rows() const noexcept { return static_cast<int>(E_.rows()); }
    int dropped_rows() const noexcept { return dropped_; }

    /// T_obs x n residuals of one expert.
    Eigen::MatrixXd expert_block(int expert) const;
    /// T_obs x p residuals of one series across experts.
    Eigen::MatrixXd series_block(int series) const;

private:
    Eigen::MatrixXd E_;
    int n_ = 0;
    int p_ = 0;
    int dropped_ = 0;
};

enum class WKind { identity, diagonal, expert_block_shrunk, full_shrunk, general };

const char* to_string(WKind kind) noexcept;

/// Error covariance used by the combiners. `block_size` is n when W is known
/// to be block diagonal over experts, 0 otherwise.
struct WMatrix {
    Eigen::MatrixXd W;
    WKind kind = WKind::general;
    std::vector<double> shrink_lambda;  // one per block, or one global value
    double jitter = 0.0;                // delta applied by ensure_pd
    int block_size = 0;

    Eigen::Index size() const noexcept { return W.rows(); }
    int blocks() const noexcept { return block_size > 0 ? static_cast<int>(W.rows()) / block_size : 1; }
    Eigen::MatrixXd block(int j) const { return W.block(j * block_size, j * block_size, block_size, block_size); }
};

/// Unbiased (T-1 divisor) covariance of the columns of X. Throws TooFewObservations.
Eigen::MatrixXd sample_covariance(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Covariance of one expert's columns, or of all m columns when expert is empty.
Eigen::MatrixXd sample_covariance(const ResidualPanel& panel, std::optional<int> expert = std::nullopt);

struct Shrunk {
    Eigen::MatrixXd S;
    double lambda = 0.0;
};

/// lambda * diag(S) + (1 - lambda) * S. Throws NotSymmetric.
Shrunk shrink_to_diagonal(const Eigen::Ref<const Eigen::MatrixXd>& S, double lambda);

/// Schafer-Strimmer intensity toward the diagonal target, computed on the
/// correlations of X: sum var(r_ij) / sum r_ij^2 over i != j, clipped to
/// [0, 1]. Zero-variance columns do not contribute; lambda = 1 when the
/// denominator vanishes. OpenMP-parallel over column pairs.
double schafer_strimmer_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Sample covariance of X shrunk toward its diagonal with the estimated intensity.
Shrunk shrunk_covariance(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Builds W from residuals. Always returns a positive-definite matrix or throws
/// SingularAfterConditioning.
WMatrix assemble_W(const ResidualPanel& panel, WKind kind);

/// Identity W of size n*p with expert blocks of size n.
WMatrix identity_W(int n, int p);

/// Cholesky probe; on failure adds delta * mean(diag W) * I for delta in
/// 1e-10, 1e-9, ..., 1e-6 and records the delta used.
WMatrix ensure_pd(Eigen::MatrixXd W, WKind kind = WKind::general, int block_size = 0);

/// True when W admits a numerically safe Cholesky factorization.
bool is_positive_definite(const Eigen::Ref<const Eigen::MatrixXd>& W);

namespace serial {

/// Single-threaded reference for schafer_strimmer_lambda.
double schafer_strimmer_lambda(const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace serial

}  // namespace occ
