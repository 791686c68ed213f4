#pragma once

// Test-only reference computations. Nothing here calls into the combiner or
// covariance code paths under test.

#include "occ/hierarchy.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace occ::testing {

/// Rank by Gaussian elimination with partial pivoting.
inline int rank_by_elimination(Eigen::MatrixXd A, double tol = 1e-10) {
    int rank = 0;
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    for (Eigen::Index c = 0; c < cols && rank < rows; ++c) {
        Eigen::Index piv = rank;
        for (Eigen::Index r = rank + 1; r < rows; ++r)
            if (std::abs(A(r, c)) > std::abs(A(piv, c))) piv = r;
        if (std::abs(A(piv, c)) <= tol) continue;
        A.row(piv).swap(A.row(rank));
        for (Eigen::Index r = rank + 1; r < rows; ++r) A.row(r) -= (A(r, c) / A(rank, c)) * A.row(rank);
        ++rank;
    }
    return rank;
}

/// Basis of the null space of C (columns span {y : C y = 0}) from a full SVD.
inline Eigen::MatrixXd null_basis(const Eigen::MatrixXd& C) {
    const Eigen::Index n = C.cols();
    if (C.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    const Eigen::Index r = rank_by_elimination(C);
    return svd.matrixV().rightCols(n - r);
}

/// Constrained GLS by reparameterization: y = N b over the null space of C,
/// b from the whitened least squares problem solved by Householder QR.
/// Shares no code with occ_combine or qp_oracle_combine.
inline Eigen::VectorXd coherent_gls_by_nullspace(const Eigen::VectorXd& yhat, const Eigen::MatrixXd& W,
                                                  const Eigen::MatrixXd& C, int p) {
    const Eigen::Index n = C.cols();
    const Eigen::MatrixXd N = null_basis(C);
    Eigen::MatrixXd KN(n * p, N.cols());
    for (int j = 0; j < p; ++j) KN.middleRows(j * n, n) = N;
    // whiten with the symmetric inverse square root of W
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    const Eigen::MatrixXd Wm12 = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                 es.eigenvectors().transpose();
    const Eigen::VectorXd b = (Wm12 * KN).householderQr().solve(Wm12 * yhat);
    return N * b;
}

/// Wishart-style random s.p.d. matrix: A A' / df + floor * I.
inline Eigen::MatrixXd random_spd(int m, std::mt19937_64& rng, double floor = 0.05) {
    std::normal_distribution<double> nd;
    const int df = m + 3;
    Eigen::MatrixXd A(m, df);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < df; ++k) A(i, k) = nd(rng);
    Eigen::MatrixXd W = A * A.transpose() / df;
    W.diagonal().array() += floor;
    return 0.5 * (W + W.transpose());
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> nd(mean, sd);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

/// Random aggregation constraints C = [I_nu, -A] with A a 0/1 matrix whose
/// rows are non-empty subsets of the bottoms.
inline ConstraintMatrix random_hierarchy_constraints(int n_upper, int n_bottom, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> pick(0, n_bottom - 1);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_upper, n_upper + n_bottom);
    for (int r = 0; r < n_upper; ++r) {
        C(r, r) = 1.0;
        bool any = false;
        for (int b = 0; b < n_bottom; ++b) {
            if (coin(rng)) {
                C(r, n_upper + b) = -1.0;
                any = true;
            }
        }
        if (!any) C(r, n_upper + pick(rng)) = -1.0;
    }
    std::vector<std::string> ids;
    for (int k = 0; k < n_upper + n_bottom; ++k) ids.push_back("s" + std::to_string(k));
    return ConstraintMatrix(C, ids, n_upper);
}

/// Dense Gaussian constraint matrix (full row rank almost surely).
inline ConstraintMatrix random_dense_constraints(int n_rows, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd C(n_rows, n);
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < n; ++c) C(r, c) = nd(rng);
    std::vector<std::string> ids;
    for (int k = 0; k < n; ++k) ids.push_back("s" + std::to_string(k));
    return ConstraintMatrix(C, ids, n_rows);
}

}  // namespace occ::testing
