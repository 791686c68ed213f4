#include "doctest.h"

#include "occ/combiner.hpp"
#include "occ/error.hpp"
#include "oracles.hpp"

#include <random>

using namespace occ;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an occ::Error");
    return ErrorKind::Config;
}

ConstraintMatrix toy_C() {
    return ConstraintMatrix(Eigen::RowVector3d(1, -1, -1), {"T", "a", "b"}, 1);
}

ForecastBundle toy_bundle() {
    return ForecastBundle::from_experts({Eigen::Vector3d(10, 6, 5), Eigen::Vector3d(12, 6, 4)});
}

WMatrix general_W(const Eigen::MatrixXd& W) {
    WMatrix out;
    out.W = W;
    return out;
}

double rel_inf(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) {
    return (a - ref).cwiseAbs().maxCoeff() / (1.0 + ref.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("toy A: two experts, identity W") {
    // frozen from the null-space oracle: [65/6, 37/6, 28/6]
    const Eigen::VectorXd oracle =
        testing::coherent_gls_by_nullspace(toy_bundle().values(), Eigen::MatrixXd::Identity(6, 6), toy_C().matrix(), 2);
    const Eigen::Vector3d expected(65.0 / 6, 37.0 / 6, 28.0 / 6);
    CHECK((oracle - expected).cwiseAbs().maxCoeff() < 1e-12);

    const CoherentForecast f = occ_combine(toy_bundle(), identity_W(3, 2), toy_C());
    CHECK((f.y - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(f.coherent);
    CHECK(f.residual <= 1e-12);

    const Eigen::VectorXd kkt = qp_oracle_combine(toy_bundle(), Eigen::MatrixXd::Identity(6, 6), toy_C());
    CHECK((kkt - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("toy B: single vector reconciliation with diagonal W") {
    const Eigen::Vector3d yhat(10, 6, 5);
    const Eigen::Matrix3d W = Eigen::Vector3d(4, 1, 1).asDiagonal();
    const Eigen::Vector3d expected(32.0 / 3, 35.0 / 6, 29.0 / 6);
    CHECK((testing::coherent_gls_by_nullspace(yhat, W, toy_C().matrix(), 1) - expected).cwiseAbs().maxCoeff() < 1e-12);

    const CoherentForecast f = mint_reconcile(yhat, W, toy_C());
    CHECK((f.y - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(f.method == Method::mint_shr);

    const ForecastBundle one = ForecastBundle::from_experts({yhat});
    CHECK((qp_oracle_combine(one, W, toy_C()) - expected).cwiseAbs().maxCoeff() < 1e-10);

    const CoherentForecast ols = mint_reconcile(yhat, Eigen::Matrix3d::Identity(), toy_C());
    CHECK((ols.y - Eigen::Vector3d(31.0 / 3, 17.0 / 3, 14.0 / 3)).cwiseAbs().maxCoeff() < 1e-12);

    const CoherentForecast coherent = mint_reconcile(Eigen::Vector3d(10, 6, 4), W, toy_C());
    CHECK((coherent.y - Eigen::Vector3d(10, 6, 4)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("occ with p = 1 equals mint_reconcile") {
    std::mt19937_64 rng(4);
    const ConstraintMatrix C = testing::random_hierarchy_constraints(3, 5, rng);
    const Eigen::MatrixXd W = testing::random_spd(8, rng);
    const Eigen::VectorXd y = testing::random_vector(8, rng, 10.0, 3.0);
    const CoherentForecast a = occ_combine(ForecastBundle(y, 8, 1), general_W(W), C);
    const CoherentForecast b = mint_reconcile(y, W, C);
    CHECK(rel_inf(a.y, b.y) <= 1e-10);
}

TEST_CASE("identity W projects the plain expert average") {
    const CoherentForecast a = occ_combine(toy_bundle(), identity_W(3, 2), toy_C());
    const CoherentForecast b = mint_reconcile(combine_ew(toy_bundle()), Eigen::Matrix3d::Identity(), toy_C());
    CHECK(rel_inf(a.y, b.y) <= 1e-12);
}

TEST_CASE("oracle edge cases") {
    // no constraints: per-series GLS combination
    const ConstraintMatrix free = ConstraintMatrix::unconstrained({"a", "b"});
    const ForecastBundle b = ForecastBundle::from_experts({Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 6)});
    Eigen::MatrixXd W = Eigen::Vector4d(1, 1, 3, 3).asDiagonal();
    // inverse-variance weights 3/4 and 1/4
    CHECK((qp_oracle_combine(b, W, free) - Eigen::Vector2d(1.5, 3.0)).cwiseAbs().maxCoeff() < 1e-12);

    // identical coherent experts pass through
    const ForecastBundle same = ForecastBundle::from_experts({Eigen::Vector3d(10, 6, 4), Eigen::Vector3d(10, 6, 4)});
    CHECK((qp_oracle_combine(same, Eigen::MatrixXd::Identity(6, 6), toy_C()) - Eigen::Vector3d(10, 6, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((occ_combine(same, identity_W(3, 2), toy_C()).y - Eigen::Vector3d(10, 6, 4)).cwiseAbs().maxCoeff() < 1e-12);

    // rank-deficient constraints: duplicated row
    Eigen::MatrixXd Cd(2, 3);
    Cd << 1, -1, -1, 1, -1, -1;
    const ConstraintMatrix dup(Cd, {"T", "a", "b"}, 2);
    CHECK(kind_of([&] { occ_combine(toy_bundle(), identity_W(3, 2), dup); }) == ErrorKind::RankDeficientConstraints);
    CHECK(kind_of([&] { qp_oracle_combine(toy_bundle(), Eigen::MatrixXd::Identity(6, 6), dup); }) ==
          ErrorKind::SingularKKT);
    CHECK(kind_of([&] { mint_reconcile(Eigen::Vector3d(1, 2, 3), Eigen::Matrix3d::Identity(), dup); }) ==
          ErrorKind::SingularProjection);

    CHECK(kind_of([&] { occ_combine(toy_bundle(), identity_W(2, 2), toy_C()); }) == ErrorKind::DimensionMismatch);
    CHECK(kind_of([&] { occ_combine(toy_bundle(), general_W(-Eigen::MatrixXd::Identity(6, 6)), toy_C()); }) ==
          ErrorKind::SingularW);
}

TEST_CASE("single-task combinations") {
    CHECK(combine_ew(ForecastBundle::from_experts({Eigen::VectorXd::Constant(1, 10), Eigen::VectorXd::Constant(1, 12)}))(0) ==
          11.0);
    const ForecastBundle three =
        ForecastBundle::from_experts({Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4), Eigen::Vector2d(5, 6)});
    CHECK(combine_ew(three) == Eigen::Vector2d(3, 4));
    CHECK(combine_ew(ForecastBundle::from_experts({Eigen::Vector2d(1, 2)})) == Eigen::Vector2d(1, 2));

    // MSEs (1, 3): residual columns with mean square 1 and 3
    Eigen::MatrixXd E(2, 2);
    E << 1, std::sqrt(3.0), -1, -std::sqrt(3.0);
    const ResidualPanel panel(E, 1, 2);
    const Eigen::MatrixXd w = ow_var_weights(panel);
    CHECK(w(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(w(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
    const ForecastBundle b = ForecastBundle::from_experts({Eigen::VectorXd::Constant(1, 10), Eigen::VectorXd::Constant(1, 14)});
    CHECK(combine_ow_var(b, panel)(0) == doctest::Approx(11.0).epsilon(1e-14));

    // equal MSEs reduce to ew
    Eigen::MatrixXd Eq(2, 2);
    Eq << 1, -1, -1, 1;
    CHECK(combine_ow_var(b, ResidualPanel(Eq, 1, 2))(0) == doctest::Approx(12.0).epsilon(1e-14));

    // a zero MSE is floored; nearly all weight goes to that expert
    Eigen::MatrixXd Ez(3, 2);
    Ez << 0, 1, 0, -1, 0, 2;
    const Eigen::MatrixXd wz = ow_var_weights(ResidualPanel(Ez, 1, 2));
    CHECK(wz(0, 0) > 1.0 - 1e-9);
    CHECK(wz.row(0).sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Newbold-Granger weights") {
    Eigen::Matrix2d sigma;
    sigma << 1, 0.5, 0.5, 3;
    const Eigen::VectorXd w = ow_cov_weights(sigma);
    CHECK(w(0) == doctest::Approx(5.0 / 6).epsilon(1e-14));
    CHECK(w(1) == doctest::Approx(1.0 / 6).epsilon(1e-14));

    const Eigen::VectorXd wd = ow_cov_weights(Eigen::Vector2d(1, 3).asDiagonal().toDenseMatrix());
    CHECK(wd(0) == doctest::Approx(0.75).epsilon(1e-14));

    const Eigen::VectorXd wi = ow_cov_weights(Eigen::Matrix3d::Identity());
    CHECK((wi.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);

    // strongly correlated experts produce a negative weight, left unclipped
    Eigen::Matrix2d corr;
    corr << 1, 1.8, 1.8, 4;
    const Eigen::VectorXd wn = ow_cov_weights(corr);
    CHECK(wn(1) < 0.0);
    CHECK(wn.sum() == doctest::Approx(1.0).epsilon(1e-14));

    CHECK(kind_of([] { ow_cov_weights(Eigen::Matrix2d::Zero()); }) == ErrorKind::SingularSeriesCovariance);
}

TEST_CASE("sequential pipelines") {
    const ConstraintMatrix C = toy_C();
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    // p = 1 reduces to mint
    const ForecastBundle one = ForecastBundle::from_experts({Eigen::Vector3d(10, 6, 5)});
    CHECK(rel_inf(pipeline_src(one, {I}, C).y, mint_reconcile(Eigen::Vector3d(10, 6, 5), I, C).y) < 1e-14);
    // coherent experts: plain average
    const ForecastBundle coh = ForecastBundle::from_experts({Eigen::Vector3d(10, 6, 4), Eigen::Vector3d(12, 7, 5)});
    CHECK(rel_inf(pipeline_src(coh, {I, I}, C).y, Eigen::Vector3d(11, 6.5, 4.5)) < 1e-14);
    // identity metrics: reconcile-then-average == average-then-reconcile == occ
    const Eigen::Vector3d expected(65.0 / 6, 37.0 / 6, 28.0 / 6);
    CHECK(rel_inf(pipeline_src(toy_bundle(), {I, I}, C).y, expected) < 1e-12);
    const Eigen::MatrixXd ew = Eigen::MatrixXd::Constant(3, 2, 0.5);
    const CoherentForecast scr = pipeline_scr(toy_bundle(), ew, C, I, Method::scr_ew);
    CHECK(rel_inf(scr.y, expected) < 1e-12);
    CHECK(scr.method == Method::scr_ew);
    // already coherent combination: no-op
    CHECK(rel_inf(pipeline_scr(coh, ew, C, I, Method::scr_ew).y, Eigen::Vector3d(11, 6.5, 4.5)) < 1e-14);
    CHECK(rel_inf(pipeline_scr(one, Eigen::MatrixXd::Ones(3, 1), C, I, Method::scr_ew).y,
                  mint_reconcile(Eigen::Vector3d(10, 6, 5), I, C).y) < 1e-14);
}

TEST_CASE("property: occ agrees with the KKT oracle and the null-space oracle across W kinds") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> nu_d(1, 4), nb_d(2, 7), p_d(1, 4);
    for (int trial = 0; trial < 60; ++trial) {
        const int nu = nu_d(rng), nb = nb_d(rng), p = p_d(rng);
        const int n = nu + nb;
        const ConstraintMatrix C = testing::random_hierarchy_constraints(nu, nb, rng);
        const ForecastBundle bundle(testing::random_vector(n * p, rng, 20.0, 5.0), n, p);

        // expert-block W exercises the implicit-K path
        WMatrix Wb;
        Wb.W = Eigen::MatrixXd::Zero(n * p, n * p);
        for (int j = 0; j < p; ++j) Wb.W.block(j * n, j * n, n, n) = testing::random_spd(n, rng);
        Wb.kind = WKind::expert_block_shrunk;
        Wb.block_size = n;
        // diagonal W exercises the elementwise path
        WMatrix Wd;
        Wd.W = Eigen::MatrixXd(testing::random_spd(n * p, rng).diagonal().asDiagonal());
        Wd.kind = WKind::diagonal;
        Wd.block_size = n;
        const WMatrix Wg = general_W(testing::random_spd(n * p, rng));

        for (const WMatrix* W : std::initializer_list<const WMatrix*>{&Wb, &Wd, &Wg}) {
            const CoherentForecast f = occ_combine(bundle, *W, C);
            const Eigen::VectorXd kkt = qp_oracle_combine(bundle, W->W, C);
            const Eigen::VectorXd ns = testing::coherent_gls_by_nullspace(bundle.values(), W->W, C.matrix(), p);
            CHECK(rel_inf(f.y, kkt) <= 1e-9);
            CHECK(rel_inf(f.y, ns) <= 1e-9);
            CHECK(f.residual <= kCoherenceTol);
        }
        // the same block W routed through the dense path
        CHECK(rel_inf(occ_combine(bundle, Wb, C).y, occ_combine(bundle, general_W(Wb.W), C).y) <= 1e-10);
    }
}

TEST_CASE("property: mint_reconcile is an idempotent projection") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 40; ++trial) {
        const ConstraintMatrix C = testing::random_hierarchy_constraints(1 + trial % 4, 2 + trial % 6, rng);
        const Eigen::MatrixXd W = testing::random_spd(C.n(), rng);
        const Eigen::VectorXd y = testing::random_vector(C.n(), rng, 50.0, 10.0);
        const CoherentForecast once = mint_reconcile(y, W, C);
        const CoherentForecast twice = mint_reconcile(once.y, W, C);
        CHECK(once.residual <= kCoherenceTol);
        CHECK(rel_inf(twice.y, once.y) <= 1e-10);
    }
}

TEST_CASE("property: weights sum to one") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5, p = 2 + trial % 3;
        Eigen::MatrixXd E(30, n * p);
        for (int c = 0; c < n * p; ++c) E.col(c) = testing::random_vector(30, rng, 0.0, 1.0 + c % 3);
        const ResidualPanel panel(E, n, p);
        for (const Eigen::MatrixXd& w : {ow_var_weights(panel), ow_cov_weights(panel)}) {
            CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
        }
        CHECK((ow_var_weights(panel).array() >= 0.0).all());
    }
}

TEST_CASE("property: unbiased errors stay unbiased after coherent combination") {
    std::mt19937_64 rng(37);
    const ConstraintMatrix C = testing::random_hierarchy_constraints(3, 4, rng);
    const int n = C.n(), p = 3, R = 10000;
    const Eigen::MatrixXd W = testing::random_spd(n * p, rng);
    const Eigen::MatrixXd L = W.llt().matrixL();
    // coherent truth in the null space of C
    const Eigen::VectorXd y = testing::null_basis(C.matrix()) * testing::random_vector(n - 3, rng, 10.0, 2.0);
    const WMatrix Wm = general_W(W);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < R; ++r) {
        Eigen::VectorXd yhat = L * testing::random_vector(n * p, rng);
        for (int j = 0; j < p; ++j) yhat.segment(j * n, n) += y;
        const Eigen::VectorXd e = occ_combine(ForecastBundle(yhat, n, p), Wm, C).y - y;
        sum += e;
        sq += e.cwiseAbs2();
    }
    const Eigen::ArrayXd mean = sum.array() / R;
    const Eigen::ArrayXd se = ((sq.array() / R - mean.square()) * R / (R - 1.0) / R).sqrt();
    CHECK((mean.abs() / se).maxCoeff() < 4.0);
}
