#include "doctest.h"

#include "occ/baseforecast.hpp"
#include "occ/error.hpp"

#include <cmath>
#include <vector>

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

const ExpertModel snaive{ModelKind::seasonal_naive};
const ExpertModel mean_model{ModelKind::mean};
const ExpertModel drift{ModelKind::drift};

}  // namespace

TEST_CASE("point forecasts") {
    std::vector<double> week;
    for (int k = 0; k < 14; ++k) week.push_back(k < 7 ? 50.0 : k - 6.0);  // last week 1..7
    CHECK(forecast_base(snaive, week, 7, 3) == Eigen::Vector3d(1, 2, 3));
    CHECK(forecast_base(snaive, week, 7, 9).tail(2) == Eigen::Vector2d(1, 2));

    const std::vector<double> m{2, 4, 6};
    CHECK(forecast_base(mean_model, m, 7, 2) == Eigen::Vector2d(4, 4));

    std::vector<double> line;
    for (int k = 1; k <= 10; ++k) line.push_back(k);
    CHECK((forecast_base(drift, line, 7, 2) - Eigen::Vector2d(11, 12)).cwiseAbs().maxCoeff() < 1e-12);

    // ses from level y_0: 10 -> 0.5 * 20 + 0.5 * 10 = 15
    ExpertModel ses{ModelKind::ses, 0.5};
    CHECK(forecast_base(ses, std::vector<double>{10, 20}, 7, 2) == Eigen::Vector2d(15, 15));

    SeriesData s{"x", m, 7};
    CHECK(forecast_base(mean_model, s, 1)(0) == 4.0);
}

TEST_CASE("one-step residuals") {
    std::vector<double> periodic;
    for (int k = 0; k < 30; ++k) periodic.push_back(std::sin(k * 0.7) + (k % 7));
    std::vector<double> rep(periodic.begin(), periodic.begin() + 7);
    for (int k = 7; k < 30; ++k) rep.push_back(rep[static_cast<std::size_t>(k - 7)]);
    const Eigen::VectorXd r = insample_residuals(snaive, rep, 7);
    CHECK(r.size() == 23);
    CHECK(r.cwiseAbs().maxCoeff() == 0.0);

    CHECK(insample_residuals(mean_model, std::vector<double>{2, 4, 6}, 7) == Eigen::Vector2d(2, 3));

    std::vector<double> line;
    for (int k = 0; k < 8; ++k) line.push_back(3.0 + 2.0 * k);
    CHECK(insample_residuals(drift, line, 7).cwiseAbs().maxCoeff() < 1e-12);

    // explicit start trims the leading residuals
    CHECK(insample_residuals(mean_model, std::vector<double>{2, 4, 6}, 7, 2) == Eigen::VectorXd::Constant(1, 3.0));
}

TEST_CASE("short series and bad model strings") {
    CHECK(kind_of([] { forecast_base(snaive, std::vector<double>(7, 1.0), 7, 1); }) == ErrorKind::SeriesTooShort);
    CHECK(kind_of([] { insample_residuals(snaive, std::vector<double>(7, 1.0), 7); }) == ErrorKind::SeriesTooShort);
    CHECK(kind_of([] { forecast_base(drift, std::vector<double>{1, 2}, 7, 1); }) == ErrorKind::SeriesTooShort);
    CHECK_NOTHROW(forecast_base(snaive, std::vector<double>(8, 1.0), 7, 1));
    CHECK(kind_of([] { insample_residuals(snaive, std::vector<double>(20, 1.0), 7, 3); }) == ErrorKind::SeriesTooShort);

    CHECK(ExpertModel::parse("snaive").kind == ModelKind::seasonal_naive);
    CHECK(ExpertModel::parse("seasonal_naive").name() == "snaive");
    CHECK(ExpertModel::parse("ses:0.5").alpha == 0.5);
    CHECK(ExpertModel::parse("ses:0.5").name() == "ses:0.5");
    CHECK(ExpertModel::parse("ses").name() == "ses");
    CHECK(kind_of([] { ExpertModel::parse("arima"); }) == ErrorKind::Config);
    CHECK(kind_of([] { ExpertModel::parse("ses:1.5"); }) == ErrorKind::Config);
    CHECK(kind_of([] { ExpertModel::parse("mean:3"); }) == ErrorKind::Config);
}

TEST_CASE("residual panel is rectangular and expert-major") {
    const int T = 40, n = 3;
    Eigen::MatrixXd hist(T, n);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) hist(t, i) = 10.0 * (i + 1) + (t % 7) + 0.1 * t * i;
    const std::vector<ExpertModel> experts{snaive, mean_model, drift};
    const ResidualPanel panel = build_residual_panel(experts, hist, 7);
    CHECK(panel.n() == n);
    CHECK(panel.p() == 3);
    CHECK(panel.rows() == T - 7);
    CHECK(panel.residuals().allFinite());
    for (int i = 0; i < n; ++i) {
        std::vector<double> col(hist.col(i).data(), hist.col(i).data() + T);
        CHECK(panel.residuals().col(1 * n + i) == insample_residuals(mean_model, col, 7, 7));
        CHECK(panel.residuals().col(2 * n + i) == insample_residuals(drift, col, 7, 7));
    }
    CHECK(kind_of([&] { build_residual_panel(experts, hist.topRows(8), 7); }) == ErrorKind::TooFewObservations);
}
