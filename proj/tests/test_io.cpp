#include "doctest.h"

#include "occ/error.hpp"
#include "occ/io.hpp"
#include "fixtures.hpp"

#include <sstream>

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

std::string daily_csv(const std::vector<std::string>& ids, int days, const std::vector<std::pair<std::string, int>>& skip = {}) {
    std::ostringstream os;
    os << "date,series_id,value\n";
    const int start = parse_iso_date("2023-01-01");
    for (int d = 0; d < days; ++d) {
        for (std::size_t s = 0; s < ids.size(); ++s) {
            bool skipped = false;
            for (const auto& [id, day] : skip) skipped |= (id == ids[s] && day == d);
            if (!skipped) os << format_iso_date(start + d) << ',' << ids[s] << ',' << d + 100 * s << '\n';
        }
    }
    return os.str();
}

}  // namespace

TEST_CASE("hierarchy json round trip") {
    const auto spec = make_grid_hierarchy({"N", "S"}, {"Hydro", "Solar"});
    const std::string text = hierarchy_to_json(spec);
    const auto back = parse_hierarchy_json(text);
    CHECK(back.top_id == spec.top_id);
    CHECK(back.bottom_ids == spec.bottom_ids);
    REQUIRE(back.groupings.size() == 2);
    CHECK(back.groupings[0].aggregates == spec.groupings[0].aggregates);
    CHECK(build_constraint_matrix(back).matrix() == build_constraint_matrix(spec).matrix());
    CHECK(hierarchy_to_json(back) == text);

    CHECK(kind_of([] { parse_hierarchy_json("{"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_hierarchy_json(R"({"top":"T"})"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] {
              parse_hierarchy_json(R"({"top":"T","bottoms":["a","b"],"groupings":[{"name":"g","aggregates":{"X":["a"]}}]})");
          }) == ErrorKind::InconsistentPartition);
    CHECK(kind_of([] { load_hierarchy_json("/nonexistent/h.json"); }) == ErrorKind::Io);
}

TEST_CASE("iso dates") {
    CHECK(format_iso_date(parse_iso_date("2023-12-31")) == "2023-12-31");
    CHECK(parse_iso_date("2024-03-01") - parse_iso_date("2024-02-28") == 2);
    CHECK(kind_of([] { parse_iso_date("2023-02-30"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_iso_date("2023/01/01"); }) == ErrorKind::ParseError);
}

TEST_CASE("dataset csv") {
    std::istringstream full(daily_csv({"a", "b", "c"}, 365));
    const DatasetTable t = parse_dataset_csv(full);
    CHECK(t.dates.size() == 365);
    CHECK(t.series.size() == 3);
    CHECK(t.series.at("b").values.size() == 365);
    CHECK(t.series.at("b").values[10] == 110.0);
    CHECK(t.gap_counts.at("a") == 0);

    std::istringstream one_gap(daily_csv({"a", "b"}, 20, {{"a", 5}}));
    const DatasetTable g = parse_dataset_csv(one_gap);
    CHECK(g.gap_counts.at("a") == 1);
    CHECK(g.series.at("a").values[5] == 4.0);

    std::vector<std::pair<std::string, int>> five;
    for (int d = 5; d < 10; ++d) five.push_back({"a", d});
    std::istringstream long_gap(daily_csv({"a", "b"}, 20, five));
    CHECK(kind_of([&] { parse_dataset_csv(long_gap); }) == ErrorKind::NonContiguousDates);
    std::istringstream late(daily_csv({"a", "b"}, 20, {{"a", 0}}));
    CHECK(kind_of([&] { parse_dataset_csv(late); }) == ErrorKind::NonContiguousDates);

    std::istringstream dup("date,series_id,value\n2023-01-01,a,1\n2023-01-01,a,2\n");
    CHECK(kind_of([&] { parse_dataset_csv(dup); }) == ErrorKind::DuplicateRow);
    std::istringstream nonnum("date,series_id,value\n2023-01-01,a,abc\n");
    CHECK(kind_of([&] { parse_dataset_csv(nonnum); }) == ErrorKind::NonNumericValue);
    std::istringstream header("day,series,value\n");
    CHECK(kind_of([&] { parse_dataset_csv(header); }) == ErrorKind::ParseError);
}

TEST_CASE("alignment to the hierarchy") {
    const auto C = build_constraint_matrix(make_grid_hierarchy({"N"}, {"x", "y"}));
    std::istringstream in(daily_csv({"N_x", "N_y", "Total", "N", "x", "y"}, 10));
    const Dataset d = align_to_hierarchy(parse_dataset_csv(in), C);
    CHECK(d.series_ids == C.ids());
    CHECK(d.values.rows() == 10);
    CHECK(d.values(0, C.column("x")) == 400.0);

    std::istringstream extra(daily_csv({"N_x", "N_y", "Total", "N", "x", "y", "z"}, 5));
    CHECK(kind_of([&] { align_to_hierarchy(parse_dataset_csv(extra), C); }) == ErrorKind::UnknownSeriesId);
    std::istringstream missing(daily_csv({"N_x", "N_y", "Total", "N", "x"}, 5));
    CHECK(kind_of([&] { align_to_hierarchy(parse_dataset_csv(missing), C); }) == ErrorKind::MissingSeries);
}

TEST_CASE("forecast bundle import") {
    std::vector<std::string> ids;
    for (int i = 0; i < 76; ++i) ids.push_back("s" + std::to_string(i));
    const ConstraintMatrix index = ConstraintMatrix::unconstrained(ids);
    auto bundle = [&](int skip_series) {
        std::ostringstream os;
        os << "origin_date,horizon,expert_id,series_id,value\n";
        for (const char* e : {"stlf", "arima", "tbats"})
            for (int i = 0; i < 76; ++i)
                if (!(i == skip_series && std::string(e) == "tbats"))
                    os << "2023-05-21,1," << e << ",s" << i << ',' << i << '\n';
        return os.str();
    };
    std::istringstream ok(bundle(-1));
    const ImportedForecasts f = parse_forecast_bundle(ok, index);
    CHECK(f.experts == std::vector<std::string>{"stlf", "arima", "tbats"});
    REQUIRE(f.bundles.size() == 1);
    const ForecastBundle& b = f.bundles.at({"2023-05-21", 1});
    CHECK(b.m() == 228);
    CHECK(b.at(2, 75) == 75.0);

    std::istringstream hole(bundle(10));
    CHECK(kind_of([&] { parse_forecast_bundle(hole, index); }) == ErrorKind::UnbalancedBundle);
    std::istringstream stranger("origin_date,horizon,expert_id,series_id,value\n2023-05-21,1,e,zz,1\n");
    CHECK(kind_of([&] { parse_forecast_bundle(stranger, index); }) == ErrorKind::UnknownSeriesId);
}

TEST_CASE("report csv and table") {
    const auto g = testing::synthetic_grid(2, 2, 40, 3);
    ExperimentConfig cfg;
    cfg.experts = {ExpertModel::parse("snaive"), ExpertModel::parse("mean")};
    cfg.approaches = {"ew", "ow_var", "occ_be"};
    const EvalReport r = run_experiment(g.data, g.C, rolling_origin_plan(40, 25, 3), cfg);

    std::ostringstream csv;
    write_report_csv(csv, r);
    std::istringstream back(csv.str());
    const ArTable t = parse_report_csv(back);
    CHECK(t.benchmark == "ew");
    CHECK(t.approaches == std::vector<std::string>{"ew", "ow_var", "occ_be"});
    CHECK(t.columns == std::vector<std::string>{"1", "2", "3", "1:3"});
    for (const auto& c : t.columns) {
        CHECK(t.values.at({"ew", c}).first == 1.0);
        CHECK(t.values.at({"ew", c}).second == 1.0);
    }
    CHECK(t.max_residual.at("occ_be") <= 1e-8);

    const std::string text = format_ar_table(t);
    CHECK(text.find("occ_be") != std::string::npos);
    CHECK(text == format_ar_table(make_ar_table(r)));

    std::ostringstream audit;
    write_coherence_csv(audit, r);
    CHECK(audit.str().rfind("approach,origin,horizon,residual\n", 0) == 0);
}
