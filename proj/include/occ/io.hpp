#pragma once

#include "occ/baseforecast.hpp"
#include "occ/covariance.hpp"
#include "occ/evaluation.hpp"
#include "occ/hierarchy.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace occ {

// Hierarchy spec JSON:
//   {"top": "T", "bottoms": [...],
//    "groupings": [{"name": "zones", "aggregates": {"Z1": ["Z1_S1", ...]}}]}
// Aggregates keep their order of appearance in the file.
GroupedHierarchySpec parse_hierarchy_json(const std::string& text);
GroupedHierarchySpec load_hierarchy_json(const std::filesystem::path& path);
std::string hierarchy_to_json(const GroupedHierarchySpec& spec);

/// Days since 1970-01-01 of a strict YYYY-MM-DD date; throws ParseError.
int parse_iso_date(const std::string& text);
std::string format_iso_date(int days);

/// Daily series read from `date,series_id,value` rows, aligned on a common
/// contiguous date range. Missing days are filled with the previous value.
struct DatasetTable {
    std::vector<std::string> dates;
    std::map<std::string, SeriesData> series;
    std::map<std::string, int> gap_counts;  // filled days per series
};

/// Throws DuplicateRow, NonNumericValue, ParseError, or NonContiguousDates when a
/// run of missing days exceeds `gap_cap` (or a series starts late).
DatasetTable parse_dataset_csv(std::istream& in, int gap_cap = 3, int period = 7);
DatasetTable load_dataset_csv(const std::filesystem::path& path, int gap_cap = 3, int period = 7);

/// Columns in hierarchy order. Throws UnknownSeriesId / MissingSeries.
Dataset align_to_hierarchy(const DatasetTable& table, const ConstraintMatrix& C);

/// Forecast bundle CSV `origin_date,horizon,expert_id,series_id,value`.
/// Experts are stacked in order of first appearance. Throws UnbalancedBundle
/// when an (expert, series) cell is missing and UnknownSeriesId for series
/// outside the hierarchy.
ImportedForecasts parse_forecast_bundle(std::istream& in, const ConstraintMatrix& index);
ImportedForecasts import_forecast_bundle(const std::filesystem::path& path, const ConstraintMatrix& index);

/// Long report `approach,series,horizon,metric,value`: MAE and MSE per series
/// and horizon, then summary rows with series "*" (Q, AR-MAE, AR-MSE per table
/// column, failures, max_residual).
void write_report_csv(std::ostream& out, const EvalReport& report);

/// `approach,origin,horizon,residual`.
void write_coherence_csv(std::ostream& out, const EvalReport& report);

/// Residual panel dump with `expert:series` column headers.
void write_residual_panel_csv(std::ostream& out, const ResidualPanel& panel,
                              const std::vector<std::string>& experts, const std::vector<std::string>& series);

/// AR-MAE / AR-MSE comparison table (approaches x horizon columns).
struct ArTable {
    std::string benchmark;
    std::vector<std::string> columns;  // "1", "2", ..., "1:H"
    std::vector<std::string> approaches;
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> values;  // (approach, col) -> (mae, mse)
    std::map<std::string, int> failures;
    std::map<std::string, double> max_residual;
};

ArTable make_ar_table(const EvalReport& report);
/// Rebuilds the table from a report CSV written by write_report_csv.
ArTable parse_report_csv(std::istream& in);
std::string format_ar_table(const ArTable& table);

}  // namespace occ
