#pragma once

#include <stdexcept>
#include <string>

namespace occ {

enum class ErrorKind {
    // hierarchy
    DuplicateSeriesId,
    InconsistentPartition,
    MissingBottomValue,
    // shapes
    DimensionMismatch,
    // covariance
    TooFewObservations,
    NotSymmetric,
    SingularAfterConditioning,
    // combiner
    SingularW,
    RankDeficientConstraints,
    SingularKKT,
    SingularProjection,
    DegeneratePanel,
    SingularSeriesCovariance,
    // baseforecast
    SeriesTooShort,
    UnbalancedBundle,
    UnknownSeriesId,
    // evaluation
    EmptyTestSet,
    MissingForecast,
    ZeroBenchmark,
    // ingestion
    NonContiguousDates,
    DuplicateRow,
    NonNumericValue,
    MissingSeries,
    ParseError,
    Io,
    Config,
};

/// Stable machine-readable name, e.g. "InconsistentPartition".
const char* to_string(ErrorKind kind) noexcept;

/// Process exit code the CLI uses for this error class. Never 0.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace occ
