#include "occ/error.hpp"

namespace occ {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::DuplicateSeriesId: return "DuplicateSeriesId";
        case ErrorKind::InconsistentPartition: return "InconsistentPartition";
        case ErrorKind::MissingBottomValue: return "MissingBottomValue";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::TooFewObservations: return "TooFewObservations";
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::SingularAfterConditioning: return "SingularAfterConditioning";
        case ErrorKind::SingularW: return "SingularW";
        case ErrorKind::RankDeficientConstraints: return "RankDeficientConstraints";
        case ErrorKind::SingularKKT: return "SingularKKT";
        case ErrorKind::SingularProjection: return "SingularProjection";
        case ErrorKind::DegeneratePanel: return "DegeneratePanel";
        case ErrorKind::SingularSeriesCovariance: return "SingularSeriesCovariance";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::UnbalancedBundle: return "UnbalancedBundle";
        case ErrorKind::UnknownSeriesId: return "UnknownSeriesId";
        case ErrorKind::EmptyTestSet: return "EmptyTestSet";
        case ErrorKind::MissingForecast: return "MissingForecast";
        case ErrorKind::ZeroBenchmark: return "ZeroBenchmark";
        case ErrorKind::NonContiguousDates: return "NonContiguousDates";
        case ErrorKind::DuplicateRow: return "DuplicateRow";
        case ErrorKind::NonNumericValue: return "NonNumericValue";
        case ErrorKind::MissingSeries: return "MissingSeries";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Config: return "ConfigError";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Io: return 3;
        case ErrorKind::ParseError:
        case ErrorKind::NonContiguousDates:
        case ErrorKind::DuplicateRow:
        case ErrorKind::NonNumericValue:
        case ErrorKind::MissingSeries:
        case ErrorKind::UnknownSeriesId:
        case ErrorKind::UnbalancedBundle: return 4;
        case ErrorKind::DuplicateSeriesId:
        case ErrorKind::InconsistentPartition:
        case ErrorKind::MissingBottomValue: return 5;
        case ErrorKind::EmptyTestSet:
        case ErrorKind::MissingForecast:
        case ErrorKind::ZeroBenchmark:
        case ErrorKind::SeriesTooShort: return 6;
        default: return 7;  // numerical failures
    }
}

}  // namespace occ
