#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eoli {

/// Failure categories raised by the library. Every thrown eoli::Error carries
/// one of these so callers (and tests) can branch on the category rather than
/// on message text.
enum class ErrorKind {
    // panel
    MalformedRow,
    DuplicateCell,
    UnknownIndicator,
    SchemaConflict,
    ZeroScale,
    EmptyDataset,
    EmptySelection,
    // regressors
    EmptyTrainingSet,
    DimensionMismatch,
    InvalidConfig,
    // imputation
    AllMissingColumn,
    SingularDesign,
    // benchmark
    UnknownColumn,
    FractionOutOfRange,
    LengthMismatch,
    EmptyInput,
    NonAscendingGrid,
    // reduction
    ZeroVariance,
    RankDeficient,
    SingularCorrelation,
    NonFiniteLoadings,
    // index
    DegenerateRange,
    WeightSum,
    EmptyIntersection,
    UnknownYear,
    InsufficientOverlap,
    TooFewCountries,
    // cli
    ParseError,
    UnknownKey,
    InvalidValue,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace eoli
