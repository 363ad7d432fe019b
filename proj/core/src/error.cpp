#include "eoli/error.hpp"

#include <fmt/core.h>

namespace eoli {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::UnknownIndicator: return "UnknownIndicator";
    case ErrorKind::SchemaConflict: return "SchemaConflict";
    case ErrorKind::ZeroScale: return "ZeroScale";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::AllMissingColumn: return "AllMissingColumn";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NonAscendingGrid: return "NonAscendingGrid";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularCorrelation: return "SingularCorrelation";
    case ErrorKind::NonFiniteLoadings: return "NonFiniteLoadings";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::WeightSum: return "WeightSum";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::UnknownYear: return "UnknownYear";
    case ErrorKind::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorKind::TooFewCountries: return "TooFewCountries";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)), kind_{kind} {}

} // namespace eoli
