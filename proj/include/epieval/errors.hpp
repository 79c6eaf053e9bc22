#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace epieval {

/// Failure categories raised across the library. Each maps to one named
/// error condition of a public operation; tests match on the code.
enum class ErrorCode {
    // curve construction / alignment
    NonContiguousWeeks,
    NegativeCount,
    TooShort,
    EmptyOverlap,
    // feature extraction
    EmptySeries,
    SeriesTooShort,
    DegeneratePeakAtStart,
    ZeroPopulation,
    MissingGroupPopulation,
    ZeroContacts,
    MissingDenominator,
    NoNonInfluenzaWeeks,
    FeatureAbsent,
    // error measures
    DivisionByZero,
    LengthMismatch,
    MissingRun,
    // ranking
    NonFiniteValue,
    EmptyMatrix,
    NoCommonPredictionTimes,
    NegativeMape,
    // stochastic evaluation
    ZeroRwError,
    ZeroRwCumulative,
    InvalidSpec,
    ClosedFormUnavailable,
    ZeroDenominator,
    // synthetic data generation
    InvalidConfig,
    InvalidRange,
    // ingestion / reporting
    ParseError,
    MixedForecastKinds,
    ConfigError,
    IoError,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonContiguousWeeks: return "NonContiguousWeeks";
        case ErrorCode::NegativeCount: return "NegativeCount";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::EmptyOverlap: return "EmptyOverlap";
        case ErrorCode::EmptySeries: return "EmptySeries";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::DegeneratePeakAtStart: return "DegeneratePeakAtStart";
        case ErrorCode::ZeroPopulation: return "ZeroPopulation";
        case ErrorCode::MissingGroupPopulation: return "MissingGroupPopulation";
        case ErrorCode::ZeroContacts: return "ZeroContacts";
        case ErrorCode::MissingDenominator: return "MissingDenominator";
        case ErrorCode::NoNonInfluenzaWeeks: return "NoNonInfluenzaWeeks";
        case ErrorCode::FeatureAbsent: return "FeatureAbsent";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::MissingRun: return "MissingRun";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::NoCommonPredictionTimes: return "NoCommonPredictionTimes";
        case ErrorCode::NegativeMape: return "NegativeMape";
        case ErrorCode::ZeroRwError: return "ZeroRwError";
        case ErrorCode::ZeroRwCumulative: return "ZeroRwCumulative";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::ClosedFormUnavailable: return "ClosedFormUnavailable";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidRange: return "InvalidRange";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MixedForecastKinds: return "MixedForecastKinds";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace epieval
