#include "maser/error.hpp"

namespace maser {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::HeightOutOfRange: return "HeightOutOfRange";
    case ErrorKind::FrequencyUnreachable: return "FrequencyUnreachable";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::NoResonanceFound: return "NoResonanceFound";
    case ErrorKind::BandwidthOutsideSpan: return "BandwidthOutsideSpan";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::NonPhysicalState: return "NonPhysicalState";
    case ErrorKind::UndersampledCarrier: return "UndersampledCarrier";
    case ErrorKind::NoBurst: return "NoBurst";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::InsufficientCycles: return "InsufficientCycles";
    case ErrorKind::OrderTooLarge: return "OrderTooLarge";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case ErrorKind::NoPeaks: return "NoPeaks";
    case ErrorKind::NoSplitting: return "NoSplitting";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::NotFound: return "NotFound";
    }
    return "Unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::IntegrationFailure:
    case ErrorKind::NonPhysicalState:
    case ErrorKind::NoBurst:
    case ErrorKind::InsufficientCycles:
    case ErrorKind::NoPeaks:
    case ErrorKind::NoSplitting:
    case ErrorKind::NoResonanceFound:
    case ErrorKind::BandwidthOutsideSpan:
        return true;
    default:
        return false;
    }
}

}  // namespace maser
