#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maser {

enum class ErrorKind {
    // resonator
    HeightOutOfRange,
    FrequencyUnreachable,
    InvalidGrid,
    NoResonanceFound,
    BandwidthOutsideSpan,
    // dynamics
    IntegrationFailure,
    NonPhysicalState,
    UndersampledCarrier,
    NoBurst,
    // pulse metrics
    EmptyTrace,
    InsufficientCycles,
    // mem spectral
    OrderTooLarge,
    NonFiniteInput,
    FrequencyOutOfRange,
    NoPeaks,
    NoSplitting,
    // plumbing
    InvalidArgument,
    ParseError,
    IoFailure,
    NotFound,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for failures caused by the numerics rather than by bad input.
bool is_numerical(ErrorKind kind) noexcept;

class MaserError : public std::runtime_error {
public:
    MaserError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw MaserError(kind, what);
}

}  // namespace maser
