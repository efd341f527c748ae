#pragma once

namespace maser {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// CODATA exact values
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s

// Pentacene:p-terphenyl zero-field triplet transition used as the maser line.
inline constexpr double kSpinTransitionHz = 1.4495e9;

// Carrier measured on the on-resonance shot.
inline constexpr double kMeasuredCarrierHz = 1.44969e9;

// -3 dB edges read off the reference S11 polar plot.
inline constexpr double kReferenceF1Hz = 1.44915e9;
inline constexpr double kReferenceF2Hz = 1.44986e9;
inline constexpr double kReferenceLoadedQ = 2042.0;

// Cavity geometry limits (mm).
inline constexpr double kCeilingMinMm = 4.5;
inline constexpr double kCeilingMaxMm = 20.0;

// Pump laser.
inline constexpr double kPumpWavelengthM = 532e-9;
inline constexpr double kPumpDurationS = 6e-9;
inline constexpr double kMeasuredPumpEnergyJ = 30e-3;
inline constexpr double kThresholdPumpEnergyJ = 7e-3;
inline constexpr double kMinRepRateHz = 0.5;
inline constexpr double kMaxRepRateHz = 10.0;

inline constexpr double kScopeLoadOhms = 50.0;

}  // namespace maser
