#pragma once

#include <optional>
#include <string>

#include "maser/dynamics.hpp"
#include "maser/mem_spectral.hpp"
#include "maser/pulse_metrics.hpp"

namespace maser {

struct AnalysisOptions {
    DemodOptions demod;
    MetricOptions metrics;
    double spectrum_half_span_hz = 5e6;
    std::size_t spectrum_points = 4001;
    double spectrum_region_fraction = 0.05;  // share of the envelope max bounding the fit window
    double prominence_fraction = 0.05;
    /// Fixed AR order; 0 selects the order by FPE up to the default maximum.
    /// FPE flattens out on nearly noiseless bursts and its argmin wanders, so
    /// a fixed order is the default.
    std::size_t ar_order = 10;
};

struct TraceAnalysis {
    PulseMetrics metrics;
    Demodulated envelope;
    std::optional<PowerSpectrum> spectrum;
    std::optional<double> rabi_splitting_hz;
    std::size_t ar_order = 0;
    bool burst = false;
};

/// MEM spectrum of a complex envelope restricted to its burst region,
/// reported on absolute frequencies around f_ref.
PowerSpectrum envelope_spectrum(const Demodulated& env, const AnalysisOptions& opts,
                                std::size_t* order_used = nullptr);

/// Physical complex envelope of a simulation in volts, referenced to f_spin.
Demodulated baseband_of(const MaserEnvelope& env, double load_ohms = kScopeLoadOhms);

/// Full passband pipeline: peak power, demodulation at the trace's carrier
/// hint, delay, Rabi frequency and MEM carrier estimate.
TraceAnalysis analyze_trace(const MaserTrace& trace, const AnalysisOptions& opts = {});

}  // namespace maser
