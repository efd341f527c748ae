#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "maser/dynamics.hpp"

namespace maser {

struct PulseMetrics {
    double v_peak_v = 0.0;
    double p_peak_mw = 0.0;
    std::optional<double> p_peak_dbm;  // absent for an all-zero trace
    std::optional<double> delay_to_peak_s;
    std::optional<double> rabi_freq_td_hz;
    std::optional<double> carrier_est_hz;
};

struct PeakPower {
    double v_peak = 0.0;
    double p_mw = 0.0;
    std::optional<double> p_dbm;
};

/// P = V^2 / R with V the peak voltage.
PeakPower peak_power(double v_peak, double load_ohms);
PeakPower peak_power(const MaserTrace& trace);

double mw_to_dbm(double p_mw);
double dbm_to_mw(double p_dbm);

struct MetricOptions {
    double first_peak_fraction = 0.8;
    double noise_floor_factor = 5.0;  // burst needs max > factor * median
    double maxima_fraction = 0.1;     // maxima below this share of the max are ignored
    double min_prominence = 1e-3;     // relative to the max
};

/// Uniformly sampled real amplitude |a(t)|.
struct AmplitudeSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> amp;
};

AmplitudeSeries amplitude_of(const MaserEnvelope& env);

/// Throws NoBurst unless the maximum clears the median-based noise floor.
void require_burst(const AmplitudeSeries& s, const MetricOptions& opts = {});

double delay_to_peak(const AmplitudeSeries& s, double trigger_time = 0.0,
                     const MetricOptions& opts = {});
double delay_to_peak(const MaserEnvelope& env, double trigger_time = 0.0,
                     const MetricOptions& opts = {});

/// Times of envelope maxima (parabolically refined) that pass the amplitude
/// and prominence filters.
std::vector<double> envelope_maxima(const AmplitudeSeries& s, const MetricOptions& opts = {});

/// Mean spacing of successive maxima, inverted. Throws InsufficientCycles.
double rabi_frequency_td(const AmplitudeSeries& s, const MetricOptions& opts = {});
double rabi_frequency_td(const MaserEnvelope& env, const MetricOptions& opts = {});

/// Secondary estimate: first non-zero-lag maximum of the mean-removed
/// autocorrelation over the burst region. Throws InsufficientCycles.
double rabi_frequency_autocorr(const AmplitudeSeries& s, const MetricOptions& opts = {});

/// Number of maxima before the envelope first drops below 10% of its peak
/// for good, counted from the first maximum.
int completed_cycles(const AmplitudeSeries& s, const MetricOptions& opts = {});

struct DemodOptions {
    double cutoff_hz = 25e6;
    double output_dt_s = 10e-9;
    double transition_hz = 25e6;
};

/// Complex envelope A(t) with v(t) = Re(A(t) exp(2 pi i f_ref t)).
struct Demodulated {
    double t0 = 0.0;
    double dt = 0.0;
    double f_ref = 0.0;
    std::vector<std::complex<double>> a;

    AmplitudeSeries amplitude() const;
};

/// Quadrature demodulation with a linear-phase windowed-sinc low-pass whose
/// group delay is removed by centred convolution. Throws UndersampledCarrier.
Demodulated demodulate(const MaserTrace& trace, double f_ref, const DemodOptions& opts = {});

}  // namespace maser
