#include "maser/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "maser/error.hpp"

namespace maser {

PowerSpectrum envelope_spectrum(const Demodulated& env, const AnalysisOptions& opts,
                                std::size_t* order_used) {
    if (env.a.size() < 4) fail(ErrorKind::EmptyTrace, "envelope too short for a spectrum");
    double mx = 0.0;
    for (const auto& v : env.a) mx = std::max(mx, std::abs(v));
    const double level = opts.spectrum_region_fraction * mx;
    std::size_t first = 0;
    while (first < env.a.size() && std::abs(env.a[first]) < level) ++first;
    std::size_t last = env.a.size() - 1;
    while (last > first && std::abs(env.a[last]) < level) --last;
    if (last - first + 1 < 8) {
        first = 0;
        last = env.a.size() - 1;
    }
    const std::vector<std::complex<double>> x(env.a.begin() + static_cast<std::ptrdiff_t>(first),
                                              env.a.begin() + static_cast<std::ptrdiff_t>(last + 1));
    const std::size_t order = opts.ar_order > 0 ? opts.ar_order : select_order(x);
    if (order_used) *order_used = order;
    const ArModel model = burg_fit(x, order, env.dt);
    const double half = std::min(opts.spectrum_half_span_hz, 0.5 / env.dt);
    PsdOptions po;
    po.normalize = true;
    po.prominence_fraction = opts.prominence_fraction;
    po.offset_hz = env.f_ref;
    return mem_psd(model, linear_grid(-half, half, opts.spectrum_points), po);
}

Demodulated baseband_of(const MaserEnvelope& env, double load_ohms) {
    if (env.size() < 2) fail(ErrorKind::EmptyTrace, "envelope needs at least 2 samples");
    Demodulated out;
    out.t0 = env.t.front();
    out.dt = env.dt();
    out.f_ref = env.f_spin;
    out.a.resize(env.size());
    for (std::size_t k = 0; k < env.size(); ++k) {
        const double mag = std::abs(env.a[k]);
        const double v = std::sqrt(env.p_out[k] * load_ohms);
        out.a[k] = mag > 0.0 ? std::conj(env.a[k]) * (v / mag) : std::complex<double>(0.0);
    }
    return out;
}

TraceAnalysis analyze_trace(const MaserTrace& trace, const AnalysisOptions& opts) {
    TraceAnalysis out;
    const PeakPower pp = peak_power(trace);
    out.metrics.v_peak_v = pp.v_peak;
    out.metrics.p_peak_mw = pp.p_mw;
    out.metrics.p_peak_dbm = pp.p_dbm;

    out.envelope = demodulate(trace, trace.carrier_hint_hz, opts.demod);
    const AmplitudeSeries amp = out.envelope.amplitude();
    try {
        require_burst(amp, opts.metrics);
        out.burst = true;
    } catch (const MaserError& e) {
        if (e.kind() != ErrorKind::NoBurst) throw;
        return out;
    }
    out.metrics.delay_to_peak_s = delay_to_peak(amp, 0.0, opts.metrics);
    try {
        out.metrics.rabi_freq_td_hz = rabi_frequency_td(amp, opts.metrics);
    } catch (const MaserError& e) {
        if (e.kind() != ErrorKind::InsufficientCycles) throw;
    }
    out.spectrum = envelope_spectrum(out.envelope, opts, &out.ar_order);
    try {
        out.metrics.carrier_est_hz = carrier_frequency(*out.spectrum);
    } catch (const MaserError& e) {
        if (e.kind() != ErrorKind::NoPeaks) throw;
    }
    try {
        out.rabi_splitting_hz = rabi_splitting(*out.spectrum);
    } catch (const MaserError& e) {
        if (e.kind() != ErrorKind::NoSplitting) throw;
    }
    return out;
}

}  // namespace maser
