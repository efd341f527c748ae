#include "maser/pulse_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maser/error.hpp"
#include "maser/peaks.hpp"

namespace maser {

namespace {

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

double peak_time(const AmplitudeSeries& s, const PeakIndex& p) {
    return s.t0 + (static_cast<double>(p.index) + p.offset) * s.dt;
}

// [first, last] sample indices at or above frac * max.
std::pair<std::size_t, std::size_t> region_above(const std::vector<double>& amp, double level) {
    std::size_t first = 0;
    while (first < amp.size() && amp[first] < level) ++first;
    std::size_t last = amp.size() - 1;
    while (last > first && amp[last] < level) --last;
    return {first, last};
}

}  // namespace

PeakPower peak_power(double v_peak, double load_ohms) {
    if (!(load_ohms > 0.0)) fail(ErrorKind::InvalidArgument, "load resistance must be > 0");
    PeakPower p;
    p.v_peak = std::abs(v_peak);
    p.p_mw = p.v_peak * p.v_peak / load_ohms * 1000.0;
    if (p.p_mw > 0.0) p.p_dbm = mw_to_dbm(p.p_mw);
    return p;
}

PeakPower peak_power(const MaserTrace& trace) {
    if (trace.v.empty()) fail(ErrorKind::EmptyTrace, "trace has no samples");
    double vmax = 0.0;
    for (double v : trace.v) vmax = std::max(vmax, std::abs(v));
    return peak_power(vmax, trace.load_ohms);
}

double mw_to_dbm(double p_mw) { return 10.0 * std::log10(p_mw); }

double dbm_to_mw(double p_dbm) { return std::pow(10.0, p_dbm / 10.0); }

AmplitudeSeries amplitude_of(const MaserEnvelope& env) {
    if (env.size() < 2) fail(ErrorKind::EmptyTrace, "envelope needs at least 2 samples");
    AmplitudeSeries s;
    s.t0 = env.t.front();
    s.dt = env.dt();
    s.amp.resize(env.size());
    for (std::size_t i = 0; i < env.size(); ++i) s.amp[i] = std::abs(env.a[i]);
    return s;
}

void require_burst(const AmplitudeSeries& s, const MetricOptions& opts) {
    if (s.amp.empty()) fail(ErrorKind::EmptyTrace, "no samples");
    const double mx = max_of(s.amp);
    const double med = median(s.amp);
    if (!(mx > 0.0) || !(mx > opts.noise_floor_factor * med)) {
        fail(ErrorKind::NoBurst, "envelope maximum does not clear the noise floor");
    }
}

double delay_to_peak(const AmplitudeSeries& s, double trigger_time, const MetricOptions& opts) {
    require_burst(s, opts);
    const double mx = max_of(s.amp);
    const auto peaks = find_peaks(s.amp, opts.first_peak_fraction * mx, 0.0);
    if (!peaks.empty()) return peak_time(s, peaks.front()) - trigger_time;
    // maximum sits on the record boundary
    const auto it = std::max_element(s.amp.begin(), s.amp.end());
    return s.t0 + static_cast<double>(it - s.amp.begin()) * s.dt - trigger_time;
}

double delay_to_peak(const MaserEnvelope& env, double trigger_time, const MetricOptions& opts) {
    return delay_to_peak(amplitude_of(env), trigger_time, opts);
}

std::vector<double> envelope_maxima(const AmplitudeSeries& s, const MetricOptions& opts) {
    std::vector<double> times;
    if (s.amp.size() < 3) return times;
    const double mx = max_of(s.amp);
    if (!(mx > 0.0)) return times;
    for (const auto& p : find_peaks(s.amp, opts.maxima_fraction * mx, opts.min_prominence * mx)) {
        times.push_back(peak_time(s, p));
    }
    return times;
}

double rabi_frequency_td(const AmplitudeSeries& s, const MetricOptions& opts) {
    const auto times = envelope_maxima(s, opts);
    if (times.size() < 2) {
        fail(ErrorKind::InsufficientCycles,
             "found " + std::to_string(times.size()) + " envelope maxima, need 2");
    }
    const double spacing = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    return 1.0 / spacing;
}

double rabi_frequency_td(const MaserEnvelope& env, const MetricOptions& opts) {
    return rabi_frequency_td(amplitude_of(env), opts);
}

double rabi_frequency_autocorr(const AmplitudeSeries& s, const MetricOptions& opts) {
    if (s.amp.size() < 4) fail(ErrorKind::InsufficientCycles, "record too short");
    const double mx = max_of(s.amp);
    const auto [first, last] = region_above(s.amp, opts.maxima_fraction * mx);
    const std::size_t n = last - first + 1;
    if (n < 4) fail(ErrorKind::InsufficientCycles, "burst region too short");
    // first differences suppress the slow rise and decay of the burst
    std::vector<double> x(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) x[i] = s.amp[first + i + 1] - s.amp[first + i];
    const std::size_t len = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(len);
    for (double& v : x) v -= mean;
    std::vector<double> r(len / 2 + 1, 0.0);
    for (std::size_t lag = 0; lag < r.size(); ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < len; ++i) acc += x[i] * x[i + lag];
        r[lag] = acc / static_cast<double>(len - lag);
    }
    std::size_t k = 1;
    while (k < r.size() && r[k] > 0.0) ++k;  // skip the zero-lag lobe
    const auto peaks = find_peaks(std::vector<double>(r.begin() + static_cast<std::ptrdiff_t>(k), r.end()),
                                  -std::numeric_limits<double>::infinity(), 0.0);
    if (k >= r.size() || peaks.empty()) {
        fail(ErrorKind::InsufficientCycles, "no periodicity in the envelope autocorrelation");
    }
    const double lag = static_cast<double>(k + peaks.front().index) + peaks.front().offset;
    return 1.0 / (lag * s.dt);
}

int completed_cycles(const AmplitudeSeries& s, const MetricOptions& opts) {
    if (s.amp.empty()) return 0;
    const double mx = max_of(s.amp);
    if (!(mx > 0.0)) return 0;
    const auto [first, last] = region_above(s.amp, 0.1 * mx);
    (void)first;
    const double t_end = s.t0 + static_cast<double>(last) * s.dt;
    int count = 0;
    for (double t : envelope_maxima(s, opts)) {
        if (t <= t_end) ++count;
    }
    return count;
}

AmplitudeSeries Demodulated::amplitude() const {
    AmplitudeSeries s;
    s.t0 = t0;
    s.dt = dt;
    s.amp.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) s.amp[i] = std::abs(a[i]);
    return s;
}

Demodulated demodulate(const MaserTrace& trace, double f_ref, const DemodOptions& opts) {
    if (trace.v.empty()) fail(ErrorKind::EmptyTrace, "trace has no samples");
    const double fs = trace.sample_rate_hz;
    if (!(f_ref > 0.0) || !(fs >= 4.0 * f_ref)) {
        fail(ErrorKind::UndersampledCarrier, "sample rate must be at least 4x the reference");
    }
    if (!(opts.cutoff_hz > 0.0 && opts.cutoff_hz < 0.5 * fs) || !(opts.transition_hz > 0.0)) {
        fail(ErrorKind::InvalidArgument, "low-pass cutoff must lie below Nyquist");
    }
    const std::size_t n = trace.v.size();
    const double dt_in = 1.0 / fs;
    const double t0 = trace.t.empty() ? 0.0 : trace.t.front();

    // Blackman-windowed sinc, odd length so the centre tap is exact.
    std::size_t half = static_cast<std::size_t>(std::ceil(2.75 * fs / opts.transition_hz));
    half = std::max<std::size_t>(half, 8);
    const std::size_t taps = 2 * half + 1;
    std::vector<double> h(taps);
    const double fc = opts.cutoff_hz / fs;
    double gain = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double m = static_cast<double>(i) - static_cast<double>(half);
        const double sinc = m == 0.0 ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (kPi * m);
        const double x = static_cast<double>(i) / static_cast<double>(taps - 1);
        const double win = 0.42 - 0.5 * std::cos(kTwoPi * x) + 0.08 * std::cos(2.0 * kTwoPi * x);
        h[i] = sinc * win;
        gain += h[i];
    }
    for (double& c : h) c /= gain;

    std::vector<std::complex<double>> mixed(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt_in;
        const double ph = -kTwoPi * std::fmod(f_ref * t, 1.0);
        mixed[k] = 2.0 * trace.v[k] * std::complex<double>(std::cos(ph), std::sin(ph));
    }

    const std::size_t step =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.output_dt_s * fs)));
    Demodulated out;
    out.t0 = t0;
    out.dt = static_cast<double>(step) * dt_in;
    out.f_ref = f_ref;
    for (std::size_t c = 0; c < n; c += step) {
        std::complex<double> acc = 0.0;
        const std::size_t lo = c >= half ? c - half : 0;
        const std::size_t hi = std::min(n - 1, c + half);
        double covered = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            acc += h[k + half - c] * mixed[k];
            covered += h[k + half - c];
        }
        // near the record edges only part of the kernel overlaps the data
        out.a.push_back(acc / covered);
    }
    return out;
}

}  // namespace maser
