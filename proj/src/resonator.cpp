#include "maser/resonator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maser/error.hpp"
#include "maser/random.hpp"

namespace maser {

namespace {

std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

struct Dip {
    std::size_t index = 0;
    double baseline_power = 1.0;
    double min_power = 1.0;
    double depth_db = 0.0;
};

// Locates the dominant dip and checks that it is deep enough relative to the
// edge baseline.
Dip find_dip(const ReflectionTrace& trace, const DipOptions& opts) {
    trace.validate();
    const std::size_t n = trace.size();
    std::size_t k0 = 0;
    double pmin = std::norm(trace.s11[0]);
    for (std::size_t k = 1; k < n; ++k) {
        const double p = std::norm(trace.s11[k]);
        if (p < pmin) {
            pmin = p;
            k0 = k;
        }
    }
    const double edge = std::max(std::norm(trace.s11.front()), std::norm(trace.s11.back()));
    const double depth = pmin > 0.0 ? 10.0 * std::log10(edge / pmin)
                                    : std::numeric_limits<double>::infinity();
    if (!(depth >= opts.min_depth_db) || k0 == 0 || k0 + 1 == n) {
        fail(ErrorKind::NoResonanceFound,
             "no dip deeper than " + fmt_num(opts.min_depth_db) + " dB inside the span");
    }
    return {k0, edge, pmin, depth};
}

// Vertex of the parabola through three (x, y) samples; falls back to x1.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curvature = (d1 - d0) / (x2 - x0);
    if (!(curvature > 0.0)) return x1;
    const double xv = 0.5 * (x0 + x1) - d0 / (2.0 * curvature);
    return std::clamp(xv, x0, x2);
}

}  // namespace

// ---------------------------------------------------------------- tuning curve

TuningCurve::TuningCurve()
    : TuningCurve({{kCeilingMinMm, kSpinTransitionHz + 2.5e6},
                   {kCeilingMaxMm, kSpinTransitionHz - 2.5e6}}) {}

TuningCurve::TuningCurve(std::vector<std::pair<double, double>> anchors)
    : anchors_(std::move(anchors)) {
    if (anchors_.size() < 2) fail(ErrorKind::InvalidArgument, "tuning curve needs >= 2 anchors");
    const bool decreasing = anchors_[1].second < anchors_[0].second;
    for (std::size_t i = 1; i < anchors_.size(); ++i) {
        if (!(anchors_[i].first > anchors_[i - 1].first)) {
            fail(ErrorKind::InvalidArgument, "tuning anchors must have increasing heights");
        }
        const double df = anchors_[i].second - anchors_[i - 1].second;
        if (df == 0.0 || (df < 0.0) != decreasing) {
            fail(ErrorKind::InvalidArgument, "tuning curve must be strictly monotone");
        }
    }
}

double TuningCurve::frequency_at(double h) const {
    if (!(h >= min_height() && h <= max_height())) {
        fail(ErrorKind::HeightOutOfRange, "ceiling height " + fmt_num(h) + " mm outside [" +
                                              fmt_num(min_height()) + ", " +
                                              fmt_num(max_height()) + "] mm");
    }
    auto it = std::upper_bound(anchors_.begin(), anchors_.end(), h,
                               [](double v, const auto& a) { return v < a.first; });
    if (it == anchors_.end()) return anchors_.back().second;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (h - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
}

double TuningCurve::min_frequency() const {
    return std::min(anchors_.front().second, anchors_.back().second);
}

double TuningCurve::max_frequency() const {
    return std::max(anchors_.front().second, anchors_.back().second);
}

double TuningCurve::height_for(double f) const {
    if (!(f >= min_frequency() && f <= max_frequency())) {
        fail(ErrorKind::FrequencyUnreachable, "frequency " + fmt_num(f) + " Hz outside [" +
                                                  fmt_num(min_frequency()) + ", " +
                                                  fmt_num(max_frequency()) + "] Hz");
    }
    for (std::size_t i = 1; i < anchors_.size(); ++i) {
        const auto& a = anchors_[i - 1];
        const auto& b = anchors_[i];
        const double lo = std::min(a.second, b.second);
        const double hi = std::max(a.second, b.second);
        if (f >= lo && f <= hi) {
            const double t = (f - a.second) / (b.second - a.second);
            return a.first + t * (b.first - a.first);
        }
    }
    return anchors_.back().first;  // unreachable for a monotone table
}

// ---------------------------------------------------------------- config

void ResonatorConfig::validate() const {
    if (!(q_loaded > 0.0)) fail(ErrorKind::InvalidArgument, "q_loaded must be > 0");
    if (!(q_loaded <= q_unloaded)) fail(ErrorKind::InvalidArgument, "q_loaded must be <= q_unloaded");
    if (!(coupling_beta > 0.0)) fail(ErrorKind::InvalidArgument, "coupling_beta must be > 0");
    if (!(ceiling_height_mm >= kCeilingMinMm && ceiling_height_mm <= kCeilingMaxMm)) {
        fail(ErrorKind::HeightOutOfRange, "ceiling height " + fmt_num(ceiling_height_mm) + " mm");
    }
    if (!(f_mode >= tuning.min_frequency() && f_mode <= tuning.max_frequency())) {
        fail(ErrorKind::FrequencyUnreachable, "f_mode outside the tuning curve");
    }
    if (!(f_spin > 0.0)) fail(ErrorKind::InvalidArgument, "f_spin must be > 0");
}

ResonatorConfig default_resonator() {
    ResonatorConfig cfg;
    cfg.q_loaded = kReferenceLoadedQ;
    cfg.coupling_beta = 0.5;
    cfg.q_unloaded = cfg.q_loaded * (1.0 + cfg.coupling_beta);
    cfg.ceiling_height_mm = cfg.tuning.height_for(kSpinTransitionHz);
    cfg.f_mode = cfg.tuning.frequency_at(cfg.ceiling_height_mm);
    return cfg;
}

ResonatorConfig tune_ceiling(const ResonatorConfig& cfg, double height_mm) {
    if (!(height_mm >= kCeilingMinMm && height_mm <= kCeilingMaxMm)) {
        fail(ErrorKind::HeightOutOfRange, "ceiling height " + fmt_num(height_mm) +
                                              " mm outside [4.5, 20] mm");
    }
    ResonatorConfig out = cfg;
    out.ceiling_height_mm = height_mm;
    out.f_mode = cfg.tuning.frequency_at(height_mm);
    return out;
}

double height_for_frequency(const ResonatorConfig& cfg, double f_hz) {
    return cfg.tuning.height_for(f_hz);
}

// ---------------------------------------------------------------- S11

void ReflectionTrace::validate() const {
    if (freq_hz.size() != s11.size()) fail(ErrorKind::InvalidGrid, "length mismatch");
    if (freq_hz.size() < 3) fail(ErrorKind::InvalidGrid, "need at least 3 points");
    for (std::size_t k = 0; k < freq_hz.size(); ++k) {
        if (!std::isfinite(freq_hz[k]) || !std::isfinite(s11[k].real()) ||
            !std::isfinite(s11[k].imag())) {
            fail(ErrorKind::InvalidGrid, "non-finite sample at row " + std::to_string(k));
        }
        if (k > 0 && !(freq_hz[k] > freq_hz[k - 1])) {
            fail(ErrorKind::InvalidGrid, "frequency grid not strictly increasing at row " +
                                             std::to_string(k));
        }
        if (std::abs(s11[k]) > 1.0 + 1e-9) {
            fail(ErrorKind::InvalidGrid, "|S11| > 1 at row " + std::to_string(k));
        }
    }
}

std::complex<double> reflection_at(const ResonatorConfig& cfg, double f_hz) {
    const double delta = (f_hz - cfg.f_mode) / cfg.f_mode;
    const std::complex<double> x(0.0, 2.0 * cfg.q_unloaded * delta);
    return (cfg.coupling_beta - 1.0 - x) / (cfg.coupling_beta + 1.0 + x);
}

ReflectionTrace reflection_trace(const ResonatorConfig& cfg, double f_start, double f_stop,
                                 std::size_t n_points, std::optional<ReflectionNoise> noise) {
    if (!(f_start < f_stop) || n_points < 3) {
        fail(ErrorKind::InvalidGrid, "need f_start < f_stop and n_points >= 3");
    }
    ReflectionTrace tr;
    tr.freq_hz.resize(n_points);
    tr.s11.resize(n_points);
    std::optional<GaussianSource> rng;
    if (noise) rng.emplace(noise->seed);
    const double step = (f_stop - f_start) / static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double f = k + 1 == n_points ? f_stop : f_start + step * static_cast<double>(k);
        auto s = reflection_at(cfg, f);
        if (rng) {
            s += std::complex<double>(noise->sigma * rng->normal(), noise->sigma * rng->normal());
            // a passive one-port cannot reflect more than it receives
            if (std::abs(s) > 1.0) s /= std::abs(s);
        }
        tr.freq_hz[k] = f;
        tr.s11[k] = s;
    }
    return tr;
}

CircleFit fit_circle(const std::vector<std::complex<double>>& pts) {
    if (pts.size() < 3) fail(ErrorKind::InvalidArgument, "circle fit needs >= 3 points");
    Eigen::MatrixXd A(pts.size(), 3);
    Eigen::VectorXd b(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i].real();
        const double y = pts[i].imag();
        A(i, 0) = x;
        A(i, 1) = y;
        A(i, 2) = 1.0;
        b(i) = -(x * x + y * y);
    }
    const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(b);
    const std::complex<double> c(-0.5 * sol(0), -0.5 * sol(1));
    const double r2 = std::norm(c) - sol(2);
    if (!(r2 > 0.0) || !std::isfinite(r2)) fail(ErrorKind::NoResonanceFound, "degenerate circle fit");
    return {c, std::sqrt(r2)};
}

QFactorEstimate q_from_edges(double f_lo, double f_hi, double f_res) {
    if (!(f_lo < f_res && f_res < f_hi)) {
        fail(ErrorKind::InvalidArgument, "need f_lo < f_res < f_hi");
    }
    QFactorEstimate q;
    q.f_lo = f_lo;
    q.f_hi = f_hi;
    q.f_res = f_res;
    q.q_loaded = f_res / (f_hi - f_lo);
    return q;
}

QFactorEstimate estimate_q_loaded(const ReflectionTrace& trace, const DipOptions& opts) {
    const Dip dip = find_dip(trace, opts);
    const auto& f = trace.freq_hz;
    const std::size_t n = trace.size();

    // The detuned point of the resonance circle is the true off-resonance
    // baseline, even when the span edges still sit on the Lorentzian tails.
    const CircleFit circle = fit_circle(trace.s11);
    const std::complex<double> toward_dip = trace.s11[dip.index] - circle.center;
    if (std::abs(toward_dip) == 0.0) fail(ErrorKind::NoResonanceFound, "dip at circle center");
    const std::complex<double> detuned =
        circle.center - circle.radius * toward_dip / std::abs(toward_dip);
    const double baseline = std::norm(detuned);

    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::norm(trace.s11[k]);

    const std::size_t k0 = dip.index;
    const double f_res = parabolic_vertex(f[k0 - 1], p[k0 - 1], f[k0], p[k0], f[k0 + 1], p[k0 + 1]);
    // half of the absorbed power: |S11|^2 = (baseline + min) / 2
    const double level = 0.5 * (baseline + dip.min_power);

    auto crossing = [&](std::size_t a, std::size_t b) {
        const double t = (level - p[a]) / (p[b] - p[a]);
        return f[a] + t * (f[b] - f[a]);
    };

    std::size_t k = k0;
    while (k > 0 && p[k] < level) --k;
    if (p[k] < level) fail(ErrorKind::BandwidthOutsideSpan, "lower -3 dB edge below the span");
    const double f_lo = crossing(k + 1, k);

    k = k0;
    while (k + 1 < n && p[k] < level) ++k;
    if (p[k] < level) fail(ErrorKind::BandwidthOutsideSpan, "upper -3 dB edge above the span");
    const double f_hi = crossing(k - 1, k);

    QFactorEstimate q = q_from_edges(f_lo, f_hi, std::clamp(f_res, f_lo, f_hi));
    q.baseline_power = baseline;
    q.dip_depth_db = dip.depth_db;
    return q;
}

std::string_view to_string(Coupling c) noexcept {
    switch (c) {
    case Coupling::Undercoupled: return "undercoupled";
    case Coupling::Critical: return "critical";
    case Coupling::Overcoupled: return "overcoupled";
    }
    return "unknown";
}

CouplingClass classify_coupling(const ReflectionTrace& trace, double tolerance,
                                const DipOptions& opts) {
    find_dip(trace, opts);
    CouplingClass out;
    out.circle = fit_circle(trace.s11);
    out.distance = std::abs(out.circle.center) - out.circle.radius;
    if (std::abs(out.distance) <= tolerance) {
        out.kind = Coupling::Critical;
    } else {
        out.kind = out.distance > 0.0 ? Coupling::Undercoupled : Coupling::Overcoupled;
    }
    return out;
}

CavityDecay cavity_decay_rate(double q_loaded, double f_res) {
    if (!(q_loaded > 0.0) || !(f_res > 0.0)) {
        fail(ErrorKind::InvalidArgument, "q_loaded and f_res must be positive");
    }
    const double linewidth = f_res / q_loaded;
    return {kTwoPi * linewidth, linewidth};
}

}  // namespace maser
