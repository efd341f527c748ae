#include "maser/mem_spectral.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <string>

#include "maser/constants.hpp"
#include "maser/error.hpp"
#include "maser/peaks.hpp"

namespace maser {

namespace {

template <class T>
void check_input(const std::vector<T>& x, std::size_t order) {
    if (order >= x.size()) {
        fail(ErrorKind::OrderTooLarge, "order " + std::to_string(order) + " needs more than " +
                                           std::to_string(x.size()) + " samples");
    }
    for (const auto& v : x) {
        if (!std::isfinite(std::abs(v))) fail(ErrorKind::NonFiniteInput, "signal has non-finite samples");
    }
}

double conj_of(double v) { return v; }
std::complex<double> conj_of(std::complex<double> v) { return std::conj(v); }
double sq_abs(double v) { return v * v; }
double sq_abs(std::complex<double> v) { return std::norm(v); }

// Burg recursion shared by the real and complex paths. `on_stage` receives
// the stage index and the prediction-error variance after it.
template <class T, class Stage>
ArModel burg_core(const std::vector<T>& x, std::size_t order, double dt, Stage&& on_stage) {
    const std::size_t n = x.size();
    std::vector<T> f(x), b(x), a;
    ArModel model;
    model.sample_dt = dt;
    double var = 0.0;
    for (const auto& v : x) var += sq_abs(v);
    var /= static_cast<double>(n);
    on_stage(0, var);

    for (std::size_t m = 1; m <= order; ++m) {
        T num{};
        double den = 0.0;
        for (std::size_t i = m; i < n; ++i) {
            num += f[i] * conj_of(b[i - 1]);
            den += sq_abs(f[i]) + sq_abs(b[i - 1]);
        }
        T k = den > 0.0 ? T(-2.0 * num / den) : T{};
        if (std::abs(k) > 1.0) k /= std::abs(k);  // roundoff only; |k| <= 1 by Cauchy-Schwarz

        std::vector<T> next(m);
        for (std::size_t i = 0; i + 1 < m; ++i) next[i] = a[i] + k * conj_of(a[m - 2 - i]);
        next[m - 1] = k;
        a.swap(next);

        for (std::size_t i = n - 1; i >= m; --i) {
            const T fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + conj_of(k) * fi;
        }
        var *= 1.0 - sq_abs(k);
        model.reflection.emplace_back(k);
        on_stage(m, var);
    }
    model.order = order;
    model.noise_var = var;
    model.coeffs.assign(a.begin(), a.end());
    return model;
}

template <class T>
std::vector<double> criterion_curve(const std::vector<T>& x, OrderCriterion crit,
                                    std::size_t max_order) {
    const double n = static_cast<double>(x.size());
    if (max_order > 0 && !(static_cast<double>(max_order) < n / 2.0)) {
        fail(ErrorKind::OrderTooLarge, "max_order must be below half the record length");
    }
    check_input(x, max_order);
    std::vector<double> out;
    burg_core(x, max_order, 1.0, [&](std::size_t p, double var) {
        const double pp = static_cast<double>(p);
        if (crit == OrderCriterion::FPE) {
            out.push_back(var * (n + pp + 1.0) / (n - pp - 1.0));
        } else {
            out.push_back(n * std::log(var) + 2.0 * pp);
        }
    });
    return out;
}

template <class T>
std::size_t select_order_impl(const std::vector<T>& x, OrderCriterion crit, std::size_t max_order) {
    if (max_order == 0) max_order = default_max_order(x.size());
    if (max_order == 0) return 0;
    const auto curve = criterion_curve(x, crit, max_order);
    return static_cast<std::size_t>(std::min_element(curve.begin(), curve.end()) - curve.begin());
}

}  // namespace

ArModel burg_fit(const std::vector<std::complex<double>>& x, std::size_t order, double dt) {
    check_input(x, order);
    ArModel m = burg_core(x, order, dt, [](std::size_t, double) {});
    m.real_input = false;
    return m;
}

ArModel burg_fit(const std::vector<double>& x, std::size_t order, double dt) {
    check_input(x, order);
    ArModel m = burg_core(x, order, dt, [](std::size_t, double) {});
    m.real_input = true;
    return m;
}

std::size_t default_max_order(std::size_t n_samples) {
    std::size_t p = std::min<std::size_t>(n_samples / 3, 100);
    // keep the FPE denominator positive and the order below half the record
    while (p > 0 && !(2 * p < n_samples)) --p;
    return p;
}

std::size_t select_order(const std::vector<std::complex<double>>& x, OrderCriterion criterion,
                         std::size_t max_order) {
    return select_order_impl(x, criterion, max_order);
}

std::size_t select_order(const std::vector<double>& x, OrderCriterion criterion,
                         std::size_t max_order) {
    return select_order_impl(x, criterion, max_order);
}

std::vector<double> order_criterion_curve(const std::vector<std::complex<double>>& x,
                                          OrderCriterion criterion, std::size_t max_order) {
    return criterion_curve(x, criterion, max_order);
}

std::vector<double> linear_grid(double f_lo, double f_hi, std::size_t n) {
    if (n < 2 || !(f_hi > f_lo)) fail(ErrorKind::InvalidArgument, "bad frequency grid");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = f_lo + (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    g.back() = f_hi;
    return g;
}

std::vector<SpectralPeak> find_spectral_peaks(const std::vector<double>& freq,
                                              const std::vector<double>& psd,
                                              double prominence_fraction) {
    std::vector<SpectralPeak> out;
    if (psd.size() < 3) return out;
    const double mx = *std::max_element(psd.begin(), psd.end());
    if (!(mx > 0.0)) return out;
    for (const auto& p : find_peaks(psd, 0.0, prominence_fraction * mx)) {
        const std::size_t i = p.index;
        const double step = p.offset >= 0.0 ? freq[i + 1] - freq[i] : freq[i] - freq[i - 1];
        out.push_back({freq[i] + p.offset * step, p.height, p.prominence});
    }
    return out;
}

PowerSpectrum mem_psd(const ArModel& model, const std::vector<double>& freq_grid,
                      const PsdOptions& opts) {
    const double dt = model.sample_dt;
    const double nyq = 0.5 / dt;
    const double lo = model.real_input ? 0.0 : -nyq;
    PowerSpectrum s;
    s.freq_hz.reserve(freq_grid.size());
    s.psd.reserve(freq_grid.size());
    for (double f : freq_grid) {
        if (!(f >= lo * (1.0 + 1e-12) && f <= nyq * (1.0 + 1e-12))) {
            fail(ErrorKind::FrequencyOutOfRange, "frequency outside the Nyquist band");
        }
        std::complex<double> den = 1.0;
        const std::complex<double> step = std::polar(1.0, -kTwoPi * f * dt);
        std::complex<double> z = 1.0;
        for (std::size_t k = 0; k < model.order; ++k) {
            // re-anchor periodically so the running product does not drift
            z = (k % 32 == 31) ? std::polar(1.0, -kTwoPi * f * dt * static_cast<double>(k + 1))
                               : z * step;
            den += model.coeffs[k] * z;
        }
        s.freq_hz.push_back(f + opts.offset_hz);
        s.psd.push_back(model.noise_var * dt / std::norm(den));
    }
    if (opts.normalize && !s.psd.empty()) {
        const double mx = *std::max_element(s.psd.begin(), s.psd.end());
        if (mx > 0.0) {
            for (double& p : s.psd) p /= mx;
            s.normalized = true;
        }
    }
    s.peaks = find_spectral_peaks(s.freq_hz, s.psd, opts.prominence_fraction);
    return s;
}

namespace {

// peaks already passed the prominence filter; rank the survivors by height
std::vector<SpectralPeak> by_height(const PowerSpectrum& s) {
    std::vector<SpectralPeak> p = s.peaks;
    std::stable_sort(p.begin(), p.end(),
                     [](const SpectralPeak& a, const SpectralPeak& b) { return a.height > b.height; });
    return p;
}

}  // namespace

double carrier_frequency(const PowerSpectrum& spectrum) {
    const auto p = by_height(spectrum);
    if (p.empty()) fail(ErrorKind::NoPeaks, "spectrum has no peaks");
    if (p.size() == 1) return p[0].freq_hz;
    return 0.5 * (p[0].freq_hz + p[1].freq_hz);
}

double rabi_splitting(const PowerSpectrum& spectrum) {
    const auto p = by_height(spectrum);
    if (p.size() < 2) fail(ErrorKind::NoSplitting, "fewer than two qualifying peaks");
    return std::abs(p[0].freq_hz - p[1].freq_hz);
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, x);
    spec.resize(n);
    // keep DC and Nyquist, double positive frequencies, drop negative ones
    for (std::size_t k = 1; k < n; ++k) {
        if (2 * k < n) {
            spec[k] *= 2.0;
        } else if (2 * k > n) {
            spec[k] = 0.0;
        }
    }
    std::vector<std::complex<double>> out;
    fft.inv(out, spec);
    return out;
}

std::vector<std::complex<double>> ar_roots(const ArModel& model) {
    const std::size_t p = model.order;
    if (p == 0) return {};
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k) c(0, static_cast<Eigen::Index>(k)) = -model.coeffs[k];
    for (std::size_t k = 1; k < p; ++k) c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c, false);
    std::vector<std::complex<double>> r(p);
    for (std::size_t k = 0; k < p; ++k) r[k] = es.eigenvalues()(static_cast<Eigen::Index>(k));
    return r;
}

}  // namespace maser
