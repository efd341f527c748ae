#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace maser {

/// AR model with prediction polynomial 1 + sum_k a_k z^-k.
struct ArModel {
    std::size_t order = 0;
    std::vector<std::complex<double>> coeffs;      // a_1 .. a_p
    std::vector<std::complex<double>> reflection;  // k_1 .. k_p
    double noise_var = 0.0;
    double sample_dt = 1.0;
    bool real_input = false;
};

ArModel burg_fit(const std::vector<std::complex<double>>& x, std::size_t order, double dt = 1.0);
/// Real-valued recursion; coefficients come back with zero imaginary part.
ArModel burg_fit(const std::vector<double>& x, std::size_t order, double dt = 1.0);

enum class OrderCriterion { FPE, AIC };

std::size_t default_max_order(std::size_t n_samples);

std::size_t select_order(const std::vector<std::complex<double>>& x,
                         OrderCriterion criterion = OrderCriterion::FPE,
                         std::size_t max_order = 0);  // 0 -> default_max_order
std::size_t select_order(const std::vector<double>& x,
                         OrderCriterion criterion = OrderCriterion::FPE,
                         std::size_t max_order = 0);

/// Criterion value for every order 0..max_order from one recursion.
std::vector<double> order_criterion_curve(const std::vector<std::complex<double>>& x,
                                          OrderCriterion criterion, std::size_t max_order);

struct SpectralPeak {
    double freq_hz = 0.0;
    double height = 0.0;
    double prominence = 0.0;
};

struct PowerSpectrum {
    std::vector<double> freq_hz;
    std::vector<double> psd;
    bool normalized = false;
    std::vector<SpectralPeak> peaks;  // sorted by frequency
};

struct PsdOptions {
    bool normalize = true;
    double prominence_fraction = 0.05;
    /// Added to every reported frequency (for spectra of demodulated signals).
    double offset_hz = 0.0;
};

/// psd(f) = noise_var dt / |1 + sum a_k exp(-2 pi i f k dt)|^2 on baseband
/// frequencies. Throws FrequencyOutOfRange outside the Nyquist band.
PowerSpectrum mem_psd(const ArModel& model, const std::vector<double>& freq_grid,
                      const PsdOptions& opts = {});

std::vector<double> linear_grid(double f_lo, double f_hi, std::size_t n);

std::vector<SpectralPeak> find_spectral_peaks(const std::vector<double>& freq,
                                              const std::vector<double>& psd,
                                              double prominence_fraction = 0.05);

/// Single peak -> its frequency; otherwise the midpoint of the two highest
/// qualifying peaks. Throws NoPeaks.
double carrier_frequency(const PowerSpectrum& spectrum);

/// Distance between the two highest qualifying peaks. Throws NoSplitting.
double rabi_splitting(const PowerSpectrum& spectrum);

/// Analytic signal x + i H[x] via FFT.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

/// Roots of 1 + sum a_k z^-k, i.e. of z^p + a_1 z^(p-1) + ... + a_p.
std::vector<std::complex<double>> ar_roots(const ArModel& model);

}  // namespace maser
