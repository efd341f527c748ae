#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "maser/mem_spectral.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace maser;
using testing::kind_of;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cd = std::complex<double>;

namespace {

constexpr double dt50 = 1.0 / 50e6;  // 50 MS/s complex sampling
constexpr std::size_t n20us = 1000;

double noise_var_for_snr(double amp, double snr_db) { return amp * amp / std::pow(10.0, snr_db / 10.0); }

std::vector<double> peak_freqs(const PowerSpectrum& s) {
    std::vector<double> f;
    for (const auto& p : s.peaks) f.push_back(p.freq_hz);
    return f;
}

double nearest(const std::vector<double>& f, double target) {
    double best = std::numeric_limits<double>::infinity();
    for (double v : f)
        if (std::abs(v - target) < std::abs(best - target)) best = v;
    return best;
}

}  // namespace

TEST_CASE("order zero is the mean power", "[mem][burg]") {
    const auto x = oracle::tones({1e6}, {2.0}, dt50, 500, 0.1, 4);
    const ArModel m = burg_fit(x, 0, dt50);
    double p = 0.0;
    for (const auto& v : x) p += std::norm(v);
    CHECK(m.order == 0);
    CHECK(m.coeffs.empty());
    CHECK_THAT(m.noise_var, WithinRel(p / x.size(), 1e-12));

    const PowerSpectrum s = mem_psd(m, linear_grid(-20e6, 20e6, 101), {.normalize = false});
    for (double v : s.psd) CHECK_THAT(v, WithinRel(m.noise_var * dt50, 1e-12));
}

TEST_CASE("AR(1) coefficient recovery", "[mem][burg]") {
    const auto x = oracle::ar_process({-0.9}, 100000, 21);  // x_n = 0.9 x_{n-1} + e_n
    const ArModel m = burg_fit(x, 1);
    REQUIRE(m.coeffs.size() == 1);
    CHECK(m.real_input);
    CHECK(m.coeffs[0].imag() == 0.0);
    CHECK_THAT(m.coeffs[0].real(), WithinRel(-0.9, 0.02));
    CHECK_THAT(m.noise_var, WithinRel(1.0, 0.02));

    std::vector<cd> xc(x.begin(), x.end());
    const ArModel mc = burg_fit(xc, 1);
    CHECK_THAT(mc.coeffs[0].real(), WithinRel(-0.9, 0.02));
    CHECK(std::abs(mc.coeffs[0].imag()) < 1e-12);
}

TEST_CASE("AR(2) coefficient recovery", "[mem][burg]") {
    const auto x = oracle::ar_process({-1.6, 0.9}, 100000, 8);
    const ArModel m = burg_fit(x, 2);
    CHECK_THAT(m.coeffs[0].real(), WithinAbs(-1.6, 0.02));
    CHECK_THAT(m.coeffs[1].real(), WithinAbs(0.9, 0.02));
}

TEST_CASE("order must be below the record length", "[mem][burg]") {
    const std::vector<cd> x(16, cd(1.0, 0.5));
    CHECK(kind_of([&] { burg_fit(x, 16); }) == ErrorKind::OrderTooLarge);
    CHECK_NOTHROW(burg_fit(x, 15));
    std::vector<double> bad = {1.0, 2.0, std::nan(""), 3.0};
    CHECK(kind_of([&] { burg_fit(bad, 1); }) == ErrorKind::NonFiniteInput);
    std::vector<cd> badc = {1.0, cd(0.0, std::numeric_limits<double>::infinity()), 2.0};
    CHECK(kind_of([&] { burg_fit(badc, 1); }) == ErrorKind::NonFiniteInput);
}

TEST_CASE("FPE picks a small order for AR(2) data", "[mem][order]") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const auto x = oracle::ar_process({-1.6, 0.9}, 10000, seed);
        const std::size_t p = select_order(x, OrderCriterion::FPE, 20);
        INFO("seed " << seed);
        CHECK(p >= 2);
        CHECK(p <= 6);
    }
}

TEST_CASE("FPE prefers near-zero order on white noise", "[mem][order]") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const auto x = oracle::white_noise(10000, 1.0, seed);
        INFO("seed " << seed);
        CHECK(select_order(x, OrderCriterion::FPE, 20) <= 2);
    }
}

TEST_CASE("order selection edge cases", "[mem][order]") {
    const auto x = oracle::white_noise(100, 1.0, 1);
    CHECK(select_order(x, OrderCriterion::FPE, 0) <= default_max_order(100));
    const std::vector<double> tiny = {1.0, -1.0};
    CHECK(select_order(tiny, OrderCriterion::FPE, 0) == 0);
    CHECK(kind_of([&] { select_order(x, OrderCriterion::FPE, 50); }) == ErrorKind::OrderTooLarge);
    CHECK(default_max_order(30000) == 100);
    CHECK(default_max_order(90) == 30);
    for (std::size_t n : {3, 7, 100, 301}) CHECK(2 * default_max_order(n) < n);
}

TEST_CASE("criterion curve agrees with the selected order", "[mem][order]") {
    const auto x = oracle::ar_process({-1.6, 0.9}, 5000, 17);
    std::vector<cd> xc(x.begin(), x.end());
    for (auto crit : {OrderCriterion::FPE, OrderCriterion::AIC}) {
        const auto curve = order_criterion_curve(xc, crit, 20);
        REQUIRE(curve.size() == 21);
        const auto best = static_cast<std::size_t>(std::min_element(curve.begin(), curve.end()) - curve.begin());
        CHECK(select_order(xc, crit, 20) == best);
    }
    // FPE from the recursion's error variances
    const auto curve = order_criterion_curve(xc, OrderCriterion::FPE, 4);
    const double n = static_cast<double>(xc.size());
    for (std::size_t p = 0; p <= 4; ++p) {
        const double var = burg_fit(xc, p).noise_var;
        CHECK_THAT(curve[p], WithinRel(var * (n + p + 1) / (n - p - 1), 1e-10));
    }
}

TEST_CASE("AR(2) spectrum matches the closed form", "[mem][psd]") {
    for (auto [a1, a2] : {std::pair{-1.6, 0.9}, std::pair{0.5, 0.3}, std::pair{-0.2, -0.6}}) {
        ArModel m;
        m.order = 2;
        m.coeffs = {a1, a2};
        m.noise_var = 2.5;
        m.sample_dt = 1e-7;
        m.real_input = true;
        const auto grid = linear_grid(0.0, 5e6, 1001);
        const PowerSpectrum s = mem_psd(m, grid, {.normalize = false});
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK_THAT(s.psd[i], WithinRel(oracle::ar2_psd(a1, a2, 2.5, 1e-7, grid[i]), 1e-9));
    }
}

TEST_CASE("long AR models evaluate stably", "[mem][psd]") {
    // direct evaluation with independent phases
    const auto x = oracle::ar_process({-1.6, 0.9}, 4000, 2);
    const ArModel m = burg_fit(x, 90, 1e-6);
    const auto grid = linear_grid(0.0, 5e5, 257);
    const PowerSpectrum s = mem_psd(m, grid, {.normalize = false});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        cd den = 1.0;
        for (std::size_t k = 0; k < m.order; ++k)
            den += m.coeffs[k] * std::polar(1.0, -2.0 * oracle::pi * grid[i] * 1e-6 * (k + 1.0));
        CHECK_THAT(s.psd[i], WithinRel(m.noise_var * 1e-6 / std::norm(den), 1e-9));
    }
}

TEST_CASE("white-noise spectrum integrates to the variance", "[mem][psd][property]") {
    const double dt = 1e-6;
    for (std::size_t order : {0, 2, 4}) {
        const auto xc = oracle::tones({}, {}, dt, 100000, 3.0, 30 + order);
        double var = 0.0;
        for (const auto& v : xc) var += std::norm(v);
        var /= xc.size();
        const auto grid = linear_grid(-0.5 / dt, 0.5 / dt, 4001);
        const PowerSpectrum s = mem_psd(burg_fit(xc, order, dt), grid, {.normalize = false});
        double integral = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) integral += 0.5 * (s.psd[i] + s.psd[i - 1]) * (grid[i] - grid[i - 1]);
        INFO("complex, order " << order);
        CHECK_THAT(integral, WithinRel(var, 0.05));

        const auto xr = oracle::white_noise(100000, 1.7, 50 + order);
        double vr = 0.0;
        for (double v : xr) vr += v * v;
        vr /= xr.size();
        const auto half = linear_grid(0.0, 0.5 / dt, 2001);
        const PowerSpectrum sr = mem_psd(burg_fit(xr, order, dt), half, {.normalize = false});
        double ir = 0.0;
        for (std::size_t i = 1; i < half.size(); ++i) ir += 0.5 * (sr.psd[i] + sr.psd[i - 1]) * (half[i] - half[i - 1]);
        INFO("real, order " << order);
        CHECK_THAT(2.0 * ir, WithinRel(vr, 0.05));
    }
}

TEST_CASE("normalized spectrum peaks at one", "[mem][psd]") {
    const auto x = oracle::tones({3e6}, {1.0}, dt50, n20us, 0.01, 9);
    const PowerSpectrum s = mem_psd(burg_fit(x, 8, dt50), linear_grid(-25e6, 25e6, 5001));
    CHECK(s.normalized);
    CHECK(*std::max_element(s.psd.begin(), s.psd.end()) == 1.0);
    for (double v : s.psd) CHECK(v >= 0.0);
}

TEST_CASE("frequencies outside the Nyquist band are rejected", "[mem][psd]") {
    const auto x = oracle::tones({3e6}, {1.0}, dt50, 200, 0.01, 9);
    const ArModel m = burg_fit(x, 4, dt50);
    CHECK(kind_of([&] { mem_psd(m, {26e6}); }) == ErrorKind::FrequencyOutOfRange);
    CHECK_NOTHROW(mem_psd(m, {-25e6, 25e6}));
    const ArModel mr = burg_fit(oracle::white_noise(200, 1.0, 2), 4, dt50);
    CHECK(kind_of([&] { mem_psd(mr, {-1e6}); }) == ErrorKind::FrequencyOutOfRange);
}

TEST_CASE("single tone is located within half a percent", "[mem][psd][property]") {
    const auto grid = linear_grid(-25e6, 25e6, 50001);
    for (double f : {-7.5e6, 0.9e6, 3e6, 11e6}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto x = oracle::tones({f}, {1.0}, dt50, n20us, noise_var_for_snr(1.0, 20.0), seed);
            const PowerSpectrum s = mem_psd(burg_fit(x, 8, dt50), grid);
            REQUIRE_FALSE(s.peaks.empty());
            INFO("f " << f << " seed " << seed);
            CHECK(std::abs(carrier_frequency(mem_psd(burg_fit(x, 1, dt50), grid)) - f) < 0.005 * std::abs(f));
            CHECK(std::abs(nearest(peak_freqs(s), f) - f) < 0.005 * std::abs(f));
        }
    }
}

namespace {

void check_doublet(std::size_t order) {
    const auto grid = linear_grid(-25e6, 25e6, 50001);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto x = oracle::tones({2.0e6 - 0.4e6, 2.0e6 + 0.4e6}, {1.0, 1.0}, dt50, n20us,
                                     noise_var_for_snr(1.0, 20.0), seed);
        const ArModel m = burg_fit(x, order, dt50);
        const PowerSpectrum s = mem_psd(m, grid);
        INFO("order " << order << " seed " << seed);
        REQUIRE(s.peaks.size() >= 2);
        CHECK_THAT(rabi_splitting(s), WithinRel(0.8e6, 0.02));
        CHECK_THAT(carrier_frequency(s), WithinAbs(2.0e6, 0.02 * 0.8e6));
    }
}

}  // namespace

TEST_CASE("doublet 0.8 MHz apart is resolved", "[mem][psd][property]") {
    for (std::size_t order : {10, 12, 16, 24}) check_doublet(order);
}

TEST_CASE("doublet 0.8 MHz apart is resolved at order 8", "[mem][psd][property]") {
    // Two peaks appear, but at 50 MS/s and 20 dB SNR the order-8 lines are
    // broad enough to pull each other about 4% inward.
    check_doublet(8);
}

TEST_CASE("carrier of a tone at the measured maser frequency", "[mem][carrier]") {
    const double f_ref = 1.4495e9;
    const double f_tone = 1.44969e9;
    const auto x = oracle::tones({f_tone - f_ref}, {1.0}, dt50, n20us, 1e-3, 5);
    PsdOptions opts;
    opts.offset_hz = f_ref;
    const auto grid = linear_grid(-5e6, 5e6, 10001);
    const PowerSpectrum s = mem_psd(burg_fit(x, 4, dt50), grid, opts);
    CHECK(s.freq_hz.front() == f_ref - 5e6);
    CHECK_THAT(carrier_frequency(s), WithinAbs(f_tone, 1e3));
}

TEST_CASE("splitting and carrier of a symmetric doublet", "[mem][carrier]") {
    const double f0 = -1.0e6;
    const auto x = oracle::tones({f0 - 0.4e6, f0 + 0.4e6}, {1.0, 1.0}, dt50, 4000, 1e-4, 6);
    const PowerSpectrum s = mem_psd(burg_fit(x, 10, dt50), linear_grid(-5e6, 5e6, 20001));
    CHECK_THAT(rabi_splitting(s), WithinAbs(0.8e6, 2e3));
    CHECK_THAT(carrier_frequency(s), WithinAbs(f0, 2e3));
}

TEST_CASE("peak list edge cases", "[mem][carrier]") {
    PowerSpectrum empty;
    CHECK(kind_of([&] { carrier_frequency(empty); }) == ErrorKind::NoPeaks);
    CHECK(kind_of([&] { rabi_splitting(empty); }) == ErrorKind::NoSplitting);

    const auto x = oracle::tones({1e6}, {1.0}, dt50, n20us, 1e-3, 7);
    const PowerSpectrum one = mem_psd(burg_fit(x, 2, dt50), linear_grid(-5e6, 5e6, 2001));
    REQUIRE(one.peaks.size() == 1);
    CHECK(kind_of([&] { rabi_splitting(one); }) == ErrorKind::NoSplitting);
}

TEST_CASE("the two highest peaks define the doublet", "[mem][carrier]") {
    const auto f = linear_grid(-5.0, 5.0, 1001);
    std::vector<double> psd(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto lor = [&](double c, double a) { return a / (1.0 + std::pow((f[i] - c) / 0.1, 2)); };
        psd[i] = lor(-2.0, 1.0) + lor(0.5, 0.3) + lor(2.0, 0.8) + lor(4.0, 0.02);
    }
    PowerSpectrum s;
    s.freq_hz = f;
    s.psd = psd;
    s.peaks = find_spectral_peaks(f, psd, 0.05);
    CHECK(s.peaks.size() == 3);  // the 2% line fails the prominence filter
    CHECK_THAT(rabi_splitting(s), WithinAbs(4.0, 0.02));
    CHECK_THAT(carrier_frequency(s), WithinAbs(0.0, 0.02));
}

TEST_CASE("frequency shift moves every peak", "[mem][property]") {
    const double shift = 3.3e6;
    const auto grid = linear_grid(-25e6, 25e6, 50001);
    const double res = grid[1] - grid[0];
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        const auto x = oracle::tones({-2e6, 1.5e6}, {1.0, 0.6}, dt50, n20us, 0.01, seed);
        auto y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] *= std::polar(1.0, 2.0 * oracle::pi * shift * dt50 * i);
        const auto pa = peak_freqs(mem_psd(burg_fit(x, 10, dt50), grid));
        const auto pb = peak_freqs(mem_psd(burg_fit(y, 10, dt50), grid));
        REQUIRE(pa.size() == pb.size());
        for (std::size_t k = 0; k < pa.size(); ++k) CHECK_THAT(pb[k], WithinAbs(pa[k] + shift, res));
    }
}

TEST_CASE("Burg fits are deterministic", "[mem][property]") {
    const auto x = oracle::tones({-2e6, 1.5e6}, {1.0, 0.6}, dt50, n20us, 0.01, 3);
    const ArModel a = burg_fit(x, 12, dt50);
    const ArModel b = burg_fit(x, 12, dt50);
    CHECK(a.coeffs == b.coeffs);
    CHECK(a.reflection == b.reflection);
    CHECK(a.noise_var == b.noise_var);
}

TEST_CASE("Burg models are stable", "[mem][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-20e6, 20e6);
    std::uniform_int_distribution<int> ord(1, 40);
    for (int trial = 0; trial < 60; ++trial) {
        const auto x = oracle::tones({u(rng), u(rng), u(rng)}, {1.0, 0.5, 0.2}, dt50, 400,
                                     trial % 2 ? 1e-6 : 0.1, trial);
        const ArModel m = burg_fit(x, static_cast<std::size_t>(ord(rng)), dt50);
        for (const auto& k : m.reflection) CHECK(std::abs(k) <= 1.0);
        for (const auto& z : ar_roots(m)) CHECK(std::abs(z) < 1.0);
    }
    const ArModel mr = burg_fit(oracle::ar_process({-1.6, 0.9}, 2000, 4), 30);
    for (const auto& z : ar_roots(mr)) CHECK(std::abs(z) < 1.0);
}

TEST_CASE("AR roots of a known polynomial", "[mem][property]") {
    ArModel m;
    m.order = 2;
    m.coeffs = {-1.0, 0.21};  // (z - 0.7)(z - 0.3)
    auto r = ar_roots(m);
    std::sort(r.begin(), r.end(), [](cd a, cd b) { return a.real() < b.real(); });
    CHECK_THAT(r[0].real(), WithinAbs(0.3, 1e-12));
    CHECK_THAT(r[1].real(), WithinAbs(0.7, 1e-12));
}

TEST_CASE("analytic signal of a cosine", "[mem][analytic]") {
    const std::size_t n = 1024;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2.0 * oracle::pi * 37.0 * i / n + 0.3);
    const auto z = analytic_signal(x);
    REQUIRE(z.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK_THAT(z[i].real(), WithinAbs(x[i], 1e-12));
        CHECK_THAT(z[i].imag(), WithinAbs(std::sin(2.0 * oracle::pi * 37.0 * i / n + 0.3), 1e-12));
    }
}

TEST_CASE("real-input spectrum of a real tone", "[mem][analytic]") {
    std::vector<double> x(2000);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.05);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(2.0 * oracle::pi * 4e6 * dt50 * i) + g(rng);
    const PowerSpectrum s = mem_psd(burg_fit(x, 6, dt50), linear_grid(0.0, 25e6, 25001));
    CHECK(std::abs(carrier_frequency(s) - 4e6) < 0.005 * 4e6);

    const PowerSpectrum sa = mem_psd(burg_fit(analytic_signal(x), 4, dt50), linear_grid(-25e6, 25e6, 50001));
    CHECK(std::abs(nearest(peak_freqs(sa), 4e6) - 4e6) < 0.005 * 4e6);
}
