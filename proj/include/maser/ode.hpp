#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "maser/error.hpp"

namespace maser {

/// Dormand-Prince 5(4) with FSAL, used segment by segment so that piecewise
/// constant forcing never straddles a step.
template <std::size_t N>
class DormandPrince {
public:
    using State = std::array<double, N>;

    DormandPrince(double rtol, State atol, double min_step)
        : rtol_(rtol), atol_(atol), min_step_(min_step) {}

    /// Advances y from t0 to t1 with adaptive steps; h carries the step-size
    /// guess between calls.
    template <class F>
    void integrate(F&& f, double t0, double t1, State& y, double& h) {
        double t = t0;
        const double span = t1 - t0;
        if (!(span > 0.0)) return;
        if (!(h > 0.0)) h = span;
        State k1 = f(t, y);
        while (t < t1) {
            bool last = false;
            double step = h;
            if (t + step >= t1 - 1e-12 * span) {
                step = t1 - t;
                last = true;
            }
            State y5, err, k7;
            attempt(f, t, y, k1, step, y5, err, k7);
            double norm = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = atol_[i] + rtol_ * std::max(std::abs(y[i]), std::abs(y5[i]));
                const double e = err[i] / sc;
                norm += e * e;
            }
            norm = std::sqrt(norm / static_cast<double>(N));
            if (!std::isfinite(norm)) norm = 1e10;
            if (norm <= 1.0) {
                t = last ? t1 : t + step;
                y = y5;
                k1 = k7;
                const double fac = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
                // keep the pre-clipping guess for the next segment
                h = last ? std::max(h, step * fac) : step * fac;
            } else {
                h = step * std::max(0.2, 0.9 * std::pow(norm, -0.25));
                if (h < min_step_) fail(ErrorKind::IntegrationFailure, "step size underflow");
            }
        }
    }

    /// Advances y from t0 to t1 in steps of exactly (t1 - t0) / n_steps.
    template <class F>
    void integrate_fixed(F&& f, double t0, double t1, State& y, std::size_t n_steps) {
        const double step = (t1 - t0) / static_cast<double>(n_steps);
        State k1 = f(t0, y);
        for (std::size_t s = 0; s < n_steps; ++s) {
            State y5, err, k7;
            attempt(f, t0 + static_cast<double>(s) * step, y, k1, step, y5, err, k7);
            y = y5;
            k1 = k7;
        }
    }

private:
    template <class F>
    static void attempt(F& f, double t, const State& y, const State& k1, double h, State& y5,
                        State& err, State& k7) {
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                         a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                         a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                         b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                         e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        State tmp;
        auto stage = [&](auto&& combine) {
            for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * combine(i);
        };
        stage([&](std::size_t i) { return a21 * k1[i]; });
        const State k2 = f(t + c2 * h, tmp);
        stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; });
        const State k3 = f(t + c3 * h, tmp);
        stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; });
        const State k4 = f(t + c4 * h, tmp);
        stage([&](std::size_t i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; });
        const State k5 = f(t + c5 * h, tmp);
        stage([&](std::size_t i) {
            return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
        });
        const State k6 = f(t + h, tmp);
        for (std::size_t i = 0; i < N; ++i) {
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        }
        k7 = f(t + h, y5);
        for (std::size_t i = 0; i < N; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }
    }

    double rtol_;
    State atol_;
    double min_step_;
};

}  // namespace maser
