#include "maser/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "maser/error.hpp"
#include "maser/ode.hpp"
#include "maser/pulse_metrics.hpp"
#include "maser/random.hpp"

namespace maser {

double GainMediumParams::g_eff() const { return g_single * std::sqrt(n_spins); }

void GainMediumParams::validate() const {
    if (!(n_spins > 0.0 && g_single > 0.0 && t1 > 0.0 && t2 > 0.0)) {
        fail(ErrorKind::InvalidArgument, "gain medium parameters must be positive");
    }
    if (!(t2 <= 2.0 * t1)) fail(ErrorKind::InvalidArgument, "t2 must not exceed 2 t1");
    if (!(pump_efficiency > 0.0 && pump_efficiency <= 1.0)) {
        fail(ErrorKind::InvalidArgument, "pump_efficiency must lie in (0, 1]");
    }
}

void PumpPulse::validate() const {
    if (!(energy_j >= 0.0) || !std::isfinite(energy_j)) {
        fail(ErrorKind::InvalidArgument, "pump energy must be >= 0");
    }
    if (!(duration_s > 0.0) || !(wavelength_m > 0.0)) {
        fail(ErrorKind::InvalidArgument, "pump duration and wavelength must be > 0");
    }
    if (!single_shot && !(rep_rate_hz >= kMinRepRateHz && rep_rate_hz <= kMaxRepRateHz)) {
        fail(ErrorKind::InvalidArgument, "repetition rate must lie in [0.5, 10] Hz");
    }
}

void SimConfig::validate() const {
    resonator.validate();
    medium.validate();
    pump.validate();
    if (!(duration_s > 0.0) || !(output_dt_s > 0.0) || !(noise_dt_s > 0.0)) {
        fail(ErrorKind::InvalidArgument, "duration, output_dt and noise_dt must be > 0");
    }
    if (output_dt_s > duration_s) fail(ErrorKind::InvalidArgument, "output_dt exceeds duration");
    if (!(coupling_efficiency > 0.0 && coupling_efficiency <= 1.0)) {
        fail(ErrorKind::InvalidArgument, "coupling_efficiency must lie in (0, 1]");
    }
    if (!(seed_photons >= 0.0)) fail(ErrorKind::InvalidArgument, "seed_photons must be >= 0");
    if (std::abs(detuning_hz - resonator.detuning()) > 1.0) {
        fail(ErrorKind::InvalidArgument, "detuning disagrees with the resonator tuning");
    }
    if (!(integrator.rtol > 0.0) || integrator.fixed_step < 0.0) {
        fail(ErrorKind::InvalidArgument, "invalid integrator options");
    }
}

SimConfig with_resonator(SimConfig cfg, const ResonatorConfig& res) {
    cfg.resonator = res;
    cfg.detuning_hz = res.detuning();
    return cfg;
}

SimConfig with_detuning(SimConfig cfg, double detuning_hz) {
    const double f_target = cfg.resonator.f_spin + detuning_hz;
    const double h = cfg.resonator.tuning.height_for(f_target);
    ResonatorConfig res = tune_ceiling(cfg.resonator, h);
    res.f_mode = f_target;  // exact, the table inverse may round by an ulp
    return with_resonator(std::move(cfg), res);
}

double photon_energy(double wavelength_m) { return kPlanck * kSpeedOfLight / wavelength_m; }

double deposit_inversion(const GainMediumParams& medium, const PumpPulse& pump) {
    const double photons = pump.energy_j / photon_energy(pump.wavelength_m);
    return std::min(medium.n_spins, medium.pump_efficiency * photons);
}

double analytic_threshold_inversion(const GainMediumParams& medium, double kappa) {
    return kappa / (2.0 * medium.g_single * medium.g_single * medium.t2);
}

double output_power(const SimConfig& cfg, double n_photons) {
    const double kappa = cavity_decay_rate(cfg.resonator.q_loaded, cfg.resonator.f_mode).kappa_rad_s;
    return cfg.coupling_efficiency * kappa * n_photons * kPlanck * cfg.resonator.f_spin;
}

MaserEnvelope simulate_burst(const SimConfig& cfg) {
    cfg.validate();
    const GainMediumParams& m = cfg.medium;
    const double n_spins = m.n_spins;
    const double g = m.g_eff();
    const double kappa = cavity_decay_rate(cfg.resonator.q_loaded, cfg.resonator.f_mode).kappa_rad_s;
    const double dw = kTwoPi * cfg.detuning_hz;
    const double w_eq = -n_spins;

    // Output and noise knots; both grids start at t = 0.
    const auto n_out = static_cast<std::size_t>(std::floor(cfg.duration_s / cfg.output_dt_s + 1e-9)) + 1;
    const auto n_noise = static_cast<std::size_t>(std::ceil(cfg.duration_s / cfg.noise_dt_s - 1e-9));

    std::vector<std::complex<double>> xi(n_noise + 1, 0.0);
    if (cfg.seed_photons > 0.0) {
        GaussianSource rng(cfg.seed);
        const double var = kappa * cfg.seed_photons / cfg.noise_dt_s;
        for (auto& z : xi) z = rng.complex_normal(var);
        // Mirrored noise keeps +D and -D runs exact conjugates of each other.
        if (cfg.detuning_hz < 0.0) {
            for (auto& z : xi) z = std::conj(z);
        }
    }

    using Stepper = DormandPrince<5>;
    Stepper::State y{0.0, 0.0, 0.0, 0.0, cfg.initial_w.value_or(deposit_inversion(m, cfg.pump))};
    if (std::abs(y[4]) > n_spins) fail(ErrorKind::InvalidArgument, "initial inversion exceeds n_spins");
    const double rtol = cfg.integrator.rtol;
    Stepper stepper(rtol, {1e-6, 1e-6, 1e-6, 1e-6, rtol * n_spins}, cfg.integrator.min_step);

    std::complex<double> xi_now = 0.0;
    auto rhs = [&](double, const Stepper::State& s) {
        const std::complex<double> a(s[0], s[1]);
        const std::complex<double> v(s[2], s[3]);
        const double w = s[4];
        const std::complex<double> da =
            -(std::complex<double>(0.5 * kappa, dw)) * a + g * v + xi_now;
        const std::complex<double> dv = -v / m.t2 + g * a * (w / n_spins);
        const double dwdt = -(w - w_eq) / m.t1 - 4.0 * g * (std::conj(a) * v).real();
        return Stepper::State{da.real(), da.imag(), dv.real(), dv.imag(), dwdt};
    };

    MaserEnvelope env;
    env.n_spins = n_spins;
    env.f_spin = cfg.resonator.f_spin;
    env.seed_photons = cfg.seed_photons;
    env.seed_power_w = output_power(cfg, cfg.seed_photons);
    env.t.reserve(n_out);
    const double p_per_photon = output_power(cfg, 1.0);
    auto record = [&](double t) {
        const std::complex<double> a(y[0], y[1]);
        const double n = std::norm(a);
        if (!std::isfinite(n) || !std::isfinite(y[4])) {
            fail(ErrorKind::NonPhysicalState, "non-finite state at t = " + std::to_string(t));
        }
        if (std::abs(y[4]) > n_spins * (1.0 + 1e-6)) {
            fail(ErrorKind::NonPhysicalState, "inversion left [-n_spins, n_spins]");
        }
        env.t.push_back(t);
        env.a.push_back(a);
        env.n_photons.push_back(n);
        env.w.push_back(y[4]);
        env.p_out.push_back(p_per_photon * n);
    };

    record(0.0);
    double h = 0.0;
    std::size_t next_out = 1;
    std::size_t next_noise = 1;
    double t = 0.0;
    while (next_out < n_out) {
        const double t_out = static_cast<double>(next_out) * cfg.output_dt_s;
        const double t_noise = static_cast<double>(next_noise) * cfg.noise_dt_s;
        const double t_next = std::min(t_out, t_noise);
        const std::size_t k = std::min(n_noise, static_cast<std::size_t>(
                                                    std::floor(t / cfg.noise_dt_s + 1e-9)));
        xi_now = xi[k];
        if (cfg.integrator.fixed_step > 0.0) {
            const auto steps = static_cast<std::size_t>(
                std::max(1.0, std::ceil((t_next - t) / cfg.integrator.fixed_step - 1e-9)));
            stepper.integrate_fixed(rhs, t, t_next, y, steps);
        } else {
            stepper.integrate(rhs, t, t_next, y, h);
        }
        t = t_next;
        const double tol = 1e-9 * std::min(cfg.output_dt_s, cfg.noise_dt_s);
        if (std::abs(t - t_noise) <= tol) ++next_noise;
        if (std::abs(t - t_out) <= tol) {
            record(t_out);
            ++next_out;
        }
    }
    return env;
}

bool burst_present(const MaserEnvelope& env) {
    if (env.n_photons.empty()) return false;
    const double mx = *std::max_element(env.n_photons.begin(), env.n_photons.end());
    return mx > 100.0 * std::max(env.seed_photons, 1.0);
}

double emitted_frequency(const MaserEnvelope& env) {
    if (!burst_present(env)) fail(ErrorKind::NoBurst, "no burst above the seed level");
    const double mx = *std::max_element(env.n_photons.begin(), env.n_photons.end());
    const double dt = env.dt();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k + 1 < env.size(); ++k) {
        const double wgt = 0.5 * (env.n_photons[k] + env.n_photons[k + 1]);
        if (wgt < 0.01 * mx) continue;
        // rotating-frame phase runs backwards for a physically higher frequency
        const double dphi = std::arg(env.a[k + 1] * std::conj(env.a[k]));
        num += wgt * (-dphi / (kTwoPi * dt));
        den += wgt;
    }
    return env.f_spin + num / den;
}

MaserTrace synthesize_scope_trace(const MaserEnvelope& env, double carrier_hz,
                                  double sample_rate_hz, double load_ohms) {
    if (!(carrier_hz > 0.0) || !(sample_rate_hz >= 4.0 * carrier_hz)) {
        fail(ErrorKind::UndersampledCarrier, "sample rate must be at least 4x the carrier");
    }
    if (!(load_ohms > 0.0)) fail(ErrorKind::InvalidArgument, "load must be > 0");
    if (env.size() < 2) fail(ErrorKind::EmptyTrace, "envelope needs at least 2 samples");

    // physical complex amplitude: conjugate of the rotating-frame field
    std::vector<std::complex<double>> c(env.size());
    for (std::size_t k = 0; k < env.size(); ++k) {
        const double mag = std::abs(env.a[k]);
        const double volts = std::sqrt(env.p_out[k] * load_ohms);
        c[k] = mag > 0.0 ? volts * std::conj(env.a[k]) / mag : 0.0;
    }

    MaserTrace tr;
    tr.sample_rate_hz = sample_rate_hz;
    tr.load_ohms = load_ohms;
    tr.carrier_hint_hz = carrier_hz;
    const double t0 = env.t.front();
    const double dt_env = env.dt();
    const double span = env.t.back() - t0;
    const auto n = static_cast<std::size_t>(std::floor(span * sample_rate_hz + 1e-9)) + 1;
    tr.t.resize(n);
    tr.v.resize(n);

    constexpr int kLobes = 8;
    const auto m = static_cast<long>(env.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) / sample_rate_hz;
        const double x = (t - t0) / dt_env;
        const long base = static_cast<long>(std::floor(x));
        const double frac = x - static_cast<double>(base);
        std::complex<double> acc = 0.0;
        double wsum = 0.0;
        if (frac < 1e-12) {
            acc = c[static_cast<std::size_t>(std::min(base, m - 1))];
            wsum = 1.0;
        } else {
            for (long j = base - kLobes + 1; j <= base + kLobes; ++j) {
                if (j < 0 || j >= m) continue;
                const double u = x - static_cast<double>(j);
                const double pu = kPi * u;
                const double wgt = std::sin(pu) * std::sin(pu / kLobes) / (pu * pu / kLobes);
                acc += wgt * c[static_cast<std::size_t>(j)];
                wsum += wgt;
            }
        }
        const std::complex<double> amp = acc / wsum;
        const double ph = kTwoPi * std::fmod(carrier_hz * t, 1.0);
        tr.t[i] = t;
        tr.v[i] = amp.real() * std::cos(ph) - amp.imag() * std::sin(ph);
    }
    return tr;
}

SweepSummary summarize(const MaserEnvelope& env) {
    SweepSummary s;
    s.peak_power_w = *std::max_element(env.p_out.begin(), env.p_out.end());
    s.peak_photons = *std::max_element(env.n_photons.begin(), env.n_photons.end());
    s.burst = burst_present(env);
    if (!s.burst) return s;
    const AmplitudeSeries amp = amplitude_of(env);
    try {
        s.delay_s = delay_to_peak(amp);
    } catch (const MaserError&) {
    }
    try {
        s.rabi_hz = rabi_frequency_td(amp);
    } catch (const MaserError&) {
    }
    s.emitted_hz = emitted_frequency(env);
    return s;
}

std::vector<SweepEntry> detuning_sweep(const SimConfig& base, const std::vector<double>& detunings,
                                       bool keep_envelopes) {
    std::vector<SweepEntry> out;
    out.reserve(detunings.size());
    for (double d : detunings) {
        SweepEntry e;
        e.detuning_hz = d;
        try {
            MaserEnvelope env = simulate_burst(with_detuning(base, d));
            e.summary = summarize(env);
            if (keep_envelopes) e.envelope = std::move(env);
        } catch (const MaserError& err) {
            e.error = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace maser
