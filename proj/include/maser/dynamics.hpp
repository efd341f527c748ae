#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maser/resonator.hpp"

namespace maser {

struct GainMediumParams {
    double n_spins = 0.0;
    double g_single = 0.0;  // rad/s
    double t1 = 0.0;
    double t2 = 0.0;
    double pump_efficiency = 0.0;
    std::string doping = "0.1% pentacene in p-terphenyl";

    double g_eff() const;
    void validate() const;
};

struct PumpPulse {
    double energy_j = kMeasuredPumpEnergyJ;
    double wavelength_m = kPumpWavelengthM;
    double duration_s = kPumpDurationS;
    double rep_rate_hz = 1.0;
    bool single_shot = true;

    void validate() const;
};

struct IntegratorOptions {
    double rtol = 1e-8;
    /// 0 selects adaptive stepping; otherwise every step has exactly this size
    /// (rounded down so segments are covered by an integer number of steps).
    double fixed_step = 0.0;
    double min_step = 1e-16;
};

struct SimConfig {
    ResonatorConfig resonator;
    GainMediumParams medium;
    PumpPulse pump;
    double detuning_hz = 0.0;  // f_mode - f_spin
    double duration_s = 40e-6;
    double output_dt_s = 10e-9;
    std::uint64_t seed = 1;
    double coupling_efficiency = 0.3;
    /// Mean photon number the seed field alone sustains in the cavity; 0 disables it.
    double seed_photons = 1.0;
    double noise_dt_s = 10e-9;
    /// Overrides the pumped initial inversion when set.
    std::optional<double> initial_w;
    IntegratorOptions integrator;

    void validate() const;
};

/// Keeps the stored detuning consistent with the resonator.
SimConfig with_resonator(SimConfig cfg, const ResonatorConfig& res);
SimConfig with_detuning(SimConfig cfg, double detuning_hz);

struct MaserEnvelope {
    std::vector<double> t;
    std::vector<std::complex<double>> a;  // rotating frame at f_spin
    std::vector<double> n_photons;
    std::vector<double> w;
    std::vector<double> p_out;  // W

    double n_spins = 0.0;
    double f_spin = kSpinTransitionHz;
    double seed_photons = 1.0;
    double seed_power_w = 0.0;  // output power carried by seed_photons

    std::size_t size() const { return t.size(); }
    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

struct MaserTrace {
    std::vector<double> t;
    std::vector<double> v;
    double sample_rate_hz = 0.0;
    double load_ohms = kScopeLoadOhms;
    double carrier_hint_hz = kSpinTransitionHz;

    std::size_t size() const { return v.size(); }
};

double photon_energy(double wavelength_m);

/// Instantaneous inversion left by the pump: min(n_spins, eta * E / (h c / lambda)).
double deposit_inversion(const GainMediumParams& medium, const PumpPulse& pump);

/// Gain = loss inversion kappa / (2 g_single^2 t2).
double analytic_threshold_inversion(const GainMediumParams& medium, double kappa);

MaserEnvelope simulate_burst(const SimConfig& cfg);

/// Output power for a given photon number.
double output_power(const SimConfig& cfg, double n_photons);

/// True when peak photon number exceeds 100x the seed level.
bool burst_present(const MaserEnvelope& env);

/// Power-weighted mean emitted frequency (absolute Hz). Throws NoBurst.
double emitted_frequency(const MaserEnvelope& env);

/// Passband voltage v = sqrt(p_out R) cos(2 pi f_spin t - arg a), resampled
/// from the envelope with windowed-sinc interpolation.
MaserTrace synthesize_scope_trace(const MaserEnvelope& env, double carrier_hz,
                                  double sample_rate_hz, double load_ohms = kScopeLoadOhms);

struct SweepSummary {
    double peak_power_w = 0.0;
    double peak_photons = 0.0;
    std::optional<double> delay_s;
    std::optional<double> rabi_hz;
    std::optional<double> emitted_hz;
    bool burst = false;
};

struct SweepEntry {
    double detuning_hz = 0.0;
    std::optional<MaserEnvelope> envelope;
    SweepSummary summary;
    std::optional<std::string> error;
};

SweepSummary summarize(const MaserEnvelope& env);

/// One simulation per detuning with identical seed and pump; failures are
/// recorded per entry.
std::vector<SweepEntry> detuning_sweep(const SimConfig& base, const std::vector<double>& detunings,
                                       bool keep_envelopes = true);

}  // namespace maser
