#include "maser/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "maser/error.hpp"
#include "maser/pulse_metrics.hpp"

namespace maser {

namespace {

double peak_photons(const MaserEnvelope& env) {
    return *std::max_element(env.n_photons.begin(), env.n_photons.end());
}

}  // namespace

SimConfig make_sim_config(const GainMediumParams& medium, double energy_j,
                          double coupling_efficiency, std::uint64_t seed) {
    SimConfig cfg;
    cfg.resonator = default_resonator();
    cfg.detuning_hz = cfg.resonator.detuning();
    cfg.medium = medium;
    cfg.pump.energy_j = energy_j;
    cfg.coupling_efficiency = coupling_efficiency;
    cfg.seed = seed;
    return cfg;
}

double empirical_threshold_inversion(const SimConfig& base, int bisections) {
    SimConfig cfg = base;
    const double n = cfg.medium.n_spins;
    auto bursts = [&](double w) {
        cfg.initial_w = w;
        return burst_present(simulate_burst(cfg));
    };
    double lo = 0.0;
    double hi = n;
    if (!bursts(hi)) fail(ErrorKind::NoBurst, "no burst even at full inversion");
    for (int i = 0; i < bisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        (bursts(mid) ? hi : lo) = mid;
    }
    return hi;
}

CalibrationResult calibrate(const MediumShape& shape, const CalibrationTargets& targets) {
    if (!(shape.g_eff > 0.0 && shape.t1 > 0.0 && shape.t2 > 0.0)) {
        fail(ErrorKind::InvalidArgument, "medium shape must be positive");
    }
    const double target_mw = dbm_to_mw(targets.peak_power_dbm);
    const double ratio = targets.operating_energy_j / targets.threshold_energy_j;

    GainMediumParams medium;
    medium.t1 = shape.t1;
    medium.t2 = shape.t2;
    medium.pump_efficiency = 1.0;
    double n_spins = targets.initial_n_spins;

    CalibrationResult out;
    for (int it = 1; it <= targets.max_power_iterations; ++it) {
        medium.n_spins = n_spins;
        medium.g_single = shape.g_eff / std::sqrt(n_spins);
        SimConfig cfg = make_sim_config(medium, targets.operating_energy_j,
                                        targets.coupling_efficiency, targets.seed);
        const double w_thr = empirical_threshold_inversion(cfg, targets.threshold_bisections);
        cfg.initial_w = std::min(n_spins, ratio * w_thr);
        const MaserEnvelope env = simulate_burst(cfg);
        const double p_mw = output_power(cfg, peak_photons(env)) * 1e3;

        out.threshold_inversion = w_thr;
        out.power_iterations = it;
        if (std::abs(p_mw / target_mw - 1.0) <= targets.power_rel_tol) break;
        // dynamics are invariant under (n_spins, w, n) -> s (n_spins, w, n)
        // at fixed g_eff, apart from the absolute seed level
        n_spins *= target_mw / p_mw;
    }

    const double photons = targets.threshold_energy_j / photon_energy(kPumpWavelengthM);
    medium.pump_efficiency = out.threshold_inversion / photons;
    if (!(medium.pump_efficiency > 0.0 && medium.pump_efficiency <= 1.0)) {
        fail(ErrorKind::NonPhysicalState, "calibrated pump efficiency outside (0, 1]");
    }
    out.medium = medium;
    out.coupling_efficiency = targets.coupling_efficiency;
    out.operating_energy_j = targets.operating_energy_j;
    out.seed = targets.seed;

    // Verify with the pump path the library uses, not the override.
    const SimConfig cfg = make_sim_config(medium, targets.operating_energy_j,
                                          targets.coupling_efficiency, targets.seed);
    const MaserEnvelope env = simulate_burst(cfg);
    out.peak_power_dbm = mw_to_dbm(output_power(cfg, peak_photons(env)) * 1e3);
    out.delay_s = delay_to_peak(env);
    try {
        out.rabi_hz = rabi_frequency_td(env);
    } catch (const MaserError&) {
    }
    out.analytic_threshold_inversion =
        analytic_threshold_inversion(medium, cavity_decay_rate(cfg.resonator.q_loaded,
                                                               cfg.resonator.f_mode).kappa_rad_s);
    out.threshold_energy_j = out.threshold_inversion / medium.pump_efficiency *
                             photon_energy(kPumpWavelengthM);
    return out;
}

CalibrationResult compiled_calibration() {
    // output of calibrate() with default shape and targets, see data/calibrated_defaults.json
    CalibrationResult r;
    r.medium.n_spins = 2317387231715285.5;
    r.medium.g_single = 0.31022503491083986;
    r.medium.t1 = MediumShape{}.t1;
    r.medium.t2 = MediumShape{}.t2;
    r.medium.pump_efficiency = 0.0093243653181098816;
    r.coupling_efficiency = 0.3;
    r.operating_energy_j = kMeasuredPumpEnergyJ;
    r.seed = 1;
    r.threshold_inversion = 174804343746268.37;
    r.threshold_energy_j = kThresholdPumpEnergyJ;
    r.analytic_threshold_inversion = 40426639552824.29;
    r.peak_power_dbm = -4.997175346790349;
    r.delay_s = 3.0819185772739635e-06;
    r.rabi_hz = 1691073.658351619;
    r.power_iterations = 3;
    return r;
}

GainMediumParams default_medium() { return compiled_calibration().medium; }

SimConfig default_sim_config() {
    const CalibrationResult r = compiled_calibration();
    return make_sim_config(r.medium, r.operating_energy_j, r.coupling_efficiency, r.seed);
}

}  // namespace maser
