#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "maser/dynamics.hpp"

namespace maser {

/// Shape of the gain medium that the calibration keeps fixed; the absolute
/// spin number and the pump efficiency are solved for.
struct MediumShape {
    double g_eff = 1.4934e7;  // rad/s, collective coupling
    double t1 = 4.8422e-5;
    double t2 = 5.7318e-7;
};

struct CalibrationTargets {
    double threshold_energy_j = kThresholdPumpEnergyJ;
    double operating_energy_j = kMeasuredPumpEnergyJ;
    double peak_power_dbm = -5.0;
    double coupling_efficiency = 0.3;
    std::uint64_t seed = 1;
    double initial_n_spins = 1e16;
    double power_rel_tol = 2e-3;
    int max_power_iterations = 8;
    int threshold_bisections = 30;
};

struct CalibrationResult {
    GainMediumParams medium;
    double coupling_efficiency = 0.3;
    double operating_energy_j = kMeasuredPumpEnergyJ;
    std::uint64_t seed = 1;

    // what the calibrated defaults reproduce
    double threshold_inversion = 0.0;
    double threshold_energy_j = 0.0;
    double analytic_threshold_inversion = 0.0;
    double peak_power_dbm = 0.0;
    double delay_s = 0.0;
    std::optional<double> rabi_hz;
    int power_iterations = 0;
};

/// Bare configuration (default resonator, 40 us window) built around a medium.
SimConfig make_sim_config(const GainMediumParams& medium, double energy_j,
                          double coupling_efficiency = 0.3, std::uint64_t seed = 1);

/// Smallest initial inversion that produces a burst within the window, by
/// bisection on w / n_spins.
double empirical_threshold_inversion(const SimConfig& base, int bisections = 30);

/// Solves for n_spins (peak power) and pump_efficiency (threshold energy)
/// with the medium shape held fixed.
CalibrationResult calibrate(const MediumShape& shape = {}, const CalibrationTargets& targets = {});

/// Defaults compiled into the library; equal to the stored calibration.
CalibrationResult compiled_calibration();
GainMediumParams default_medium();
SimConfig default_sim_config();

}  // namespace maser
