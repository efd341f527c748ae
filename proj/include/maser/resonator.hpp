#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "maser/constants.hpp"

namespace maser {

/// Dielectric-loaded cavity geometry, carried as metadata only.
struct ResonatorGeometry {
    double sto_outer_diameter_mm = 12.2;
    double sto_inner_diameter_mm = 4.1;
    double sto_height_mm = 8.7;
    double cavity_inner_diameter_mm = 22.0;
    double stand_height_mm = 4.5;
    double crystal_outer_diameter_mm = 3.5;
    double crystal_height_mm = 8.7;
};

/// Piecewise-linear ceiling-height -> mode-frequency calibration table.
/// Anchors are sorted by height and must be strictly monotone in frequency.
class TuningCurve {
public:
    TuningCurve();  // two-anchor default spanning f_spin +/- 2.5 MHz
    explicit TuningCurve(std::vector<std::pair<double, double>> anchors);

    double frequency_at(double height_mm) const;
    /// Inverse map; throws FrequencyUnreachable outside the curve.
    double height_for(double f_hz) const;

    double min_height() const { return anchors_.front().first; }
    double max_height() const { return anchors_.back().first; }
    double min_frequency() const;
    double max_frequency() const;
    const std::vector<std::pair<double, double>>& anchors() const { return anchors_; }

private:
    std::vector<std::pair<double, double>> anchors_;
};

struct ResonatorConfig {
    double f_mode = kSpinTransitionHz;
    double q_loaded = kReferenceLoadedQ;
    double q_unloaded = kReferenceLoadedQ * 1.5;
    double coupling_beta = 0.5;
    double ceiling_height_mm = 12.25;
    double f_spin = kSpinTransitionHz;
    ResonatorGeometry geometry;
    TuningCurve tuning;

    double detuning() const { return f_mode - f_spin; }
    /// Throws InvalidArgument / HeightOutOfRange on broken invariants.
    void validate() const;
};

/// Default cavity: Q_L = 2042, undercoupled (beta = 0.5), tuned onto the spin line.
ResonatorConfig default_resonator();

struct ReflectionTrace {
    std::vector<double> freq_hz;
    std::vector<std::complex<double>> s11;

    std::size_t size() const { return freq_hz.size(); }
    /// Throws InvalidGrid on length mismatch, < 3 points, non-increasing
    /// grid or |s11| > 1.
    void validate() const;
};

struct QFactorEstimate {
    double f_res = 0.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    double q_loaded = 0.0;
    double baseline_power = 1.0;  // |S11|^2 off resonance
    double dip_depth_db = 0.0;
};

enum class Coupling { Undercoupled, Critical, Overcoupled };
std::string_view to_string(Coupling c) noexcept;

struct CircleFit {
    std::complex<double> center;
    double radius = 0.0;
};

struct CouplingClass {
    Coupling kind = Coupling::Critical;
    /// Signed distance of the origin from the circle: > 0 outside, < 0 inside.
    double distance = 0.0;
    CircleFit circle;
};

struct CavityDecay {
    double kappa_rad_s = 0.0;
    double linewidth_hz = 0.0;
};

struct ReflectionNoise {
    std::uint64_t seed = 0;
    double sigma = 1e-3;  // per-quadrature standard deviation
};

struct DipOptions {
    double min_depth_db = 3.0;
};

ResonatorConfig tune_ceiling(const ResonatorConfig& cfg, double height_mm);

/// Height that puts f_mode at f_hz; throws FrequencyUnreachable.
double height_for_frequency(const ResonatorConfig& cfg, double f_hz);

/// One-port single-resonance reflection S11 = (b - 1 - 2iQ0 d)/(b + 1 + 2iQ0 d).
ReflectionTrace reflection_trace(const ResonatorConfig& cfg, double f_start, double f_stop,
                                 std::size_t n_points,
                                 std::optional<ReflectionNoise> noise = std::nullopt);

std::complex<double> reflection_at(const ResonatorConfig& cfg, double f_hz);

/// Loaded Q from the half-absorbed-power bandwidth of the S11 dip.
QFactorEstimate estimate_q_loaded(const ReflectionTrace& trace, const DipOptions& opts = {});

/// Q from already-read bandwidth edges (f_lo < f_res < f_hi).
QFactorEstimate q_from_edges(double f_lo, double f_hi, double f_res);

CouplingClass classify_coupling(const ReflectionTrace& trace, double tolerance = 0.02,
                                const DipOptions& opts = {});

/// Algebraic (Kasa) least-squares circle through complex points.
CircleFit fit_circle(const std::vector<std::complex<double>>& points);

CavityDecay cavity_decay_rate(double q_loaded, double f_res);

}  // namespace maser
