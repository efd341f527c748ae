#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "maser/analysis.hpp"
#include "maser/calibration.hpp"
#include "maser/io.hpp"

namespace maser {

struct ShotRecord {
    std::uint64_t id = 0;
    std::string timestamp;  // UTC, ISO 8601
    std::uint64_t seed = 0;
    Json config;  // immutable snapshot
    PulseMetrics metrics;
    bool mased = false;
    double peak_photons = 0.0;
    std::optional<double> rabi_splitting_hz;
    std::vector<SpectralPeak> peaks;
};

Json to_json(const ShotRecord& r);
ShotRecord shot_from_json(const Json& j);

struct BenchOptions {
    fs::path run_dir;
    std::uint64_t master_seed = 1;
    double sample_rate_hz = 6e9;
    double s11_span_linewidths = 20.0;
    std::size_t s11_points = 801;
    AnalysisOptions analysis;
};

/// Run directory from $MASER_RUN_DIR, falling back to `fallback`.
fs::path resolve_run_dir(const fs::path& fallback);

namespace shot_files {
inline constexpr const char* kTrace = "trace.csv";
inline constexpr const char* kTraceSidecar = "trace.json";
inline constexpr const char* kEnvelope = "envelope.csv";
inline constexpr const char* kSpectrum = "spectrum.csv";
inline constexpr const char* kPeaks = "peaks.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kRecord = "record.json";
}  // namespace shot_files

enum class ExportFormat { CsvBundle, JsonBundle };

/// One virtual instrument. Mutations are serialized; reads take a shared lock
/// that a running simulation never holds.
class BenchSession {
public:
    using Listener = std::function<void(const std::string& event, const Json& payload)>;

    /// Creates run_dir/shots if needed and resumes any shots already there.
    explicit BenchSession(BenchOptions opts, SimConfig base = default_sim_config());

    ReflectionTrace tune_height(double height_mm);
    ReflectionTrace tune_frequency(double f_hz);
    ReflectionTrace tune_step(double step_hz);

    ReflectionTrace s11(std::optional<double> span_hz = std::nullopt,
                        std::optional<std::size_t> points = std::nullopt) const;

    ShotRecord fire(std::optional<double> energy_j = std::nullopt);

    std::vector<ShotRecord> shots() const;
    ShotRecord shot(std::uint64_t id) const;  // throws NotFound
    fs::path shot_dir(std::uint64_t id) const;
    Json state() const;
    SimConfig config() const;
    const BenchOptions& options() const { return opts_; }
    bool busy() const;

    /// Copies a persisted shot into dest (created if missing).
    fs::path export_shot(std::uint64_t id, const fs::path& dest, ExportFormat format) const;

    int subscribe(Listener fn);
    void unsubscribe(int token);

    /// Shot log reconstructed from a run directory.
    static std::vector<ShotRecord> load_shot_log(const fs::path& run_dir);

private:
    ReflectionTrace retune(const ResonatorConfig& res);
    void persist_session() const;
    void emit(const std::string& event, const Json& payload);

    BenchOptions opts_;
    SimConfig cfg_;
    std::vector<ShotRecord> log_;
    std::uint64_t next_id_ = 1;
    bool busy_ = false;

    mutable std::mutex mutate_mu_;
    mutable std::shared_mutex state_mu_;
    std::mutex listen_mu_;
    std::map<int, Listener> listeners_;
    int next_token_ = 1;
};

/// Metrics stored in an exported or persisted shot directory.
PulseMetrics import_metrics(const fs::path& dir);

/// Per-shot noise seed derived from the master seed.
std::uint64_t shot_seed(std::uint64_t master_seed, std::uint64_t shot_id);

Json s11_to_json(const ReflectionTrace& tr);

}  // namespace maser
