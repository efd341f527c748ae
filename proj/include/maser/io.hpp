#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "maser/analysis.hpp"
#include "maser/dynamics.hpp"
#include "maser/mem_spectral.hpp"
#include "maser/pulse_metrics.hpp"
#include "maser/resonator.hpp"

namespace maser {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Configuration documents use explicit units in key names. Loading overlays
// the given keys on top of `base`, so partial files are valid.
Json to_json(const ResonatorConfig& r);
Json to_json(const GainMediumParams& m);
Json to_json(const PumpPulse& p);
Json to_json(const SimConfig& c);
ResonatorConfig resonator_from_json(const Json& j, ResonatorConfig base);
GainMediumParams medium_from_json(const Json& j, GainMediumParams base);
PumpPulse pump_from_json(const Json& j, PumpPulse base);
/// Detuning keys retune the resonator through its tuning curve.
SimConfig sim_config_from_json(const Json& j, SimConfig base);

Json to_json(const PulseMetrics& m);
PulseMetrics metrics_from_json(const Json& j);
Json to_json(const std::vector<SpectralPeak>& peaks);
std::vector<SpectralPeak> peaks_from_json(const Json& j);
Json to_json(const QFactorEstimate& q);
Json to_json(const CouplingClass& c);

Json read_json_file(const fs::path& path);
void write_json_file(const fs::path& path, const Json& j);
void write_text_file(const fs::path& path, const std::string& text);
std::string read_text_file(const fs::path& path);

/// Rows of numeric CSV after a single header line; ParseError names the row.
std::vector<std::vector<double>> parse_csv(const std::string& text, std::size_t columns,
                                           const std::string& what);

std::string s11_csv(const ReflectionTrace& tr);
ReflectionTrace parse_s11_csv(const std::string& text);

std::string envelope_csv(const MaserEnvelope& env);
MaserEnvelope parse_envelope_csv(const std::string& text);

std::string trace_csv(const MaserTrace& tr);
Json trace_sidecar(const MaserTrace& tr, const Json& config_snapshot);
/// Reads `<stem>.csv` plus the `<stem>.json` sidecar next to it.
MaserTrace read_trace(const fs::path& csv_path);
void write_trace(const fs::path& csv_path, const MaserTrace& tr, const Json& config_snapshot);

std::string spectrum_csv(const PowerSpectrum& s);
PowerSpectrum parse_spectrum_csv(const std::string& text);

std::string format_double(double v);

}  // namespace maser
