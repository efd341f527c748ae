#include "maser/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maser/error.hpp"

namespace maser {

namespace {

template <class T>
void take(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        fail(ErrorKind::ParseError, std::string("key '") + key + "': " + e.what());
    }
}

// Reads j[key] / per_si into out, if present.
void take_scaled(const Json& j, const char* key, double per_si, double& out) {
    if (!j.contains(key)) return;
    double v = 0.0;
    take(j, key, v);
    out = v / per_si;
}

Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) fail(ErrorKind::ParseError, std::string("key '") + key + "' is not a number");
    return j.at(key).get<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ------------------------------------------------------------------ configs

Json to_json(const ResonatorConfig& r) {
    Json anchors = Json::array();
    for (const auto& [h, f] : r.tuning.anchors()) anchors.push_back({h, f});
    return {{"f_mode_hz", r.f_mode},
            {"q_loaded", r.q_loaded},
            {"q_unloaded", r.q_unloaded},
            {"coupling_beta", r.coupling_beta},
            {"ceiling_height_mm", r.ceiling_height_mm},
            {"f_spin_hz", r.f_spin},
            {"tuning_anchors_mm_hz", anchors}};
}

ResonatorConfig resonator_from_json(const Json& j, ResonatorConfig r) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "resonator must be an object");
    if (j.contains("tuning_anchors_mm_hz")) {
        std::vector<std::pair<double, double>> anchors;
        for (const auto& a : j.at("tuning_anchors_mm_hz")) {
            if (!a.is_array() || a.size() != 2) fail(ErrorKind::ParseError, "tuning anchor must be [mm, hz]");
            anchors.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        r.tuning = TuningCurve(std::move(anchors));
    }
    take(j, "q_loaded", r.q_loaded);
    take(j, "q_unloaded", r.q_unloaded);
    take(j, "coupling_beta", r.coupling_beta);
    take(j, "f_spin_hz", r.f_spin);
    if (j.contains("ceiling_height_mm")) {
        double h = 0.0;
        take(j, "ceiling_height_mm", h);
        r = tune_ceiling(r, h);
    }
    take(j, "f_mode_hz", r.f_mode);
    return r;
}

Json to_json(const GainMediumParams& m) {
    return {{"n_spins", m.n_spins},
            {"g_single_rad_s", m.g_single},
            {"t1_s", m.t1},
            {"t2_s", m.t2},
            {"pump_efficiency", m.pump_efficiency},
            {"doping", m.doping}};
}

GainMediumParams medium_from_json(const Json& j, GainMediumParams m) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "medium must be an object");
    take(j, "n_spins", m.n_spins);
    take(j, "g_single_rad_s", m.g_single);
    take(j, "t1_s", m.t1);
    take(j, "t2_s", m.t2);
    take(j, "pump_efficiency", m.pump_efficiency);
    take(j, "doping", m.doping);
    return m;
}

Json to_json(const PumpPulse& p) {
    return {{"energy_mj", p.energy_j * 1e3},
            {"wavelength_nm", p.wavelength_m * 1e9},
            {"duration_ns", p.duration_s * 1e9},
            {"rep_rate_hz", p.rep_rate_hz},
            {"single_shot", p.single_shot}};
}

PumpPulse pump_from_json(const Json& j, PumpPulse p) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "pump must be an object");
    take_scaled(j, "energy_mj", 1e3, p.energy_j);
    take_scaled(j, "wavelength_nm", 1e9, p.wavelength_m);
    take_scaled(j, "duration_ns", 1e9, p.duration_s);
    take(j, "rep_rate_hz", p.rep_rate_hz);
    take(j, "single_shot", p.single_shot);
    return p;
}

Json to_json(const SimConfig& c) {
    Json j = {{"resonator", to_json(c.resonator)},
              {"medium", to_json(c.medium)},
              {"pump", to_json(c.pump)},
              {"detuning_hz", c.detuning_hz},
              {"duration_s", c.duration_s},
              {"output_dt_s", c.output_dt_s},
              {"noise_dt_s", c.noise_dt_s},
              {"seed", c.seed},
              {"coupling_efficiency", c.coupling_efficiency},
              {"seed_photons", c.seed_photons},
              {"rtol", c.integrator.rtol},
              {"fixed_step_s", c.integrator.fixed_step}};
    if (c.initial_w) j["initial_w_spins"] = *c.initial_w;
    return j;
}

SimConfig sim_config_from_json(const Json& j, SimConfig c) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "configuration must be a JSON object");
    if (j.contains("resonator")) c = with_resonator(c, resonator_from_json(j.at("resonator"), c.resonator));
    if (j.contains("medium")) c.medium = medium_from_json(j.at("medium"), c.medium);
    if (j.contains("pump")) c.pump = pump_from_json(j.at("pump"), c.pump);
    if (j.contains("detuning_hz")) {
        double d = 0.0;
        take(j, "detuning_hz", d);
        c = with_detuning(c, d);
    }
    take(j, "duration_s", c.duration_s);
    take(j, "output_dt_s", c.output_dt_s);
    take(j, "noise_dt_s", c.noise_dt_s);
    take(j, "seed", c.seed);
    take(j, "coupling_efficiency", c.coupling_efficiency);
    take(j, "seed_photons", c.seed_photons);
    take(j, "rtol", c.integrator.rtol);
    take(j, "fixed_step_s", c.integrator.fixed_step);
    if (j.contains("initial_w_spins")) c.initial_w = j.at("initial_w_spins").get<double>();
    return c;
}

// ------------------------------------------------------------------ results

Json to_json(const PulseMetrics& m) {
    return {{"v_peak_v", m.v_peak_v},
            {"p_peak_mw", m.p_peak_mw},
            {"p_peak_dbm", optional_number(m.p_peak_dbm)},
            {"delay_to_peak_s", optional_number(m.delay_to_peak_s)},
            {"rabi_freq_td_hz", optional_number(m.rabi_freq_td_hz)},
            {"carrier_est_hz", optional_number(m.carrier_est_hz)}};
}

PulseMetrics metrics_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "metrics must be an object");
    PulseMetrics m;
    take(j, "v_peak_v", m.v_peak_v);
    take(j, "p_peak_mw", m.p_peak_mw);
    m.p_peak_dbm = read_optional(j, "p_peak_dbm");
    m.delay_to_peak_s = read_optional(j, "delay_to_peak_s");
    m.rabi_freq_td_hz = read_optional(j, "rabi_freq_td_hz");
    m.carrier_est_hz = read_optional(j, "carrier_est_hz");
    return m;
}

Json to_json(const std::vector<SpectralPeak>& peaks) {
    Json a = Json::array();
    for (const auto& p : peaks) {
        a.push_back({{"freq_hz", p.freq_hz}, {"height", p.height}, {"prominence", p.prominence}});
    }
    return a;
}

std::vector<SpectralPeak> peaks_from_json(const Json& j) {
    if (!j.is_array()) fail(ErrorKind::ParseError, "peak list must be an array");
    std::vector<SpectralPeak> out;
    for (const auto& p : j) {
        SpectralPeak s;
        take(p, "freq_hz", s.freq_hz);
        take(p, "height", s.height);
        take(p, "prominence", s.prominence);
        out.push_back(s);
    }
    return out;
}

Json to_json(const QFactorEstimate& q) {
    return {{"f_res_hz", q.f_res},
            {"f_lo_hz", q.f_lo},
            {"f_hi_hz", q.f_hi},
            {"q_loaded", q.q_loaded},
            {"q_loaded_display", std::llround(q.q_loaded)},
            {"bandwidth_hz", q.f_hi - q.f_lo},
            {"dip_depth_db", q.dip_depth_db}};
}

Json to_json(const CouplingClass& c) {
    return {{"coupling", std::string(to_string(c.kind))},
            {"distance", c.distance},
            {"circle_center", {c.circle.center.real(), c.circle.center.imag()}},
            {"circle_radius", c.circle.radius}};
}

// ------------------------------------------------------------------ files

Json read_json_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::IoFailure, "cannot write " + path.string());
    os << text;
    if (!os) fail(ErrorKind::IoFailure, "short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::IoFailure, "cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::size_t columns,
                                           const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            // tolerate files without a header
            const char c = line[0];
            if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string cell = line.substr(start, end - start);
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                fail(ErrorKind::ParseError, what + " line " + std::to_string(line_no) +
                                                ": bad number '" + cell + "'");
            }
            row.push_back(v);
            start = end + 1;
        }
        if (row.size() != columns) {
            fail(ErrorKind::ParseError, what + " line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(columns) + " columns, got " +
                                            std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string s11_csv(const ReflectionTrace& tr) {
    std::string out = "freq_hz,s11_re,s11_im\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        out += format_double(tr.freq_hz[i]) + "," + format_double(tr.s11[i].real()) + "," +
               format_double(tr.s11[i].imag()) + "\n";
    }
    return out;
}

ReflectionTrace parse_s11_csv(const std::string& text) {
    ReflectionTrace tr;
    for (const auto& r : parse_csv(text, 3, "S11 CSV")) {
        tr.freq_hz.push_back(r[0]);
        tr.s11.emplace_back(r[1], r[2]);
    }
    tr.validate();
    return tr;
}

std::string envelope_csv(const MaserEnvelope& env) {
    std::string out = "t_s,a_re,a_im,n_photons,w,p_out_w\n";
    out.reserve(env.size() * 120);
    for (std::size_t i = 0; i < env.size(); ++i) {
        out += format_double(env.t[i]) + "," + format_double(env.a[i].real()) + "," +
               format_double(env.a[i].imag()) + "," + format_double(env.n_photons[i]) + "," +
               format_double(env.w[i]) + "," + format_double(env.p_out[i]) + "\n";
    }
    return out;
}

MaserEnvelope parse_envelope_csv(const std::string& text) {
    MaserEnvelope env;
    for (const auto& r : parse_csv(text, 6, "envelope CSV")) {
        env.t.push_back(r[0]);
        env.a.emplace_back(r[1], r[2]);
        env.n_photons.push_back(r[3]);
        env.w.push_back(r[4]);
        env.p_out.push_back(r[5]);
    }
    return env;
}

std::string trace_csv(const MaserTrace& tr) {
    std::string out = "t_s,v_volts\n";
    out.reserve(tr.size() * 48);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        out += format_double(tr.t[i]);
        out += ',';
        out += format_double(tr.v[i]);
        out += '\n';
    }
    return out;
}

Json trace_sidecar(const MaserTrace& tr, const Json& config_snapshot) {
    return {{"sample_rate_hz", tr.sample_rate_hz},
            {"load_ohms", tr.load_ohms},
            {"carrier_hint_hz", tr.carrier_hint_hz},
            {"config", config_snapshot}};
}

void write_trace(const fs::path& csv_path, const MaserTrace& tr, const Json& config_snapshot) {
    write_text_file(csv_path, trace_csv(tr));
    fs::path side = csv_path;
    side.replace_extension(".json");
    write_json_file(side, trace_sidecar(tr, config_snapshot));
}

MaserTrace read_trace(const fs::path& csv_path) {
    MaserTrace tr;
    for (const auto& r : parse_csv(read_text_file(csv_path), 2, "trace CSV")) {
        tr.t.push_back(r[0]);
        tr.v.push_back(r[1]);
    }
    if (tr.v.empty()) fail(ErrorKind::EmptyTrace, csv_path.string() + " has no samples");
    fs::path side = csv_path;
    side.replace_extension(".json");
    if (fs::exists(side)) {
        const Json j = read_json_file(side);
        take(j, "sample_rate_hz", tr.sample_rate_hz);
        take(j, "load_ohms", tr.load_ohms);
        take(j, "carrier_hint_hz", tr.carrier_hint_hz);
    } else if (tr.t.size() > 1) {
        tr.sample_rate_hz = static_cast<double>(tr.t.size() - 1) / (tr.t.back() - tr.t.front());
    }
    return tr;
}

std::string spectrum_csv(const PowerSpectrum& s) {
    std::string out = "freq_hz,psd_norm\n";
    for (std::size_t i = 0; i < s.freq_hz.size(); ++i) {
        out += format_double(s.freq_hz[i]) + "," + format_double(s.psd[i]) + "\n";
    }
    return out;
}

PowerSpectrum parse_spectrum_csv(const std::string& text) {
    PowerSpectrum s;
    for (const auto& r : parse_csv(text, 2, "spectrum CSV")) {
        s.freq_hz.push_back(r[0]);
        s.psd.push_back(r[1]);
    }
    if (!s.psd.empty()) {
        s.normalized = *std::max_element(s.psd.begin(), s.psd.end()) == 1.0;
    }
    return s;
}

}  // namespace maser
