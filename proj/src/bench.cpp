#include "maser/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include "maser/error.hpp"
#include "maser/random.hpp"

namespace maser {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

Json to_json(const ShotRecord& r) {
    return {{"id", r.id},
            {"timestamp", r.timestamp},
            {"seed", r.seed},
            {"mased", r.mased},
            {"peak_photons", r.peak_photons},
            {"rabi_splitting_hz", r.rabi_splitting_hz ? Json(*r.rabi_splitting_hz) : Json(nullptr)},
            {"metrics", to_json(r.metrics)},
            {"peaks", to_json(r.peaks)},
            {"config", r.config}};
}

ShotRecord shot_from_json(const Json& j) {
    ShotRecord r;
    try {
        r.id = j.at("id").get<std::uint64_t>();
        r.timestamp = j.value("timestamp", "");
        r.seed = j.at("seed").get<std::uint64_t>();
        r.mased = j.at("mased").get<bool>();
        r.peak_photons = j.value("peak_photons", 0.0);
        if (j.contains("rabi_splitting_hz") && !j.at("rabi_splitting_hz").is_null()) {
            r.rabi_splitting_hz = j.at("rabi_splitting_hz").get<double>();
        }
        r.metrics = metrics_from_json(j.at("metrics"));
        if (j.contains("peaks")) r.peaks = peaks_from_json(j.at("peaks"));
        r.config = j.value("config", Json::object());
    } catch (const Json::exception& e) {
        fail(ErrorKind::ParseError, std::string("shot record: ") + e.what());
    }
    return r;
}

fs::path resolve_run_dir(const fs::path& fallback) {
    if (const char* env = std::getenv("MASER_RUN_DIR"); env && *env) return fs::path(env);
    return fallback;
}

std::uint64_t shot_seed(std::uint64_t master_seed, std::uint64_t shot_id) {
    return mix_seed(master_seed ^ mix_seed(shot_id));
}

Json s11_to_json(const ReflectionTrace& tr) {
    Json f = Json::array(), re = Json::array(), im = Json::array();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        f.push_back(tr.freq_hz[i]);
        re.push_back(tr.s11[i].real());
        im.push_back(tr.s11[i].imag());
    }
    Json out = {{"freq_hz", f}, {"s11_re", re}, {"s11_im", im}};
    try {
        out["q"] = to_json(estimate_q_loaded(tr));
        out["coupling"] = to_json(classify_coupling(tr));
    } catch (const MaserError& e) {
        out["q"] = nullptr;
        out["q_error"] = e.what();
    }
    return out;
}

BenchSession::BenchSession(BenchOptions opts, SimConfig base) : opts_(std::move(opts)), cfg_(std::move(base)) {
    if (opts_.run_dir.empty()) fail(ErrorKind::InvalidArgument, "run_dir is required");
    std::error_code ec;
    fs::create_directories(opts_.run_dir / "shots", ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + opts_.run_dir.string() + ": " + ec.message());
    cfg_.validate();

    const fs::path session_file = opts_.run_dir / "session.json";
    if (fs::exists(session_file)) {
        const Json j = read_json_file(session_file);
        if (j.contains("config")) cfg_ = sim_config_from_json(j.at("config"), cfg_);
        if (j.contains("master_seed")) opts_.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    log_ = load_shot_log(opts_.run_dir);
    if (!log_.empty()) next_id_ = log_.back().id + 1;
    persist_session();
}

std::vector<ShotRecord> BenchSession::load_shot_log(const fs::path& run_dir) {
    const fs::path shots = run_dir / "shots";
    if (!fs::is_directory(shots)) fail(ErrorKind::IoFailure, "no shots directory in " + run_dir.string());
    std::vector<ShotRecord> out;
    for (const auto& entry : fs::directory_iterator(shots)) {
        const fs::path rec = entry.path() / shot_files::kRecord;
        if (entry.is_directory() && fs::exists(rec)) out.push_back(shot_from_json(read_json_file(rec)));
    }
    std::sort(out.begin(), out.end(), [](const ShotRecord& a, const ShotRecord& b) { return a.id < b.id; });
    return out;
}

void BenchSession::persist_session() const {
    write_json_file(opts_.run_dir / "session.json",
                    {{"master_seed", opts_.master_seed},
                     {"next_shot_id", next_id_},
                     {"config", to_json(cfg_)}});
}

ReflectionTrace BenchSession::s11(std::optional<double> span_hz, std::optional<std::size_t> points) const {
    ResonatorConfig res;
    {
        std::shared_lock lock(state_mu_);
        res = cfg_.resonator;
    }
    const double linewidth = cavity_decay_rate(res.q_loaded, res.f_mode).linewidth_hz;
    const double span = span_hz.value_or(opts_.s11_span_linewidths * linewidth);
    const std::size_t n = points.value_or(opts_.s11_points);
    if (!(span > 0.0) || n < 3) fail(ErrorKind::InvalidGrid, "span must be > 0 and points >= 3");
    return reflection_trace(res, res.f_mode - 0.5 * span, res.f_mode + 0.5 * span, n);
}

ReflectionTrace BenchSession::retune(const ResonatorConfig& res) {
    {
        std::unique_lock lock(state_mu_);
        cfg_ = with_resonator(cfg_, res);
        persist_session();
    }
    ReflectionTrace tr = s11();
    Json payload = s11_to_json(tr);
    payload["state"] = state();
    emit("s11-updated", payload);
    return tr;
}

ReflectionTrace BenchSession::tune_height(double height_mm) {
    std::lock_guard guard(mutate_mu_);
    return retune(tune_ceiling(config().resonator, height_mm));
}

ReflectionTrace BenchSession::tune_frequency(double f_hz) {
    std::lock_guard guard(mutate_mu_);
    ResonatorConfig res = config().resonator;
    res = tune_ceiling(res, res.tuning.height_for(f_hz));
    res.f_mode = f_hz;
    return retune(res);
}

ReflectionTrace BenchSession::tune_step(double step_hz) {
    std::lock_guard guard(mutate_mu_);
    ResonatorConfig res = config().resonator;
    const double f = res.f_mode + step_hz;
    res = tune_ceiling(res, res.tuning.height_for(f));
    res.f_mode = f;
    return retune(res);
}

ShotRecord BenchSession::fire(std::optional<double> energy_j) {
    std::lock_guard guard(mutate_mu_);
    SimConfig cfg;
    std::uint64_t id = 0;
    {
        std::unique_lock lock(state_mu_);
        cfg = cfg_;
        id = next_id_;
        busy_ = true;
    }
    struct Idle {
        BenchSession* s;
        ~Idle() {
            std::unique_lock lock(s->state_mu_);
            s->busy_ = false;
        }
    } idle{this};

    if (energy_j) cfg.pump.energy_j = *energy_j;
    cfg.seed = shot_seed(opts_.master_seed, id);

    // Simulation and analysis run without the state lock so readers proceed.
    const MaserEnvelope env = simulate_burst(cfg);
    const MaserTrace trace = synthesize_scope_trace(env, env.f_spin, opts_.sample_rate_hz);
    const TraceAnalysis an = analyze_trace(trace, opts_.analysis);

    ShotRecord rec;
    rec.id = id;
    rec.timestamp = utc_now();
    rec.seed = cfg.seed;
    rec.config = to_json(cfg);
    rec.metrics = an.metrics;
    rec.peak_photons = *std::max_element(env.n_photons.begin(), env.n_photons.end());
    rec.mased = an.burst && rec.metrics.p_peak_mw * 1e-3 > 100.0 * env.seed_power_w;
    rec.rabi_splitting_hz = an.rabi_splitting_hz;
    if (an.spectrum) rec.peaks = an.spectrum->peaks;

    const fs::path dir = opts_.run_dir / "shots" / std::to_string(id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string());
    write_trace(dir / shot_files::kTrace, trace, rec.config);
    write_text_file(dir / shot_files::kEnvelope, envelope_csv(env));
    if (an.spectrum) write_text_file(dir / shot_files::kSpectrum, spectrum_csv(*an.spectrum));
    write_json_file(dir / shot_files::kPeaks, to_json(rec.peaks));
    write_json_file(dir / shot_files::kMetrics, to_json(rec.metrics));
    write_json_file(dir / shot_files::kConfig, rec.config);
    // the record goes last: its presence marks a committed shot
    write_json_file(dir / shot_files::kRecord, to_json(rec));

    {
        std::unique_lock lock(state_mu_);
        log_.push_back(rec);
        next_id_ = id + 1;
        persist_session();
    }
    Json payload = to_json(rec);
    payload.erase("config");
    emit("shot-completed", payload);
    return rec;
}

std::vector<ShotRecord> BenchSession::shots() const {
    std::shared_lock lock(state_mu_);
    return log_;
}

ShotRecord BenchSession::shot(std::uint64_t id) const {
    std::shared_lock lock(state_mu_);
    for (const auto& r : log_) {
        if (r.id == id) return r;
    }
    fail(ErrorKind::NotFound, "no shot " + std::to_string(id));
}

fs::path BenchSession::shot_dir(std::uint64_t id) const {
    shot(id);
    return opts_.run_dir / "shots" / std::to_string(id);
}

SimConfig BenchSession::config() const {
    std::shared_lock lock(state_mu_);
    return cfg_;
}

bool BenchSession::busy() const {
    std::shared_lock lock(state_mu_);
    return busy_;
}

Json BenchSession::state() const {
    std::shared_lock lock(state_mu_);
    const ResonatorConfig& r = cfg_.resonator;
    Json shots = Json::array();
    for (const auto& s : log_) shots.push_back(s.id);
    return {{"f_mode_hz", r.f_mode},
            {"f_spin_hz", r.f_spin},
            {"detuning_hz", cfg_.detuning_hz},
            {"ceiling_height_mm", r.ceiling_height_mm},
            {"height_range_mm", {r.tuning.min_height(), r.tuning.max_height()}},
            {"frequency_range_hz", {r.tuning.min_frequency(), r.tuning.max_frequency()}},
            {"q_loaded", r.q_loaded},
            {"coupling_beta", r.coupling_beta},
            {"pump", to_json(cfg_.pump)},
            {"busy", busy_},
            {"master_seed", opts_.master_seed},
            {"next_shot_id", next_id_},
            {"shot_ids", shots},
            {"run_dir", opts_.run_dir.string()}};
}

fs::path BenchSession::export_shot(std::uint64_t id, const fs::path& dest, ExportFormat format) const {
    const fs::path src = shot_dir(id);
    if (!fs::is_directory(src)) fail(ErrorKind::IoFailure, "shot directory missing: " + src.string());
    std::error_code ec;
    fs::create_directories(dest, ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + dest.string());
    if (format == ExportFormat::CsvBundle) {
        for (const char* name : {shot_files::kTrace, shot_files::kTraceSidecar, shot_files::kEnvelope,
                                 shot_files::kSpectrum, shot_files::kPeaks, shot_files::kMetrics,
                                 shot_files::kConfig, shot_files::kRecord}) {
            if (!fs::exists(src / name)) continue;
            fs::copy_file(src / name, dest / name, fs::copy_options::overwrite_existing, ec);
            if (ec) fail(ErrorKind::IoFailure, "copy failed for " + std::string(name));
        }
        return dest;
    }
    Json bundle = read_json_file(src / shot_files::kRecord);
    bundle["trace_sidecar"] = read_json_file(src / shot_files::kTraceSidecar);
    bundle["trace_csv"] = read_text_file(src / shot_files::kTrace);
    bundle["envelope_csv"] = read_text_file(src / shot_files::kEnvelope);
    if (fs::exists(src / shot_files::kSpectrum)) {
        bundle["spectrum_csv"] = read_text_file(src / shot_files::kSpectrum);
    }
    const fs::path out = dest / ("shot_" + std::to_string(id) + ".json");
    write_json_file(out, bundle);
    return out;
}

PulseMetrics import_metrics(const fs::path& dir) {
    if (fs::is_regular_file(dir)) return metrics_from_json(read_json_file(dir).at("metrics"));
    return metrics_from_json(read_json_file(dir / shot_files::kMetrics));
}

int BenchSession::subscribe(Listener fn) {
    std::lock_guard lock(listen_mu_);
    listeners_[next_token_] = std::move(fn);
    return next_token_++;
}

void BenchSession::unsubscribe(int token) {
    std::lock_guard lock(listen_mu_);
    listeners_.erase(token);
}

void BenchSession::emit(const std::string& event, const Json& payload) {
    std::lock_guard lock(listen_mu_);
    for (auto& [token, fn] : listeners_) fn(event, payload);
}

}  // namespace maser
