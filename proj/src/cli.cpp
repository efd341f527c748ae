#include "maser/cli.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "maser/analysis.hpp"
#include "maser/bench.hpp"
#include "maser/calibration.hpp"
#include "maser/error.hpp"
#include "maser/io.hpp"
#include "maser/service.hpp"

#ifndef MASER_DATA_DIR
#define MASER_DATA_DIR "data"
#endif

namespace maser {

namespace {

void print_flat(std::ostream& out, const Json& j, const std::string& prefix = "") {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) {
            print_flat(out, *it, key);
        } else if (it->is_array()) {
            out << key << " = [" << it->size() << " items]\n";
        } else if (it->is_number_float()) {
            out << key << " = " << std::setprecision(10) << it->get<double>() << '\n';
        } else if (it->is_string()) {
            out << key << " = " << it->get<std::string>() << '\n';
        } else {
            out << key << " = " << it->dump() << '\n';
        }
    }
}

void emit(std::ostream& out, bool json, const Json& j) {
    if (json) {
        out << j.dump(2) << '\n';
    } else {
        print_flat(out, j);
    }
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

SimConfig load_config(const std::string& path) {
    SimConfig base = default_sim_config();
    if (path.empty()) return base;
    return sim_config_from_json(read_json_file(path), base);
}

// through the scope chain, as a shot would be analyzed
std::optional<double> splitting_of(const MaserEnvelope& env) {
    try {
        return analyze_trace(synthesize_scope_trace(env, env.f_spin, 6e9)).rabi_splitting_hz;
    } catch (const MaserError&) {
        return std::nullopt;
    }
}

Json summary_json(const SweepSummary& s) {
    return {{"burst", s.burst},
            {"peak_power_w", s.peak_power_w},
            {"peak_power_dbm", s.peak_power_w > 0.0 ? Json(mw_to_dbm(s.peak_power_w * 1e3)) : Json(nullptr)},
            {"peak_photons", s.peak_photons},
            {"delay_to_peak_s", opt(s.delay_s)},
            {"rabi_freq_td_hz", opt(s.rabi_hz)},
            {"emitted_hz", opt(s.emitted_hz)}};
}

/// Strict monotonicity in |detuning| on each side of resonance.
bool monotone_in_detuning(const std::vector<std::pair<double, std::optional<double>>>& rows, bool increasing) {
    for (int side : {-1, 1}) {
        std::map<double, double> by_abs;
        for (const auto& [d, v] : rows) {
            if (d * side < 0.0) continue;
            if (!v) return false;
            by_abs[std::abs(d)] = *v;
        }
        std::optional<double> prev;
        for (const auto& [a, v] : by_abs) {
            if (prev && (increasing ? !(v > *prev) : !(v < *prev))) return false;
            prev = v;
        }
    }
    return true;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    bool json = false;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(Context& c, const std::string& config, std::optional<double> energy_mj,
                 std::optional<double> detuning_hz, const std::string& out_dir, double sample_rate) {
    SimConfig cfg = load_config(config);
    if (energy_mj) cfg.pump.energy_j = *energy_mj / 1e3;
    if (detuning_hz) cfg = with_detuning(cfg, *detuning_hz);
    if (c.seed) cfg.seed = *c.seed;

    const MaserEnvelope env = simulate_burst(cfg);
    Json result = {{"config", to_json(cfg)}, {"summary", summary_json(summarize(env))}};
    MaserTrace trace;
    if (sample_rate > 0.0) {
        trace = synthesize_scope_trace(env, env.f_spin, sample_rate);
        const TraceAnalysis an = analyze_trace(trace);
        result["metrics"] = to_json(an.metrics);
        result["rabi_splitting_hz"] = opt(an.rabi_splitting_hz);
    }
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string());
        write_text_file(dir / shot_files::kEnvelope, envelope_csv(env));
        write_json_file(dir / shot_files::kConfig, to_json(cfg));
        if (sample_rate > 0.0) {
            write_trace(dir / shot_files::kTrace, trace, to_json(cfg));
            write_json_file(dir / shot_files::kMetrics, result["metrics"]);
        }
    }
    if (!c.json) result.erase("config");
    emit(c.out, c.json, result);
    return exit_code::kOk;
}

int cmd_sweep(Context& c, const std::string& config, std::vector<double> detunings_mhz,
              std::optional<double> energy_mj) {
    SimConfig cfg = load_config(config);
    if (energy_mj) cfg.pump.energy_j = *energy_mj / 1e3;
    if (c.seed) cfg.seed = *c.seed;
    std::vector<double> detunings;
    for (double d : detunings_mhz) detunings.push_back(d * 1e6);

    const auto entries = detuning_sweep(cfg, detunings, true);
    Json rows = Json::array();
    std::vector<std::pair<double, std::optional<double>>> power, delay, split;
    for (const auto& e : entries) {
        Json row = summary_json(e.summary);
        row["detuning_hz"] = e.detuning_hz;
        std::optional<double> s;
        if (e.envelope && e.summary.burst) s = splitting_of(*e.envelope);
        row["rabi_splitting_hz"] = opt(s);
        if (e.summary.emitted_hz) row["emitted_offset_hz"] = *e.summary.emitted_hz - cfg.resonator.f_spin;
        if (e.error) row["error"] = *e.error;
        rows.push_back(row);
        power.emplace_back(e.detuning_hz, e.summary.burst ? std::optional<double>(e.summary.peak_power_w)
                                                          : std::nullopt);
        delay.emplace_back(e.detuning_hz, e.summary.delay_s);
        split.emplace_back(e.detuning_hz, s);
    }
    const Json trends = {{"peak_power_decreasing", monotone_in_detuning(power, false)},
                         {"delay_increasing", monotone_in_detuning(delay, true)},
                         {"splitting_decreasing", monotone_in_detuning(split, false)}};
    if (c.json) {
        c.out << Json{{"rows", rows}, {"trends", trends}}.dump(2) << '\n';
        return exit_code::kOk;
    }
    auto cell = [](const Json& v, double scale, int prec) {
        std::ostringstream s;
        if (v.is_null()) {
            s << "-";
        } else {
            s << std::fixed << std::setprecision(prec) << v.get<double>() * scale;
        }
        return s.str();
    };
    c.out << std::setw(10) << "det_MHz" << std::setw(11) << "P_dBm" << std::setw(11) << "delay_us"
          << std::setw(11) << "rabi_MHz" << std::setw(11) << "split_MHz" << std::setw(12) << "df_kHz"
          << std::setw(7) << "burst" << '\n';
    for (const auto& r : rows) {
        c.out << std::setw(10) << cell(r["detuning_hz"], 1e-6, 2) << std::setw(11) << cell(r["peak_power_dbm"], 1, 2)
              << std::setw(11) << cell(r["delay_to_peak_s"], 1e6, 3) << std::setw(11)
              << cell(r["rabi_freq_td_hz"], 1e-6, 3) << std::setw(11) << cell(r["rabi_splitting_hz"], 1e-6, 3)
              << std::setw(12) << cell(r.value("emitted_offset_hz", Json(nullptr)), 1e-3, 1) << std::setw(7)
              << (r["burst"].get<bool>() ? "yes" : "no") << '\n';
    }
    print_flat(c.out, trends, "trend");
    return exit_code::kOk;
}

int cmd_analyze(Context& c, const std::string& trace_path, std::optional<double> carrier_hz,
                const std::string& out_dir) {
    MaserTrace trace = read_trace(trace_path);
    if (carrier_hz) trace.carrier_hint_hz = *carrier_hz;
    if (!(trace.carrier_hint_hz > 0.0)) {
        fail(ErrorKind::InvalidArgument, "no carrier hint in the sidecar; pass --carrier-hz");
    }
    const TraceAnalysis an = analyze_trace(trace);
    const std::vector<SpectralPeak> peaks = an.spectrum ? an.spectrum->peaks : std::vector<SpectralPeak>{};
    Json result = {{"burst", an.burst},
                   {"metrics", to_json(an.metrics)},
                   {"rabi_splitting_hz", opt(an.rabi_splitting_hz)},
                   {"ar_order", an.ar_order},
                   {"peaks", to_json(peaks)}};
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string());
        write_json_file(dir / shot_files::kMetrics, to_json(an.metrics));
        write_json_file(dir / shot_files::kPeaks, to_json(peaks));
        if (an.spectrum) write_text_file(dir / shot_files::kSpectrum, spectrum_csv(*an.spectrum));
    }
    emit(c.out, c.json, result);
    return exit_code::kOk;
}

int cmd_fit_s11(Context& c, const std::string& csv, const std::vector<double>& triple) {
    Json result;
    if (!triple.empty()) {
        if (triple.size() != 3) fail(ErrorKind::InvalidArgument, "--triple takes f_lo f_hi f_res");
        result["q"] = to_json(q_from_edges(triple[0], triple[1], triple[2]));
    } else {
        if (csv.empty()) fail(ErrorKind::InvalidArgument, "give an S11 CSV file or --triple");
        const ReflectionTrace tr = parse_s11_csv(read_text_file(csv));
        result["q"] = to_json(estimate_q_loaded(tr));
        result["coupling"] = to_json(classify_coupling(tr));
    }
    if (c.json) {
        emit(c.out, true, result);
    } else {
        c.out << "q_loaded = " << std::fixed << std::setprecision(2) << result["q"]["q_loaded"].get<double>()
              << '\n';
        c.out.unsetf(std::ios::floatfield);
        print_flat(c.out, result);
    }
    return exit_code::kOk;
}

int cmd_s11(Context& c, const std::string& config, std::optional<double> height_mm, std::optional<double> span_hz,
            std::size_t points, double noise_sigma, const std::string& out_path) {
    ResonatorConfig res = load_config(config).resonator;
    if (height_mm) res = tune_ceiling(res, *height_mm);
    const double span = span_hz.value_or(20.0 * cavity_decay_rate(res.q_loaded, res.f_mode).linewidth_hz);
    std::optional<ReflectionNoise> noise;
    if (noise_sigma > 0.0) noise = ReflectionNoise{c.seed.value_or(1), noise_sigma};
    const ReflectionTrace tr = reflection_trace(res, res.f_mode - 0.5 * span, res.f_mode + 0.5 * span, points, noise);
    if (out_path.empty() || out_path == "-") {
        c.out << s11_csv(tr);
    } else {
        write_text_file(out_path, s11_csv(tr));
    }
    return exit_code::kOk;
}

Json calibration_json(const CalibrationResult& r, const MediumShape& shape) {
    return {{"medium", to_json(r.medium)},
            {"shape", {{"g_eff_rad_s", shape.g_eff}, {"t1_s", shape.t1}, {"t2_s", shape.t2}}},
            {"coupling_efficiency", r.coupling_efficiency},
            {"operating_energy_mj", r.operating_energy_j * 1e3},
            {"seed", r.seed},
            {"verification",
             {{"threshold_inversion_spins", r.threshold_inversion},
              {"threshold_energy_mj", r.threshold_energy_j * 1e3},
              {"analytic_threshold_inversion_spins", r.analytic_threshold_inversion},
              {"peak_power_dbm", r.peak_power_dbm},
              {"delay_to_peak_s", r.delay_s},
              {"rabi_freq_td_hz", opt(r.rabi_hz)},
              {"power_iterations", r.power_iterations}}}};
}

int cmd_calibrate(Context& c, const std::string& out_path) {
    CalibrationTargets targets;
    if (c.seed) targets.seed = *c.seed;
    const MediumShape shape;
    const CalibrationResult r = calibrate(shape, targets);
    const Json j = calibration_json(r, shape);
    const fs::path path = out_path.empty() ? fs::path(MASER_DATA_DIR) / "calibrated_defaults.json" : fs::path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_json_file(path, j);
    emit(c.out, c.json, j);
    if (!c.json) c.out << "written to " << path.string() << '\n';
    return exit_code::kOk;
}

int cmd_export(Context& c, const std::string& run_dir, std::uint64_t id, const std::string& dest,
               const std::string& format) {
    BenchOptions o;
    o.run_dir = resolve_run_dir(run_dir);
    if (!fs::is_directory(o.run_dir)) fail(ErrorKind::IoFailure, "no run directory " + o.run_dir.string());
    BenchSession session(o);
    const fs::path written =
        session.export_shot(id, dest, format == "json" ? ExportFormat::JsonBundle : ExportFormat::CsvBundle);
    emit(c.out, c.json, {{"written", written.string()}});
    return exit_code::kOk;
}

int cmd_serve(Context& c, const std::string& run_dir, const std::string& host, int port) {
    BenchOptions o;
    o.run_dir = resolve_run_dir(run_dir);
    if (c.seed) o.master_seed = *c.seed;
    BenchSession session(o);
    ServiceOptions so;
    so.host = host;
    so.port = port;
    BenchService service(session, so);
    const int bound = service.bind();
    c.err << "serving " << o.run_dir.string() << " on http://" << host << ":" << bound << std::endl;
    service.run();
    return exit_code::kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Virtual maser bench: simulate, analyze and operate"};
    app.require_subcommand(1);
    app.fallthrough();
    Context ctx{out, err, false, std::nullopt};
    std::uint64_t seed = 0;
    app.add_flag("--json", ctx.json, "Machine-readable JSON on stdout");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (noise seed for single runs)");

    std::string config, out_dir, path;
    std::optional<double> energy_mj, detuning_hz, carrier_hz, height_mm, span_hz;
    double sample_rate = 6e9;
    std::vector<double> detunings_mhz{-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
    std::vector<double> triple;
    std::size_t points = 801;
    double noise_sigma = 0.0;
    std::string run_dir = "runs", host = "127.0.0.1", dest, format = "csv";
    int port = 8750;
    std::uint64_t shot_id = 0;

    auto* sim = app.add_subcommand("simulate", "Run one burst from a SimConfig JSON file");
    sim->add_option("config", config, "SimConfig JSON (defaults if omitted)");
    sim->add_option("--energy-mj", energy_mj, "Pump energy override");
    sim->add_option("--detuning-hz", detuning_hz, "Retune the cavity to this detuning");
    sim->add_option("--out", out_dir, "Directory for envelope/trace/metrics files");
    sim->add_option("--sample-rate", sample_rate, "Scope sample rate in Hz; 0 skips the passband trace");

    auto* sweep = app.add_subcommand("sweep", "Detuning sweep with a fixed seed");
    sweep->add_option("config", config, "Base SimConfig JSON");
    sweep->add_option("--detunings-mhz", detunings_mhz, "Detunings in MHz")->delimiter(',');
    sweep->add_option("--energy-mj", energy_mj, "Pump energy override");

    auto* analyze = app.add_subcommand("analyze", "Metrics and MEM spectrum of a trace CSV");
    analyze->add_option("trace", path, "Trace CSV (sidecar JSON next to it)")->required();
    analyze->add_option("--carrier-hz", carrier_hz, "Demodulation reference");
    analyze->add_option("--out", out_dir, "Directory for metrics/spectrum/peaks files");

    auto* fit = app.add_subcommand("fit-s11", "Loaded Q and coupling from an S11 sweep");
    fit->add_option("csv", path, "S11 CSV: freq_hz,s11_re,s11_im");
    fit->add_option("--triple", triple, "f_lo f_hi f_res in Hz")->expected(3);

    auto* s11 = app.add_subcommand("s11", "Write a synthetic S11 sweep CSV");
    s11->add_option("config", config, "SimConfig JSON for the resonator");
    s11->add_option("--height-mm", height_mm, "Ceiling height");
    s11->add_option("--span-hz", span_hz, "Sweep span (default 20 linewidths)");
    s11->add_option("--points", points, "Number of points")->check(CLI::Range(3, 1000000));
    s11->add_option("--noise-sigma", noise_sigma, "Per-quadrature noise")->check(CLI::NonNegativeNumber);
    s11->add_option("--out", path, "Output file (stdout if omitted)");

    auto* cal = app.add_subcommand("calibrate", "Solve the default medium and write the defaults file");
    cal->add_option("--out", path, "Output JSON path");

    auto* exp = app.add_subcommand("export", "Export a persisted shot");
    exp->add_option("--run-dir", run_dir, "Run directory ($MASER_RUN_DIR wins)");
    exp->add_option("--id", shot_id, "Shot id")->required();
    exp->add_option("--dest", dest, "Destination directory")->required();
    exp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* serve = app.add_subcommand("serve", "Start the bench HTTP service");
    serve->add_option("--run-dir", run_dir, "Run directory ($MASER_RUN_DIR wins)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port, 0 for any")->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return exit_code::kInput;
    }
    if (seed_opt->count() > 0) ctx.seed = seed;

    try {
        if (sim->parsed()) return cmd_simulate(ctx, config, energy_mj, detuning_hz, out_dir, sample_rate);
        if (sweep->parsed()) return cmd_sweep(ctx, config, detunings_mhz, energy_mj);
        if (analyze->parsed()) return cmd_analyze(ctx, path, carrier_hz, out_dir);
        if (fit->parsed()) return cmd_fit_s11(ctx, path, triple);
        if (s11->parsed()) return cmd_s11(ctx, config, height_mm, span_hz, points, noise_sigma, path);
        if (cal->parsed()) return cmd_calibrate(ctx, path);
        if (exp->parsed()) return cmd_export(ctx, run_dir, shot_id, dest, format);
        if (serve->parsed()) return cmd_serve(ctx, run_dir, host, port);
    } catch (const MaserError& e) {
        err << "error: " << e.what() << '\n';
        return is_numerical(e.kind()) ? exit_code::kNumerical : exit_code::kInput;
    } catch (const Json::exception& e) {
        err << "error: ParseError: " << e.what() << '\n';
        return exit_code::kInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: IoFailure: " << e.what() << '\n';
        return exit_code::kInput;
    }
    err << "error: no subcommand\n";
    return exit_code::kInput;
}

}  // namespace maser
