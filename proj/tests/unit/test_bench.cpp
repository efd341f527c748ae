#include <catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <future>
#include <sstream>
#include <thread>

#include "maser/bench.hpp"
#include "maser/cli.hpp"
#include "maser/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace maser;
using testing::kind_of;
using Catch::Matchers::WithinAbs;

namespace {

BenchOptions options_for(const oracle::TempDir& dir, std::uint64_t master_seed = 1) {
    BenchOptions o;
    o.run_dir = dir.path();
    o.master_seed = master_seed;
    return o;
}

double dip_frequency(const ReflectionTrace& tr) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (std::abs(tr.s11[i]) < std::abs(tr.s11[best])) best = i;
    return tr.freq_hz[best];
}

bool same_metrics(const PulseMetrics& a, const PulseMetrics& b) {
    return a.v_peak_v == b.v_peak_v && a.p_peak_mw == b.p_peak_mw && a.p_peak_dbm == b.p_peak_dbm &&
           a.delay_to_peak_s == b.delay_to_peak_s && a.rabi_freq_td_hz == b.rabi_freq_td_hz &&
           a.carrier_est_hz == b.carrier_est_hz;
}

Json run_cli_json(std::vector<std::string> args, int* code = nullptr) {
    std::vector<const char*> argv = {"maser_bench", "--json"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code) *code = rc;
    if (rc != 0) return Json{{"stderr", err.str()}};
    return Json::parse(out.str());
}

}  // namespace

TEST_CASE("firing at resonance with defaults mases near -5 dBm", "[bench][fire]") {
    oracle::TempDir dir("bench_fire");
    BenchSession s(options_for(dir));
    const ShotRecord r = s.fire();
    CHECK(r.id == 1);
    CHECK(r.mased);
    REQUIRE(r.metrics.p_peak_dbm);
    CHECK_THAT(*r.metrics.p_peak_dbm, WithinAbs(-5.0, 3.0));
    CHECK(r.metrics.delay_to_peak_s);
    CHECK(r.rabi_splitting_hz);
    CHECK_FALSE(r.timestamp.empty());
    for (const char* f : {shot_files::kTrace, shot_files::kTraceSidecar, shot_files::kEnvelope, shot_files::kSpectrum,
                          shot_files::kPeaks, shot_files::kMetrics, shot_files::kConfig, shot_files::kRecord})
        CHECK(fs::exists(dir.path() / "shots" / "1" / f));
}

TEST_CASE("a 5 mJ pump stays below threshold", "[bench][fire]") {
    oracle::TempDir dir("bench_5mj");
    BenchSession s(options_for(dir));
    const ShotRecord r = s.fire(5e-3);
    CHECK_FALSE(r.mased);
    CHECK(r.config.at("pump").at("energy_mj").get<double>() == Catch::Approx(5.0));
    CHECK(s.shots().size() == 1);
    CHECK(fs::exists(dir.path() / "shots" / "1" / shot_files::kRecord));
}

TEST_CASE("consecutive shots get distinct ids and seeds", "[bench][fire]") {
    oracle::TempDir dir("bench_two");
    BenchSession s(options_for(dir));
    const ShotRecord a = s.fire();
    const ShotRecord b = s.fire();
    CHECK(b.id > a.id);
    CHECK(a.seed != b.seed);
    CHECK(a.seed == shot_seed(1, a.id));
    CHECK(s.shots().size() == 2);
    CHECK(s.shot(b.id).seed == b.seed);
    CHECK(kind_of([&] { s.shot(99); }) == ErrorKind::NotFound);
    // earlier snapshots are unaffected by later tuning
    const Json before = s.shot(a.id).config;
    s.tune_step(0.5e6);
    CHECK(s.shot(a.id).config == before);
}

TEST_CASE("stepping the tuning moves the S11 dip", "[bench][tune]") {
    oracle::TempDir dir("bench_tune");
    BenchSession s(options_for(dir));
    const ReflectionTrace t0 = s.s11();
    const double f0 = s.config().resonator.f_mode;
    const ReflectionTrace t1 = s.tune_step(0.5e6);
    const double resolution = t1.freq_hz[1] - t1.freq_hz[0];
    CHECK_THAT(dip_frequency(t1) - dip_frequency(t0), WithinAbs(0.5e6, resolution));
    CHECK_THAT(s.config().resonator.f_mode - f0, WithinAbs(0.5e6, 1e-3));
    CHECK_THAT(s.config().detuning_hz, WithinAbs(0.5e6, 1e-3));

    const ResonatorConfig res = s.config().resonator;
    const double linewidth = res.f_mode / res.q_loaded;
    CHECK(t1.freq_hz.back() - t1.freq_hz.front() >= 10.0 * linewidth);
    CHECK_THAT(0.5 * (t1.freq_hz.back() + t1.freq_hz.front()), WithinAbs(res.f_mode, 1.0));
}

TEST_CASE("absolute tuning targets", "[bench][tune]") {
    oracle::TempDir dir("bench_abs");
    BenchSession s(options_for(dir));
    const double f_spin = s.config().resonator.f_spin;
    s.tune_frequency(f_spin + 1e6);
    CHECK_THAT(s.config().detuning_hz, WithinAbs(1e6, 1e-3));
    const double h = s.config().resonator.ceiling_height_mm;
    s.tune_frequency(f_spin);
    CHECK(s.config().resonator.ceiling_height_mm != h);
    s.tune_height(h);
    CHECK(s.config().resonator.ceiling_height_mm == h);
    CHECK_THAT(s.config().detuning_hz, WithinAbs(1e6, 1e3));
}

TEST_CASE("out-of-range tuning is rejected and leaves the state alone", "[bench][tune]") {
    oracle::TempDir dir("bench_range");
    BenchSession s(options_for(dir));
    const Json before = s.state();
    const auto range = before.at("frequency_range_hz");
    const auto heights = before.at("height_range_mm");
    CHECK(kind_of([&] { s.tune_frequency(range[1].get<double>() + 1e6); }) == ErrorKind::FrequencyUnreachable);
    CHECK(kind_of([&] { s.tune_step(-1e9); }) == ErrorKind::FrequencyUnreachable);
    CHECK(kind_of([&] { s.tune_height(heights[0].get<double>() - 1.0); }) == ErrorKind::HeightOutOfRange);
    CHECK(s.state() == before);
}

TEST_CASE("resonance gives the largest peak power across the scan", "[bench][tune]") {
    oracle::TempDir dir("bench_scan");
    BenchSession s(options_for(dir));
    const double f_spin = s.config().resonator.f_spin;
    double best_power = -1.0, best_detuning = 1.0;
    for (double d : {-1.5e6, -1.0e6, -0.5e6, 0.0, 0.5e6, 1.0e6, 1.5e6}) {
        s.tune_frequency(f_spin + d);
        const ShotRecord r = s.fire();
        if (r.metrics.p_peak_mw > best_power) {
            best_power = r.metrics.p_peak_mw;
            best_detuning = d;
        }
    }
    CHECK(best_detuning == 0.0);
}

TEST_CASE("export and import reproduce the metrics exactly", "[bench][export]") {
    oracle::TempDir dir("bench_export");
    oracle::TempDir dest("bench_dest");
    BenchSession s(options_for(dir));
    const ShotRecord r = s.fire();

    const fs::path csv = s.export_shot(r.id, dest.path() / "csv", ExportFormat::CsvBundle);
    for (const char* f : {shot_files::kTrace, shot_files::kEnvelope, shot_files::kSpectrum, shot_files::kMetrics,
                          shot_files::kConfig})
        CHECK(fs::exists(csv / f));
    CHECK(same_metrics(import_metrics(csv), r.metrics));

    const fs::path bundle = s.export_shot(r.id, dest.path() / "json", ExportFormat::JsonBundle);
    CHECK(fs::is_regular_file(bundle));
    CHECK(same_metrics(import_metrics(bundle), r.metrics));
    const Json j = read_json_file(bundle);
    CHECK(j.contains("trace_csv"));
    CHECK(j.contains("spectrum_csv"));
    CHECK(j.at("config") == r.config);
}

TEST_CASE("export and reload failures are IO errors", "[bench][export]") {
    oracle::TempDir dir("bench_ioerr");
    CHECK(kind_of([&] { BenchSession::load_shot_log(dir.path() / "missing"); }) == ErrorKind::IoFailure);
    BenchSession s(options_for(dir));
    const ShotRecord r = s.fire();
    write_text_file(dir.path() / "blocker", "x");
    CHECK(kind_of([&] { s.export_shot(r.id, dir.path() / "blocker" / "out", ExportFormat::CsvBundle); }) ==
          ErrorKind::IoFailure);
    fs::remove_all(dir.path() / "shots" / "1");
    CHECK(kind_of([&] { s.export_shot(r.id, dir.path() / "out", ExportFormat::JsonBundle); }) ==
          ErrorKind::IoFailure);
    CHECK(kind_of([&] { s.export_shot(7, dir.path() / "out", ExportFormat::CsvBundle); }) == ErrorKind::NotFound);
}

TEST_CASE("reloading the run directory rebuilds the shot log", "[bench][persistence]") {
    oracle::TempDir dir("bench_reload");
    std::vector<ShotRecord> original;
    {
        BenchSession s(options_for(dir, 11));
        s.fire();
        s.tune_step(-0.5e6);
        s.fire(20e-3);
        s.fire(5e-3);
        original = s.shots();
    }
    const auto log = BenchSession::load_shot_log(dir.path());
    REQUIRE(log.size() == original.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].id == original[i].id);
        CHECK(log[i].seed == original[i].seed);
        CHECK(log[i].mased == original[i].mased);
        CHECK(same_metrics(log[i].metrics, original[i].metrics));
        CHECK(log[i].config == original[i].config);
    }

    BenchSession resumed(options_for(dir));
    CHECK(resumed.options().master_seed == 11);
    CHECK_THAT(resumed.config().detuning_hz, WithinAbs(-0.5e6, 1e-3));
    CHECK(resumed.shots().size() == 3);
    CHECK(resumed.fire().id == 4);
}

TEST_CASE("incomplete shot directories are ignored on reload", "[bench][persistence]") {
    oracle::TempDir dir("bench_partial");
    {
        BenchSession s(options_for(dir));
        s.fire();
    }
    fs::create_directories(dir.path() / "shots" / "2");
    write_text_file(dir.path() / "shots" / "2" / shot_files::kTrace, "t_s,v_volts\n");
    CHECK(BenchSession::load_shot_log(dir.path()).size() == 1);
}

TEST_CASE("scripted sessions are reproducible", "[bench][determinism]") {
    auto script = [](const oracle::TempDir& dir) {
        BenchSession s(options_for(dir, 7));
        s.tune_step(0.5e6);
        s.fire();
        s.tune_step(-0.5e6);
        s.fire();
        return s.shots();
    };
    oracle::TempDir a("bench_det_a"), b("bench_det_b");
    const auto ra = script(a), rb = script(b);
    REQUIRE(ra.size() == 2);
    REQUIRE(rb.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(ra[i].seed == rb[i].seed);
        CHECK(same_metrics(ra[i].metrics, rb[i].metrics));
        CHECK(ra[i].peak_photons == rb[i].peak_photons);
    }
    CHECK(read_text_file(a.path() / "shots" / "2" / shot_files::kTrace) ==
          read_text_file(b.path() / "shots" / "2" / shot_files::kTrace));
}

TEST_CASE("CLI analyze on an exported trace matches the shot record", "[bench][parity]") {
    oracle::TempDir dir("bench_parity");
    oracle::TempDir dest("bench_parity_out");
    BenchSession s(options_for(dir));
    const ShotRecord r = s.fire();
    const fs::path out = s.export_shot(r.id, dest.path(), ExportFormat::CsvBundle);
    int code = -1;
    const Json j = run_cli_json({"analyze", (out / shot_files::kTrace).string()}, &code);
    REQUIRE(code == 0);
    CHECK(same_metrics(metrics_from_json(j.at("metrics")), r.metrics));
    const auto peaks = peaks_from_json(j.at("peaks"));
    REQUIRE(peaks.size() == r.peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        CHECK(peaks[i].freq_hz == r.peaks[i].freq_hz);
        CHECK(peaks[i].height == r.peaks[i].height);
        CHECK(peaks[i].prominence == r.peaks[i].prominence);
    }
    CHECK(j.at("rabi_splitting_hz").get<double>() == *r.rabi_splitting_hz);
}

TEST_CASE("listeners receive tune and shot events", "[bench][events]") {
    oracle::TempDir dir("bench_events");
    BenchSession s(options_for(dir));
    std::vector<std::pair<std::string, Json>> seen;
    const int token = s.subscribe([&](const std::string& e, const Json& p) { seen.emplace_back(e, p); });
    s.tune_step(0.5e6);
    s.fire();
    REQUIRE(seen.size() == 2);
    CHECK(seen[0].first == "s11-updated");
    CHECK(seen[0].second.at("freq_hz").size() == s.options().s11_points);
    CHECK(seen[0].second.at("q").at("q_loaded").get<double>() == Catch::Approx(2042.0).epsilon(0.01));
    CHECK(seen[1].first == "shot-completed");
    CHECK(seen[1].second.at("id") == 1);
    CHECK(seen[1].second.contains("metrics"));
    s.unsubscribe(token);
    s.tune_step(-0.5e6);
    CHECK(seen.size() == 2);
}

TEST_CASE("reads are served while a shot is running", "[bench][concurrency]") {
    oracle::TempDir dir("bench_reads");
    BenchSession s(options_for(dir));
    auto fire = std::async(std::launch::async, [&] { return s.fire(); });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    while (!s.busy() && std::chrono::steady_clock::now() < deadline) std::this_thread::yield();
    REQUIRE(s.busy());

    const auto t0 = std::chrono::steady_clock::now();
    const Json st = s.state();
    const auto log = s.shots();
    const ReflectionTrace tr = s.s11();
    const double read_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool still_busy = s.busy();

    CHECK(st.at("busy") == true);
    CHECK(log.empty());
    CHECK(tr.size() == s.options().s11_points);
    const ShotRecord r = fire.get();
    CHECK(r.id == 1);
    CHECK_FALSE(s.busy());
    // the reads finished while the simulation was still running
    CHECK(still_busy);
    INFO("reads took " << read_s << " s");
    CHECK(read_s < 1.0);
}

TEST_CASE("mutations are serialized in arrival order", "[bench][concurrency]") {
    oracle::TempDir dir("bench_serial");
    BenchSession s(options_for(dir));
    std::vector<std::future<ShotRecord>> shots;
    for (int i = 0; i < 3; ++i) shots.push_back(std::async(std::launch::async, [&] { return s.fire(); }));
    std::vector<std::uint64_t> ids;
    for (auto& f : shots) ids.push_back(f.get().id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::uint64_t>{1, 2, 3});
    const auto log = s.shots();
    REQUIRE(log.size() == 3);
    CHECK(log[0].id < log[1].id);
    CHECK(log[1].id < log[2].id);
}

TEST_CASE("run directory can come from the environment", "[bench][config]") {
    oracle::TempDir dir("bench_env");
    ::setenv("MASER_RUN_DIR", dir.path().c_str(), 1);
    CHECK(resolve_run_dir("/nonexistent") == dir.path());
    ::unsetenv("MASER_RUN_DIR");
    CHECK(resolve_run_dir("/fallback") == fs::path("/fallback"));
    CHECK(kind_of([] { BenchSession(BenchOptions{}); }) == ErrorKind::InvalidArgument);
}
