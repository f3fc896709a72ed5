#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "paqkit/quality.hpp"
#include "test_util.hpp"

using namespace paqkit;
namespace fs = std::filesystem;

namespace {

struct Recorded {
    int reference_rate = 0;
    std::size_t reference_length = 0;
    int target_rate = 0;
};

class StubMeasure : public Measure {
public:
    StubMeasure(MeasureDescriptor desc, std::function<double()> fn, Recorded* recorded = nullptr)
        : descriptor_(std::move(desc)), fn_(std::move(fn)), recorded_(recorded) {}
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal&, const SourceSet* sources,
               const EvalContext&) const override {
        if (recorded_) {
            recorded_->reference_rate = reference.sample_rate;
            recorded_->reference_length = reference.length();
            if (sources) recorded_->target_rate = sources->target.sample_rate;
        }
        return fn_();
    }

private:
    MeasureDescriptor descriptor_;
    std::function<double()> fn_;
    Recorded* recorded_;
};

fs::path scratch_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("paqkit-qual-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    return path;
}

std::size_t files_in(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("evaluate clamps into the declared scale and captures failures") {
    const auto ref = testutil::noise_signal(4000, 16000, 1);
    const EvalContext ctx;

    const MeasureDescriptor desc{"stub", {0.0, 10.0, true}, std::nullopt, false};
    const auto run_value = [&](double v) {
        StubMeasure m(desc, [v] { return v; });
        return evaluate(m, ref, ref, nullptr, ctx);
    };

    CHECK(run_value(4.5).value == 4.5);
    CHECK(run_value(4.5).valid);
    CHECK(run_value(4.5).measure_name == "stub");
    CHECK(run_value(42.0).value == 10.0);
    CHECK(run_value(-5.0).value == 0.0);

    const auto non_finite = run_value(std::nan(""));
    CHECK_FALSE(non_finite.valid);
    CHECK(std::isnan(non_finite.value));
    CHECK(non_finite.failure_note.find("non-finite") != std::string::npos);

    StubMeasure thrower(desc, []() -> double { throw Error("deliberate failure"); });
    const auto failed = evaluate(thrower, ref, ref, nullptr, ctx);
    CHECK_FALSE(failed.valid);
    CHECK(failed.failure_note == "deliberate failure");

    const MeasureDescriptor needy{"needy", {0.0, 10.0, true}, std::nullopt, true};
    StubMeasure needs_sources(needy, [] { return 1.0; });
    const auto missing = evaluate(needs_sources, ref, ref, nullptr, ctx);
    CHECK_FALSE(missing.valid);
    CHECK(missing.failure_note.find("needs source reference signals") != std::string::npos);
}

TEST_CASE("evaluate resamples everything to the measure's required rate") {
    const auto ref = testutil::noise_signal(48000, 48000, 2);
    Recorded seen;
    const MeasureDescriptor desc{"stub", {0.0, 10.0, true}, 16000, false};
    StubMeasure m(desc, [] { return 1.0; }, &seen);

    SourceSet sources;
    sources.target = testutil::noise_signal(48000, 48000, 3);
    const EvalContext ctx;
    CHECK(evaluate(m, ref, ref, &sources, ctx).valid);
    CHECK(seen.reference_rate == 16000);
    CHECK(seen.reference_length == 16000);
    CHECK(seen.target_rate == 16000);

    const MeasureDescriptor native{"stub2", {0.0, 10.0, true}, std::nullopt, false};
    StubMeasure untouched(native, [] { return 1.0; }, &seen);
    CHECK(evaluate(untouched, ref, ref, nullptr, ctx).valid);
    CHECK(seen.reference_rate == 48000);
}

TEST_CASE("measure registry enforces unique names") {
    MeasureRegistry registry;
    registry.add(make_fwsnrseg_measure());
    registry.add(make_dllr_measure());
    CHECK(registry.find("fwsnrseg") != nullptr);
    CHECK(registry.find("absent") == nullptr);
    CHECK(registry.require("dllr").descriptor().name == "dllr");
    CHECK_THROWS_WITH_AS(registry.require("absent"), "unknown measure: absent", Error);
    CHECK_THROWS_WITH_AS(registry.add(make_fwsnrseg_measure()),
                         "duplicate measure name: fwsnrseg", Error);
    CHECK(registry.names() == std::vector<std::string>{"fwsnrseg", "dllr"});
}

TEST_CASE("decomposition cache memoizes per mode and tap count") {
    const auto target = testutil::noise_signal(2000, 16000, 11);
    const auto other = testutil::noise_signal(2000, 16000, 12);
    const auto y = testutil::mix(target, 1.0, other, 0.25);

    DecompositionCache cache;
    const auto a = cache.get_or_compute(DecompositionMode::full_fir, 16, y, target, {other});
    const auto b = cache.get_or_compute(DecompositionMode::full_fir, 16, y, target, {other});
    const auto c = cache.get_or_compute(DecompositionMode::full_fir, 32, y, target, {other});
    CHECK(a.get() == b.get());
    CHECK(a.get() != c.get());

    // Scale-invariant entries ignore the tap count.
    const auto d = cache.get_or_compute(DecompositionMode::scale_invariant, 16, y, target, {other});
    const auto e = cache.get_or_compute(DecompositionMode::scale_invariant, 32, y, target, {other});
    CHECK(d.get() == e.get());
    CHECK(a.get() != d.get());
}

TEST_CASE("bss measures agree with a direct decomposition and share the cache") {
    const auto target = testutil::noise_signal(4000, 16000, 21);
    const auto other = testutil::noise_signal(4000, 16000, 22);
    const auto y = testutil::mix(target, 1.0, other, 0.3);

    SourceSet sources;
    sources.target = target;
    sources.others = {other};

    DecompositionCache cache;
    EvalContext ctx;
    ctx.cache = &cache;

    const auto expect = ratios(decompose_si(y, target, {other}));
    const auto si_sdr = make_bss_measure(BssRatioKind::sdr, DecompositionMode::scale_invariant);
    const auto si_sir = make_bss_measure(BssRatioKind::sir, DecompositionMode::scale_invariant);
    const auto si_sar = make_bss_measure(BssRatioKind::sar, DecompositionMode::scale_invariant);
    CHECK(evaluate(*si_sdr, target, y, &sources, ctx).value == expect.sdr);
    CHECK(evaluate(*si_sir, target, y, &sources, ctx).value == expect.sir);
    CHECK(evaluate(*si_sar, target, y, &sources, ctx).value == expect.sar);

    const auto fir = ratios(decompose_bsseval(y, target, {other}, 64));
    const auto sdr = make_bss_measure(BssRatioKind::sdr, DecompositionMode::full_fir, 64);
    CHECK(sdr->descriptor().name == "sdr");
    CHECK(sdr->descriptor().needs_sources);
    CHECK(evaluate(*sdr, target, y, &sources, ctx).value == fir.sdr);

    const auto no_sources = evaluate(*sdr, target, y, nullptr, ctx);
    CHECK_FALSE(no_sources.valid);
    CHECK(no_sources.failure_note.find("needs source reference signals") != std::string::npos);
}

TEST_CASE("artifacts-only wrapper reaches the base measure's best score in-span") {
    const auto target = testutil::noise_signal(8000, 16000, 31);
    const auto other = testutil::noise_signal(8000, 16000, 32);
    const auto y = testutil::mix(target, 1.0, other, 0.3);

    SourceSet sources;
    sources.target = target;
    sources.others = {other};
    DecompositionCache cache;
    EvalContext ctx;
    ctx.cache = &cache;

    const auto sa_fw = make_sa_measure("sa_fwsnrseg", make_fwsnrseg_measure());
    CHECK(sa_fw->descriptor().name == "sa_fwsnrseg");
    CHECK(sa_fw->descriptor().needs_sources);
    CHECK(sa_fw->descriptor().scale.max == 35.0);

    // y lies in span{target, other}: no artifacts, perfect score. The plain
    // measure still sees the interference and scores well below the ceiling.
    CHECK(evaluate(*sa_fw, target, y, &sources, ctx).value == 35.0);
    CHECK(fwsnrseg(target, y) < 30.0);

    const auto sa_dllr = make_sa_measure("sa_dllr", make_dllr_measure());
    CHECK(evaluate(*sa_dllr, target, y, &sources, ctx).value == 0.0);
    CHECK(dllr(target, y) > 1e-4);

    // With genuine artifacts the wrapper drops below the ceiling.
    auto noisy = y;
    const auto artifacts = testutil::noise(8000, 33, 0.05);
    for (std::size_t i = 0; i < noisy.channels[0].size(); ++i)
        noisy.channels[0][i] += artifacts[i];
    CHECK(evaluate(*sa_fw, target, noisy, &sources, ctx).value < 35.0);

    CHECK_THROWS_AS(make_sa_measure("sa", nullptr), Error);
}

TEST_CASE("mapping parameter files parse strictly") {
    const auto dir = scratch_dir("params");

    const auto good = write_text(dir / "good.txt",
                                 "# fitted on the dev split\n"
                                 "mapping = affine\n"
                                 "intercept = 100\n"
                                 "coef_adb = -10\n"
                                 "coef_avg_mod_diff_1 = -1\n");
    const auto params = load_two_f_params(good);
    CHECK(params.mapping == TwoFMapping::affine);
    CHECK(params.intercept == 100.0);
    CHECK(params.coef_adb == -10.0);
    CHECK(params.coef_avg_mod_diff_1 == -1.0);

    CHECK_THROWS_AS(load_two_f_params(dir / "absent.txt"), Error);

    const auto missing = write_text(dir / "missing.txt", "mapping=affine\nintercept=1\n");
    CHECK_THROWS_WITH_AS(load_two_f_params(missing),
                         (missing.string() + ": missing required key coef_adb").c_str(), Error);

    const auto unknown = write_text(dir / "unknown.txt",
                                    "mapping=affine\nintercept=1\ncoef_adb=1\n"
                                    "coef_avg_mod_diff_1=1\nslope=2\n");
    CHECK_THROWS_WITH_AS(load_two_f_params(unknown),
                         (unknown.string() + ": unknown key slope").c_str(), Error);

    const auto dup = write_text(dir / "dup.txt", "mapping=affine\nmapping=logistic\n");
    CHECK_THROWS_WITH_AS(load_two_f_params(dup),
                         (dup.string() + ":2: duplicate key mapping").c_str(), Error);

    const auto bad_map = write_text(dir / "bad_map.txt",
                                    "mapping=quadratic\nintercept=1\ncoef_adb=1\n"
                                    "coef_avg_mod_diff_1=1\n");
    CHECK_THROWS_AS(load_two_f_params(bad_map), Error);

    const auto bad_num = write_text(dir / "bad_num.txt",
                                    "mapping=affine\nintercept=abc\ncoef_adb=1\n"
                                    "coef_avg_mod_diff_1=1\n");
    CHECK_THROWS_AS(load_two_f_params(bad_num), Error);

    const auto no_eq = write_text(dir / "no_eq.txt", "mapping affine\n");
    CHECK_THROWS_AS(load_two_f_params(no_eq), Error);

    fs::remove_all(dir);
}

TEST_CASE("two_f_combine maps model output variables to a 0..100 score") {
    TwoFParams affine{TwoFMapping::affine, 100.0, -10.0, -1.0};
    CHECK(two_f_combine(1.5, 12.25, affine) == doctest::Approx(72.75));
    CHECK(two_f_combine(-20.0, 0.0, affine) == 100.0);  // clamped
    CHECK(two_f_combine(20.0, 10.0, affine) == 0.0);

    TwoFParams logistic{TwoFMapping::logistic, 0.0, -1.0, 0.0};
    CHECK(two_f_combine(0.0, 0.0, logistic) == doctest::Approx(50.0));
    CHECK(two_f_combine(1.0, 0.0, logistic) < two_f_combine(0.5, 0.0, logistic));
    CHECK(two_f_combine(-50.0, 0.0, logistic) <= 100.0);
    CHECK(two_f_combine(50.0, 0.0, logistic) >= 0.0);

    CHECK_THROWS_AS(two_f_combine(std::nan(""), 0.0, affine), Error);
}

TEST_CASE("sidecar MOV source keys rows by item id") {
    const auto dir = scratch_dir("sidecar");
    const auto csv = write_text(dir / "movs.csv",
                                "item_id,adb,avg_mod_diff_1\n"
                                "t1/i1/c1,1.5,12.25\n"
                                "t1/i2/c1,0.5,2.0\n");

    const TwoFParams params{TwoFMapping::affine, 100.0, -10.0, -1.0};
    const auto measure = make_two_f_measure("two_f", params, make_sidecar_mov_source(csv));
    CHECK(measure->descriptor().scale.max == 100.0);

    const auto ref = testutil::noise_signal(2000, 16000, 41);
    EvalContext ctx;
    ctx.item_id = "t1/i1/c1";
    CHECK(evaluate(*measure, ref, ref, nullptr, ctx).value == doctest::Approx(72.75));
    ctx.item_id = "t1/i2/c1";
    CHECK(evaluate(*measure, ref, ref, nullptr, ctx).value == doctest::Approx(93.0));

    ctx.item_id = "t9/i9/c9";
    const auto miss = evaluate(*measure, ref, ref, nullptr, ctx);
    CHECK_FALSE(miss.valid);
    CHECK(miss.failure_note.find("no MOV sidecar row for item t9/i9/c9") != std::string::npos);

    const auto dup = write_text(dir / "dup.csv",
                                "item_id,adb,avg_mod_diff_1\na,1,1\na,2,2\n");
    CHECK_THROWS_WITH_AS(make_sidecar_mov_source(dup), "duplicate MOV sidecar item: a", Error);

    const auto bad_header = write_text(dir / "bad.csv", "item,adb,avg_mod_diff_1\na,1,1\n");
    CHECK_THROWS_AS(make_sidecar_mov_source(bad_header), Error);

    fs::remove_all(dir);
}

TEST_CASE("adapter MOV source runs an external tool once for both variables") {
    const auto dir = scratch_dir("movtool");
    const auto script = write_text(dir / "mov.sh",
                                   "#!/bin/sh\nprintf 'ADB=1.5\\nAvgModDiff1=12.25\\n'\n");

    MovAdapterConfig config;
    config.exec = "/bin/sh";
    config.args = {script.string(), "{ref}", "{test}"};
    config.pattern_adb = "ADB=([-+0-9.eE]+)";
    config.pattern_avg_mod_diff_1 = "AvgModDiff1=([-+0-9.eE]+)";

    const TwoFParams params{TwoFMapping::affine, 100.0, -10.0, -1.0};
    const auto measure = make_two_f_measure("two_f", params, make_adapter_mov_source(config));

    const auto ref = testutil::noise_signal(2000, 16000, 51);
    EvalContext ctx;
    ctx.temp_dir = dir;
    CHECK(evaluate(*measure, ref, ref, nullptr, ctx).value == doctest::Approx(72.75));
    CHECK(files_in(dir) == 1);  // temp WAVs cleaned up, script remains

    MovAdapterConfig broken = config;
    broken.args = {script.string(), "{ref}"};
    CHECK_THROWS_WITH_AS(make_adapter_mov_source(broken),
                         "MOV adapter: argument template needs both {ref} and {test} placeholders",
                         Error);
    broken = config;
    broken.pattern_adb = "(A)(B)";
    CHECK_THROWS_AS(make_adapter_mov_source(broken), Error);
    broken = config;
    broken.timeout_sec = 0.0;
    CHECK_THROWS_AS(make_adapter_mov_source(broken), Error);
    broken = config;
    broken.exec.clear();
    CHECK_THROWS_AS(make_adapter_mov_source(broken), Error);

    fs::remove_all(dir);
}

TEST_CASE("external adapter measures parse scores and surface tool failures") {
    const auto dir = scratch_dir("adapter");
    const auto ok = write_text(dir / "ok.sh", "#!/bin/sh\necho 'SCORE=3.25'\n");
    const auto fail = write_text(dir / "fail.sh", "#!/bin/sh\nexit 3\n");
    const auto slow = write_text(dir / "slow.sh", "#!/bin/sh\nsleep 5\n");
    const auto silent = write_text(dir / "silent.sh", "#!/bin/sh\necho 'no score here'\n");

    ExternalAdapterConfig config;
    config.name = "tool";
    config.exec = "/bin/sh";
    config.args = {ok.string(), "{ref}", "{test}"};
    config.pattern = "SCORE=([-+0-9.eE]+)";
    config.scale = {0.0, 10.0, true};

    const auto ref = testutil::noise_signal(2000, 16000, 61);
    EvalContext ctx;
    ctx.temp_dir = dir;
    const auto measure = make_external_adapter_measure(config);
    CHECK(measure->descriptor().name == "tool");
    CHECK(evaluate(*measure, ref, ref, nullptr, ctx).value == 3.25);
    CHECK(files_in(dir) == 4);  // only the four scripts survive

    auto broken = config;
    broken.args[0] = fail.string();
    const auto failed = evaluate(*make_external_adapter_measure(broken), ref, ref, nullptr, ctx);
    CHECK_FALSE(failed.valid);
    CHECK(failed.failure_note.find("exited with code 3") != std::string::npos);

    broken = config;
    broken.args[0] = slow.string();
    broken.timeout_sec = 0.2;
    const auto late = evaluate(*make_external_adapter_measure(broken), ref, ref, nullptr, ctx);
    CHECK_FALSE(late.valid);
    CHECK(late.failure_note.find("timed out") != std::string::npos);

    broken = config;
    broken.args[0] = silent.string();
    const auto unmatched = evaluate(*make_external_adapter_measure(broken), ref, ref, nullptr, ctx);
    CHECK_FALSE(unmatched.valid);
    CHECK(unmatched.failure_note.find("not found in tool output") != std::string::npos);
    CHECK(unmatched.failure_note.find("no score here") != std::string::npos);

    broken = config;
    broken.name.clear();
    CHECK_THROWS_AS(make_external_adapter_measure(broken), Error);
    broken = config;
    broken.scale = {5.0, 5.0, true};
    CHECK_THROWS_AS(make_external_adapter_measure(broken), Error);

    fs::remove_all(dir);
}
