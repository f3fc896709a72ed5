#include "paqkit/quality.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "paqkit/csv.hpp"
#include "paqkit/resample.hpp"
#include "paqkit/subprocess.hpp"

namespace paqkit {

namespace {

class Semaphore {
public:
    explicit Semaphore(int limit) : limit_(limit) {}

    void set_limit(int limit) {
        std::lock_guard<std::mutex> lock(mutex_);
        limit_ = std::max(1, limit);
        cv_.notify_all();
    }

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return in_use_ < limit_; });
        ++in_use_;
    }

    void release() {
        std::lock_guard<std::mutex> lock(mutex_);
        --in_use_;
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int in_use_ = 0;
};

Semaphore& adapter_semaphore() {
    static Semaphore sem(std::max(1u, std::thread::hardware_concurrency()));
    return sem;
}

struct SemaphoreGuard {
    Semaphore& sem;
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

std::string snippet(const std::string& text, std::size_t limit = 200) {
    std::string out = text.substr(0, limit);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    if (text.size() > limit) out += "...";
    return out;
}

double parse_scalar(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (!std::isfinite(v))
            throw Error(what + " is not finite: " + text);
        return v;
    } catch (const std::invalid_argument&) {
        throw Error(what + " is not a number: " + text);
    } catch (const std::out_of_range&) {
        throw Error(what + " is out of range: " + text);
    }
}

std::regex compile_single_capture(const std::string& pattern, const std::string& what) {
    std::regex re;
    try {
        re.assign(pattern);
    } catch (const std::regex_error& e) {
        throw Error(what + " is not a valid regex: " + e.what());
    }
    if (re.mark_count() != 1)
        throw Error(what + " must have exactly one capture group, has " +
                    std::to_string(re.mark_count()));
    return re;
}

double extract_scalar(const std::regex& re, const std::string& stdout_text,
                      const std::string& what) {
    std::smatch match;
    if (!std::regex_search(stdout_text, match, re))
        throw Error(what + " not found in tool output: " + snippet(stdout_text));
    return parse_scalar(match[1].str(), what);
}

void check_argv_template(const std::vector<std::string>& args, const std::string& what) {
    bool has_ref = false, has_test = false;
    for (const auto& a : args) {
        if (a.find("{ref}") != std::string::npos) has_ref = true;
        if (a.find("{test}") != std::string::npos) has_test = true;
    }
    if (!has_ref || !has_test)
        throw Error(what + ": argument template needs both {ref} and {test} placeholders");
}

std::vector<std::string> substitute_argv(const std::vector<std::string>& args,
                                         const std::string& ref_path,
                                         const std::string& test_path) {
    std::vector<std::string> out;
    out.reserve(args.size());
    for (std::string a : args) {
        for (const auto& [placeholder, value] :
             {std::pair<std::string, const std::string&>{"{ref}", ref_path},
              std::pair<std::string, const std::string&>{"{test}", test_path}}) {
            std::size_t pos;
            while ((pos = a.find(placeholder)) != std::string::npos)
                a.replace(pos, placeholder.size(), value);
        }
        out.push_back(std::move(a));
    }
    return out;
}

/// Temp WAV pair, removed when the guard leaves scope.
class TempWavPair {
public:
    TempWavPair(const AudioSignal& reference, const AudioSignal& test,
                const std::filesystem::path& dir_hint, WavFormat format) {
        static std::atomic<unsigned long> counter{0};
        const std::filesystem::path dir =
            dir_hint.empty() ? std::filesystem::temp_directory_path() : dir_hint;
        std::filesystem::create_directories(dir);
        const std::string stem = "paqkit-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter.fetch_add(1));
        ref_path_ = dir / (stem + "-ref.wav");
        test_path_ = dir / (stem + "-test.wav");
        save_wav(ref_path_, reference, format);
        save_wav(test_path_, test, format);
    }

    ~TempWavPair() {
        std::error_code ec;
        std::filesystem::remove(ref_path_, ec);
        std::filesystem::remove(test_path_, ec);
    }

    const std::filesystem::path& ref_path() const { return ref_path_; }
    const std::filesystem::path& test_path() const { return test_path_; }

private:
    std::filesystem::path ref_path_;
    std::filesystem::path test_path_;
};

SubprocessResult run_tool_checked(const std::string& exec, const std::vector<std::string>& args,
                                  double timeout_sec, const std::string& what) {
    SemaphoreGuard guard(adapter_semaphore());
    const SubprocessResult result = run_subprocess(exec, args, timeout_sec);
    if (result.timed_out)
        throw Error(what + " timed out after " + std::to_string(timeout_sec) + "s");
    if (result.exit_code != 0)
        throw Error(what + " exited with code " + std::to_string(result.exit_code) + ": " +
                    snippet(result.stderr_text.empty() ? result.stdout_text
                                                       : result.stderr_text));
    return result;
}

// --- concrete measures ------------------------------------------------------

class FwSnrSegMeasure : public Measure {
public:
    explicit FwSnrSegMeasure(FwSnrSegParams params) : params_(params) {
        descriptor_ = {"fwsnrseg",
                       {params.snr_floor_db, params.snr_ceil_db, true},
                       std::nullopt,
                       false};
    }
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet*,
               const EvalContext&) const override {
        return fwsnrseg(reference, test, params_);
    }

private:
    FwSnrSegParams params_;
    MeasureDescriptor descriptor_;
};

class DllrMeasure : public Measure {
public:
    explicit DllrMeasure(DllrParams params) : params_(params) {
        descriptor_ = {"dllr", {0.0, DllrParams::per_frame_cap, false}, std::nullopt, false};
    }
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet*,
               const EvalContext&) const override {
        return dllr(reference, test, params_);
    }

private:
    DllrParams params_;
    MeasureDescriptor descriptor_;
};

class BssMeasure : public Measure {
public:
    BssMeasure(BssRatioKind kind, DecompositionMode mode, int taps)
        : kind_(kind), mode_(mode), taps_(mode == DecompositionMode::full_fir ? taps : 1) {
        static const char* full_names[] = {"sdr", "sir", "sar"};
        static const char* si_names[] = {"si_sdr", "si_sir", "si_sar"};
        const auto idx = static_cast<std::size_t>(kind);
        descriptor_ = {mode == DecompositionMode::full_fir ? full_names[idx] : si_names[idx],
                       {-30.0, 30.0, true},
                       std::nullopt,
                       true};
    }
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet* sources,
               const EvalContext& ctx) const override {
        (void)reference;  // the target lives in the source set
        if (!sources)
            throw Error(descriptor_.name + " needs source reference signals");
        if (test.channel_count() > 2)
            throw Error(descriptor_.name + " is defined for mono and stereo only");
        std::shared_ptr<const Decomposition> dec;
        if (ctx.cache) {
            dec = ctx.cache->get_or_compute(mode_, taps_, test, sources->target, sources->others);
        } else if (mode_ == DecompositionMode::full_fir) {
            dec = std::make_shared<Decomposition>(
                decompose_bsseval(test, sources->target, sources->others, taps_));
        } else {
            dec = std::make_shared<Decomposition>(
                decompose_si(test, sources->target, sources->others));
        }
        const BssRatios r = ratios(*dec);
        switch (kind_) {
            case BssRatioKind::sdr: return r.sdr;
            case BssRatioKind::sir: return r.sir;
            default: return r.sar;
        }
    }

private:
    BssRatioKind kind_;
    DecompositionMode mode_;
    int taps_;
    MeasureDescriptor descriptor_;
};

/// Runs a measure after resampling both signals to its required rate; used
/// by evaluate() and by the artifacts-only wrapper for its base measure.
double run_at_measure_rate(const Measure& measure, const AudioSignal& reference,
                           const AudioSignal& test, const SourceSet* sources,
                           const EvalContext& ctx) {
    const auto& desc = measure.descriptor();
    if (!desc.required_rate)
        return measure.run(reference, test, sources, ctx);
    const int rate = *desc.required_rate;
    const AudioSignal ref2 = resample(reference, rate);
    const AudioSignal test2 = resample(test, rate);
    if (!sources)
        return measure.run(ref2, test2, nullptr, ctx);
    SourceSet resampled;
    resampled.target = resample(sources->target, rate);
    for (const auto& o : sources->others) resampled.others.push_back(resample(o, rate));
    return measure.run(ref2, test2, &resampled, ctx);
}

class SaMeasure : public Measure {
public:
    SaMeasure(std::string name, std::shared_ptr<Measure> base) : base_(std::move(base)) {
        descriptor_ = base_->descriptor();
        descriptor_.name = std::move(name);
        descriptor_.required_rate = std::nullopt;  // decompose at the incoming rate
        descriptor_.needs_sources = true;
    }
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet* sources,
               const EvalContext& ctx) const override {
        (void)reference;
        if (!sources)
            throw Error(descriptor_.name + " needs source reference signals");
        std::shared_ptr<const Decomposition> dec;
        if (ctx.cache) {
            dec = ctx.cache->get_or_compute(DecompositionMode::scale_invariant, 1, test,
                                            sources->target, sources->others);
        } else {
            dec = std::make_shared<Decomposition>(
                decompose_si(test, sources->target, sources->others));
        }
        const AudioSignal wrapped_reference = signal_sum(dec->s_target, dec->e_interf);
        return run_at_measure_rate(*base_, wrapped_reference, test, nullptr, ctx);
    }

private:
    std::shared_ptr<Measure> base_;
    MeasureDescriptor descriptor_;
};

class TwoFMeasure : public Measure {
public:
    TwoFMeasure(std::string name, TwoFParams params, std::shared_ptr<MovSource> movs,
                std::optional<int> required_rate)
        : params_(params), movs_(std::move(movs)) {
        descriptor_ = {std::move(name), {0.0, 100.0, true}, required_rate, false};
    }
    const MeasureDescriptor& descriptor() const override { return descriptor_; }
    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet*,
               const EvalContext& ctx) const override {
        const MovPair mov = movs_->movs(reference, test, ctx);
        return two_f_combine(mov.adb, mov.avg_mod_diff_1, params_);
    }

private:
    TwoFParams params_;
    std::shared_ptr<MovSource> movs_;
    MeasureDescriptor descriptor_;
};

class SidecarMovSource : public MovSource {
public:
    explicit SidecarMovSource(const std::filesystem::path& path) : path_(path) {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open MOV sidecar: " + path.string());
        std::stringstream buffer;
        buffer << in.rdbuf();
        const auto records = csv_parse(buffer.str());
        if (records.empty() || records.front() != std::vector<std::string>{"item_id", "adb",
                                                                            "avg_mod_diff_1"})
            throw Error("MOV sidecar needs header item_id,adb,avg_mod_diff_1: " + path.string());
        for (std::size_t i = 1; i < records.size(); ++i) {
            const auto& row = records[i];
            if (row.size() != 3)
                throw Error("MOV sidecar row " + std::to_string(i + 1) + " has " +
                            std::to_string(row.size()) + " fields: " + path.string());
            MovPair mov;
            mov.adb = parse_scalar(row[1], "sidecar adb");
            mov.avg_mod_diff_1 = parse_scalar(row[2], "sidecar avg_mod_diff_1");
            if (!movs_.emplace(row[0], mov).second)
                throw Error("duplicate MOV sidecar item: " + row[0]);
        }
    }

    MovPair movs(const AudioSignal&, const AudioSignal&, const EvalContext& ctx) const override {
        const auto it = movs_.find(ctx.item_id);
        if (it == movs_.end())
            throw Error("no MOV sidecar row for item " + ctx.item_id + " in " + path_.string());
        return it->second;
    }

private:
    std::filesystem::path path_;
    std::map<std::string, MovPair> movs_;
};

class AdapterMovSource : public MovSource {
public:
    explicit AdapterMovSource(MovAdapterConfig config) : config_(std::move(config)) {
        if (config_.exec.empty())
            throw Error("MOV adapter needs an executable");
        check_argv_template(config_.args, "MOV adapter");
        if (!(config_.timeout_sec > 0.0))
            throw Error("MOV adapter timeout must be positive");
        re_adb_ = compile_single_capture(config_.pattern_adb, "MOV adapter adb pattern");
        re_mod_ = compile_single_capture(config_.pattern_avg_mod_diff_1,
                                         "MOV adapter avg_mod_diff_1 pattern");
    }

    MovPair movs(const AudioSignal& reference, const AudioSignal& test,
                 const EvalContext& ctx) const override {
        const TempWavPair wavs(reference, test, ctx.temp_dir, config_.temp_wav_format);
        const auto argv = substitute_argv(config_.args, wavs.ref_path().string(),
                                          wavs.test_path().string());
        const auto result =
            run_tool_checked(config_.exec, argv, config_.timeout_sec, "MOV adapter");
        MovPair mov;
        mov.adb = extract_scalar(re_adb_, result.stdout_text, "adb");
        mov.avg_mod_diff_1 = extract_scalar(re_mod_, result.stdout_text, "avg_mod_diff_1");
        return mov;
    }

private:
    MovAdapterConfig config_;
    std::regex re_adb_;
    std::regex re_mod_;
};

class ExternalAdapterMeasure : public Measure {
public:
    explicit ExternalAdapterMeasure(ExternalAdapterConfig config) : config_(std::move(config)) {
        if (config_.name.empty())
            throw Error("external adapter needs a name");
        if (config_.exec.empty())
            throw Error("external adapter " + config_.name + " needs an executable");
        check_argv_template(config_.args, "external adapter " + config_.name);
        if (!(config_.timeout_sec > 0.0))
            throw Error("external adapter " + config_.name + " timeout must be positive");
        if (!(config_.scale.min < config_.scale.max))
            throw Error("external adapter " + config_.name + " scale must have min < max");
        compile_single_capture(config_.pattern, "external adapter " + config_.name + " pattern");
        descriptor_ = {config_.name, config_.scale, config_.required_rate, false};
    }

    const MeasureDescriptor& descriptor() const override { return descriptor_; }

    double run(const AudioSignal& reference, const AudioSignal& test, const SourceSet*,
               const EvalContext& ctx) const override {
        const TempWavPair wavs(reference, test, ctx.temp_dir, config_.temp_wav_format);
        return external_adapter_run(config_, wavs.ref_path(), wavs.test_path());
    }

private:
    ExternalAdapterConfig config_;
    MeasureDescriptor descriptor_;
};

}  // namespace

std::shared_ptr<const Decomposition> DecompositionCache::get_or_compute(
    DecompositionMode mode, int taps, const AudioSignal& y, const AudioSignal& target,
    const std::vector<AudioSignal>& others) {
    const std::pair<int, int> key{static_cast<int>(mode),
                                  mode == DecompositionMode::scale_invariant ? 1 : taps};
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    auto dec = std::make_shared<Decomposition>(mode == DecompositionMode::full_fir
                                                   ? decompose_bsseval(y, target, others, taps)
                                                   : decompose_si(y, target, others));
    memo_.emplace(key, dec);
    return dec;
}

MeasureResult evaluate(const Measure& measure, const AudioSignal& reference,
                       const AudioSignal& test, const SourceSet* sources,
                       const EvalContext& ctx) {
    MeasureResult result;
    result.measure_name = measure.descriptor().name;
    try {
        const auto& desc = measure.descriptor();
        if (desc.needs_sources && sources == nullptr)
            throw Error(desc.name + " needs source reference signals");
        const double value = run_at_measure_rate(measure, reference, test, sources, ctx);
        if (!std::isfinite(value))
            throw Error(desc.name + " produced a non-finite value");
        result.value = std::clamp(value, desc.scale.min, desc.scale.max);
        result.valid = true;
    } catch (const std::exception& e) {
        result.valid = false;
        result.failure_note = e.what();
    }
    return result;
}

void MeasureRegistry::add(std::shared_ptr<Measure> measure) {
    if (!measure)
        throw Error("cannot register a null measure");
    if (find(measure->descriptor().name) != nullptr)
        throw Error("duplicate measure name: " + measure->descriptor().name);
    measures_.push_back(std::move(measure));
}

const Measure* MeasureRegistry::find(const std::string& name) const {
    for (const auto& m : measures_)
        if (m->descriptor().name == name) return m.get();
    return nullptr;
}

const Measure& MeasureRegistry::require(const std::string& name) const {
    const Measure* m = find(name);
    if (!m)
        throw Error("unknown measure: " + name);
    return *m;
}

std::vector<std::string> MeasureRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(measures_.size());
    for (const auto& m : measures_) out.push_back(m->descriptor().name);
    return out;
}

std::shared_ptr<Measure> make_fwsnrseg_measure(FwSnrSegParams params) {
    return std::make_shared<FwSnrSegMeasure>(params);
}

std::shared_ptr<Measure> make_dllr_measure(DllrParams params) {
    return std::make_shared<DllrMeasure>(params);
}

std::shared_ptr<Measure> make_bss_measure(BssRatioKind kind, DecompositionMode mode,
                                          int filter_taps) {
    return std::make_shared<BssMeasure>(kind, mode, filter_taps);
}

std::shared_ptr<Measure> make_sa_measure(std::string name, std::shared_ptr<Measure> base) {
    if (!base)
        throw Error("artifacts-only wrapper needs a base measure");
    return std::make_shared<SaMeasure>(std::move(name), std::move(base));
}

TwoFParams load_two_f_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open mapping parameter file: " + path.string());

    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!entries.emplace(key, value).second)
            throw Error(path.string() + ":" + std::to_string(line_no) + ": duplicate key " + key);
    }

    const auto take = [&](const char* key) {
        const auto it = entries.find(key);
        if (it == entries.end())
            throw Error(path.string() + ": missing required key " + key);
        const std::string value = it->second;
        entries.erase(it);
        return value;
    };

    TwoFParams params;
    const std::string mapping = take("mapping");
    if (mapping == "affine")
        params.mapping = TwoFMapping::affine;
    else if (mapping == "logistic")
        params.mapping = TwoFMapping::logistic;
    else
        throw Error(path.string() + ": mapping must be affine or logistic, got " + mapping);
    params.intercept = parse_scalar(take("intercept"), "intercept");
    params.coef_adb = parse_scalar(take("coef_adb"), "coef_adb");
    params.coef_avg_mod_diff_1 = parse_scalar(take("coef_avg_mod_diff_1"), "coef_avg_mod_diff_1");
    if (!entries.empty())
        throw Error(path.string() + ": unknown key " + entries.begin()->first);
    return params;
}

double two_f_combine(double adb, double avg_mod_diff_1, const TwoFParams& params) {
    if (!std::isfinite(adb) || !std::isfinite(avg_mod_diff_1))
        throw Error("model output variables must be finite");
    const double linear =
        params.intercept + params.coef_adb * adb + params.coef_avg_mod_diff_1 * avg_mod_diff_1;
    const double value = params.mapping == TwoFMapping::affine
                             ? linear
                             : 100.0 / (1.0 + std::exp(-linear));
    return std::clamp(value, 0.0, 100.0);
}

std::shared_ptr<MovSource> make_sidecar_mov_source(const std::filesystem::path& csv_path) {
    return std::make_shared<SidecarMovSource>(csv_path);
}

std::shared_ptr<MovSource> make_adapter_mov_source(MovAdapterConfig config) {
    return std::make_shared<AdapterMovSource>(std::move(config));
}

std::shared_ptr<Measure> make_two_f_measure(std::string name, TwoFParams params,
                                            std::shared_ptr<MovSource> movs,
                                            std::optional<int> required_rate) {
    if (!movs)
        throw Error("model measure needs a MOV source");
    return std::make_shared<TwoFMeasure>(std::move(name), params, std::move(movs), required_rate);
}

std::shared_ptr<Measure> make_external_adapter_measure(ExternalAdapterConfig config) {
    return std::make_shared<ExternalAdapterMeasure>(std::move(config));
}

double external_adapter_run(const ExternalAdapterConfig& config,
                            const std::filesystem::path& ref_wav,
                            const std::filesystem::path& test_wav) {
    if (config.exec.empty())
        throw Error("external adapter needs an executable");
    check_argv_template(config.args, "external adapter " + config.name);
    if (!(config.timeout_sec > 0.0))
        throw Error("external adapter timeout must be positive");
    const std::regex re =
        compile_single_capture(config.pattern, "external adapter " + config.name + " pattern");

    const auto argv = substitute_argv(config.args, ref_wav.string(), test_wav.string());
    const auto result = run_tool_checked(config.exec, argv, config.timeout_sec,
                                         "external adapter " + config.name);
    return extract_scalar(re, result.stdout_text, config.name + " score");
}

void set_adapter_concurrency_limit(int limit) { adapter_semaphore().set_limit(limit); }

}
