#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paqkit/audio_signal.hpp"
#include "paqkit/bss.hpp"
#include "paqkit/speech.hpp"
#include "paqkit/wav.hpp"

namespace paqkit {

struct Scale {
    double min = 0.0;
    double max = 0.0;
    bool higher_is_better = true;
};

struct MeasureDescriptor {
    std::string name;
    Scale scale;
    std::optional<int> required_rate;  // nullopt: evaluate at the incoming rate
    bool needs_sources = false;
};

struct MeasureResult {
    std::string measure_name;
    double value = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    std::string failure_note;
};

struct SourceSet {
    AudioSignal target;
    std::vector<AudioSignal> others;
};

/// Per-item memo so that e.g. sdr/sir/sar share one 512-tap decomposition.
/// Scoped to a single item evaluated on a single worker; not thread safe.
class DecompositionCache {
public:
    std::shared_ptr<const Decomposition> get_or_compute(DecompositionMode mode, int taps,
                                                        const AudioSignal& y,
                                                        const AudioSignal& target,
                                                        const std::vector<AudioSignal>& others);

private:
    std::map<std::pair<int, int>, std::shared_ptr<const Decomposition>> memo_;
};

struct EvalContext {
    std::string item_id;  // unique item key; also the MOV sidecar lookup key
    std::filesystem::path temp_dir;
    DecompositionCache* cache = nullptr;
};

class Measure {
public:
    virtual ~Measure() = default;
    virtual const MeasureDescriptor& descriptor() const = 0;
    /// Raw computation; throws on failure. Signals arrive already resampled
    /// to descriptor().required_rate.
    virtual double run(const AudioSignal& reference, const AudioSignal& test,
                       const SourceSet* sources, const EvalContext& ctx) const = 0;
};

/// Uniform evaluation contract: resample to the measure's rate, run, clamp
/// the value into the declared scale. Any thrown error becomes an invalid
/// result carrying the message, so one bad item never aborts a batch.
MeasureResult evaluate(const Measure& measure, const AudioSignal& reference,
                       const AudioSignal& test, const SourceSet* sources, const EvalContext& ctx);

class MeasureRegistry {
public:
    void add(std::shared_ptr<Measure> measure);  // rejects duplicate names
    const Measure* find(const std::string& name) const;
    const Measure& require(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::vector<std::shared_ptr<Measure>> measures_;
};

// --- built-in measures -----------------------------------------------------

std::shared_ptr<Measure> make_fwsnrseg_measure(FwSnrSegParams params = {});
std::shared_ptr<Measure> make_dllr_measure(DllrParams params = {});

enum class BssRatioKind { sdr, sir, sar };

/// sdr/sir/sar in full_fir mode, si_sdr/si_sir/si_sar in scale_invariant
/// mode. filter_taps only applies to full_fir.
std::shared_ptr<Measure> make_bss_measure(BssRatioKind kind, DecompositionMode mode,
                                          int filter_taps = 512);

/// Artifacts-only wrapper: decomposes the signal under test against its
/// sources (scale-invariant), then evaluates `base` with
/// reference = s_target + e_interf and the test signal unchanged, so only
/// e_artif is penalised. With e_artif -> 0 the wrapper approaches the base
/// measure's perfect score.
std::shared_ptr<Measure> make_sa_measure(std::string name, std::shared_ptr<Measure> base);

// --- MOV-driven model (ADB + AvgModDiff1 -> quality score) ------------------

enum class TwoFMapping { affine, logistic };

struct TwoFParams {
    TwoFMapping mapping = TwoFMapping::affine;
    double intercept = 0.0;
    double coef_adb = 0.0;
    double coef_avg_mod_diff_1 = 0.0;
};

/// Key-value text file; requires `mapping` plus all three coefficients
/// (`intercept`, `coef_adb`, `coef_avg_mod_diff_1`), no silent defaults.
TwoFParams load_two_f_params(const std::filesystem::path& path);

/// affine: intercept + coef_adb * adb + coef_mod * mod, clamped to [0, 100].
/// logistic: 100 / (1 + exp(-(intercept + coef_adb * adb + coef_mod * mod))).
double two_f_combine(double adb, double avg_mod_diff_1, const TwoFParams& params);

struct MovPair {
    double adb = 0.0;
    double avg_mod_diff_1 = 0.0;
};

class MovSource {
public:
    virtual ~MovSource() = default;
    virtual MovPair movs(const AudioSignal& reference, const AudioSignal& test,
                         const EvalContext& ctx) const = 0;
};

/// CSV with header item_id,adb,avg_mod_diff_1, keyed by EvalContext::item_id.
std::shared_ptr<MovSource> make_sidecar_mov_source(const std::filesystem::path& csv_path);

struct MovAdapterConfig {
    std::string exec;
    std::vector<std::string> args;  // {ref} / {test} placeholders
    std::string pattern_adb;
    std::string pattern_avg_mod_diff_1;
    double timeout_sec = 30.0;
    WavFormat temp_wav_format = WavFormat::float32;
};

/// Runs an external tool that prints both MOVs; each pattern is a regex
/// with exactly one capture group.
std::shared_ptr<MovSource> make_adapter_mov_source(MovAdapterConfig config);

std::shared_ptr<Measure> make_two_f_measure(std::string name, TwoFParams params,
                                            std::shared_ptr<MovSource> movs,
                                            std::optional<int> required_rate = std::nullopt);

// --- generic external tool adapter ------------------------------------------

struct ExternalAdapterConfig {
    std::string name;
    std::string exec;
    std::vector<std::string> args;  // {ref} / {test} placeholders
    std::string pattern;            // regex with exactly one capture group
    double timeout_sec = 30.0;
    std::optional<int> required_rate;
    Scale scale;
    WavFormat temp_wav_format = WavFormat::float32;
};

std::shared_ptr<Measure> make_external_adapter_measure(ExternalAdapterConfig config);

/// One adapter invocation against WAV files already on disk. Throws on
/// spawn failure, nonzero exit, timeout or an unparseable stdout.
double external_adapter_run(const ExternalAdapterConfig& config,
                            const std::filesystem::path& ref_wav,
                            const std::filesystem::path& test_wav);

/// Bounds how many external tools run at once across all threads
/// (default: hardware concurrency).
void set_adapter_concurrency_limit(int limit);

}
