#include "paqkit/run_config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace paqkit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
    throw Error(origin + ": " + path + ": " + message);
}

double number_field(const json& node, const char* field, double fallback,
                    const std::string& origin, const std::string& path) {
    const auto it = node.find(field);
    if (it == node.end()) return fallback;
    if (!it->is_number())
        fail(origin, path + "." + field, "expected a number");
    return it->get<double>();
}

int int_field(const json& node, const char* field, int fallback, const std::string& origin,
              const std::string& path) {
    const auto it = node.find(field);
    if (it == node.end()) return fallback;
    if (!it->is_number_integer())
        fail(origin, path + "." + field, "expected an integer");
    return it->get<int>();
}

std::string string_field(const json& node, const char* field, const std::string& origin,
                         const std::string& path) {
    const auto it = node.find(field);
    if (it == node.end() || !it->is_string() || it->get<std::string>().empty())
        fail(origin, path, std::string("needs a non-empty string field ") + field);
    return it->get<std::string>();
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

/// Bare command names go to PATH lookup untouched; anything with a
/// directory component resolves like the other config paths.
std::string resolve_exec(const std::string& value, const std::filesystem::path& base) {
    if (value.find('/') == std::string::npos) return value;
    return resolve(value, base).string();
}

std::vector<std::string> argv_field(const json& node, const std::string& origin,
                                    const std::string& path) {
    const auto it = node.find("args");
    if (it == node.end() || !it->is_array())
        fail(origin, path, "needs an args array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_string())
            fail(origin, path + ".args[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*it)[i].get<std::string>());
    }
    return out;
}

WavFormat wav_format_field(const json& node, const std::string& origin,
                           const std::string& path) {
    const auto it = node.find("temp_wav_format");
    if (it == node.end()) return WavFormat::float32;
    const std::string value = it->is_string() ? it->get<std::string>() : "";
    if (value == "float32") return WavFormat::float32;
    if (value == "pcm16") return WavFormat::pcm16;
    fail(origin, path + ".temp_wav_format", "expected float32 or pcm16");
}

std::optional<int> rate_field(const json& node, const std::string& origin,
                              const std::string& path) {
    const auto it = node.find("required_rate");
    if (it == node.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer() || it->get<int>() <= 0)
        fail(origin, path + ".required_rate", "expected a positive integer or null");
    return it->get<int>();
}

FwSnrSegParams fwsnrseg_params(const json& node, const std::string& origin,
                               const std::string& path) {
    FwSnrSegParams p;
    p.frame_ms = number_field(node, "frame_ms", p.frame_ms, origin, path);
    p.hop_ms = number_field(node, "hop_ms", p.hop_ms, origin, path);
    p.band_count = int_field(node, "band_count", p.band_count, origin, path);
    p.snr_floor_db = number_field(node, "snr_floor_db", p.snr_floor_db, origin, path);
    p.snr_ceil_db = number_field(node, "snr_ceil_db", p.snr_ceil_db, origin, path);
    p.weight_exponent = number_field(node, "weight_exponent", p.weight_exponent, origin, path);
    p.silence_gate_db = number_field(node, "silence_gate_db", p.silence_gate_db, origin, path);
    return p;
}

DllrParams dllr_params(const json& node, const std::string& origin, const std::string& path) {
    DllrParams p;
    p.frame_ms = number_field(node, "frame_ms", p.frame_ms, origin, path);
    p.hop_ms = number_field(node, "hop_ms", p.hop_ms, origin, path);
    p.lpc_order = int_field(node, "lpc_order", p.lpc_order, origin, path);
    p.internal_rate = int_field(node, "internal_rate", p.internal_rate, origin, path);
    return p;
}

std::shared_ptr<MovSource> mov_source(const json& node, const std::filesystem::path& base,
                                      const std::string& origin, const std::string& path) {
    const bool has_sidecar = node.contains("mov_sidecar");
    const bool has_adapter = node.contains("mov_adapter");
    if (has_sidecar == has_adapter)
        fail(origin, path, "needs exactly one of mov_sidecar or mov_adapter");
    if (has_sidecar)
        return make_sidecar_mov_source(
            resolve(string_field(node, "mov_sidecar", origin, path), base));

    const auto& a = node["mov_adapter"];
    if (!a.is_object())
        fail(origin, path + ".mov_adapter", "expected an object");
    MovAdapterConfig config;
    config.exec = resolve_exec(string_field(a, "exec", origin, path + ".mov_adapter"), base);
    config.args = argv_field(a, origin, path + ".mov_adapter");
    config.pattern_adb = string_field(a, "pattern_adb", origin, path + ".mov_adapter");
    config.pattern_avg_mod_diff_1 =
        string_field(a, "pattern_avg_mod_diff_1", origin, path + ".mov_adapter");
    config.timeout_sec =
        number_field(a, "timeout_sec", config.timeout_sec, origin, path + ".mov_adapter");
    config.temp_wav_format = wav_format_field(a, origin, path + ".mov_adapter");
    return make_adapter_mov_source(std::move(config));
}

std::shared_ptr<Measure> two_f_from_node(const std::string& name, const json& node,
                                         const std::filesystem::path& base,
                                         const std::string& origin, const std::string& path) {
    auto movs = mov_source(node, base, origin, path);
    const TwoFParams params =
        load_two_f_params(resolve(string_field(node, "params_path", origin, path), base));
    return make_two_f_measure(name, params, std::move(movs), rate_field(node, origin, path));
}

std::shared_ptr<Measure> adapter_from_node(const json& node, const std::filesystem::path& base,
                                           const std::string& origin, const std::string& path) {
    ExternalAdapterConfig config;
    config.name = string_field(node, "name", origin, path);
    config.exec = resolve_exec(string_field(node, "exec", origin, path), base);
    config.args = argv_field(node, origin, path);
    config.pattern = string_field(node, "pattern", origin, path);
    config.timeout_sec = number_field(node, "timeout_sec", config.timeout_sec, origin, path);
    config.required_rate = rate_field(node, origin, path);
    config.temp_wav_format = wav_format_field(node, origin, path);

    const auto it = node.find("scale");
    if (it == node.end() || !it->is_object())
        fail(origin, path, "needs a scale object {min, max, higher_is_better}");
    if (!it->contains("min") || !it->contains("max"))
        fail(origin, path + ".scale", "needs min and max");
    config.scale.min = number_field(*it, "min", 0.0, origin, path + ".scale");
    config.scale.max = number_field(*it, "max", 0.0, origin, path + ".scale");
    const auto hib = it->find("higher_is_better");
    if (hib != it->end() && !hib->is_boolean())
        fail(origin, path + ".scale.higher_is_better", "expected a boolean");
    config.scale.higher_is_better = hib == it->end() ? true : hib->get<bool>();
    return make_external_adapter_measure(std::move(config));
}

std::shared_ptr<Measure> build_measure(const json& node, const std::filesystem::path& base,
                                       const std::string& origin, const std::string& path) {
    const std::string name = string_field(node, "name", origin, path);
    if (node.value("kind", "") == "adapter")
        return adapter_from_node(node, base, origin, path);

    if (name == "fwsnrseg")
        return make_fwsnrseg_measure(fwsnrseg_params(node, origin, path));
    if (name == "dllr")
        return make_dllr_measure(dllr_params(node, origin, path));

    const int taps = int_field(node, "filter_taps", 512, origin, path);
    if (name == "sdr")
        return make_bss_measure(BssRatioKind::sdr, DecompositionMode::full_fir, taps);
    if (name == "sir")
        return make_bss_measure(BssRatioKind::sir, DecompositionMode::full_fir, taps);
    if (name == "sar")
        return make_bss_measure(BssRatioKind::sar, DecompositionMode::full_fir, taps);
    if (name == "si_sdr")
        return make_bss_measure(BssRatioKind::sdr, DecompositionMode::scale_invariant);
    if (name == "si_sir")
        return make_bss_measure(BssRatioKind::sir, DecompositionMode::scale_invariant);
    if (name == "si_sar")
        return make_bss_measure(BssRatioKind::sar, DecompositionMode::scale_invariant);

    if (name == "sa_fwsnrseg")
        return make_sa_measure(name, make_fwsnrseg_measure(fwsnrseg_params(node, origin, path)));
    if (name == "sa_dllr")
        return make_sa_measure(name, make_dllr_measure(dllr_params(node, origin, path)));

    if (name == "two_f")
        return two_f_from_node(name, node, base, origin, path);
    if (name == "si_sa2f")
        return make_sa_measure(name, two_f_from_node(name, node, base, origin, path));

    fail(origin, path, "unknown measure: " + name + " (use kind: \"adapter\" for external tools)");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& config_dir,
                           const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": " + e.what());
    }
    if (!root.is_object())
        fail(origin, "$", "expected an object");

    RunConfig config;
    config.target_rate = int_field(root, "target_rate", config.target_rate, origin, "$");
    if (config.target_rate <= 0)
        fail(origin, "target_rate", "must be positive");
    config.parallelism = int_field(root, "parallelism", config.parallelism, origin, "$");
    if (config.parallelism < 0)
        fail(origin, "parallelism", "must be >= 0");
    config.adapter_concurrency =
        int_field(root, "adapter_concurrency", config.adapter_concurrency, origin, "$");
    if (config.adapter_concurrency < 0)
        fail(origin, "adapter_concurrency", "must be >= 0");
    config.seed = int_field(root, "seed", 0, origin, "$");

    const auto measures = root.find("measures");
    if (measures == root.end() || !measures->is_array() || measures->empty())
        fail(origin, "measures", "expected a non-empty array");
    for (std::size_t i = 0; i < measures->size(); ++i) {
        const std::string path = "measures[" + std::to_string(i) + "]";
        if (!(*measures)[i].is_object())
            fail(origin, path, "expected an object");
        config.registry.add(build_measure((*measures)[i], config_dir, origin, path));
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str(), path.parent_path(), path.string());
}

}
