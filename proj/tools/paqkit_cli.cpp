#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "paqkit/batch.hpp"
#include "paqkit/version.hpp"

namespace {

using paqkit::Error;

int cmd_measure(const std::string& manifest_path, const std::string& config_path,
                const std::string& out_path) {
    const paqkit::Manifest manifest = paqkit::load_manifest(manifest_path);
    const paqkit::RunConfig config = paqkit::load_run_config(config_path);
    const auto rows = paqkit::run_measures(manifest, config,
                                           std::filesystem::path(manifest_path).parent_path());
    paqkit::write_results_csv(out_path, rows);

    std::size_t invalid = 0;
    for (const auto& row : rows)
        if (!row.valid) {
            ++invalid;
            std::cerr << "warning: " << row.test_id << "/" << row.item_id << "/"
                      << row.condition_id << " " << row.measure << ": " << row.note << "\n";
        }
    std::cout << rows.size() << " rows written to " << out_path;
    if (invalid > 0) std::cout << " (" << invalid << " invalid)";
    std::cout << "\n";
    return invalid > 0 ? 2 : 0;
}

int cmd_decompose(const std::string& test_path, const std::string& target_path,
                  const std::vector<std::string>& other_paths, const std::string& mode_name,
                  int taps, const std::string& outdir) {
    const paqkit::AudioSignal y = paqkit::load_wav(test_path);
    const paqkit::AudioSignal target = paqkit::load_wav(target_path);
    std::vector<paqkit::AudioSignal> others;
    for (const auto& p : other_paths) others.push_back(paqkit::load_wav(p));

    const paqkit::Decomposition dec =
        mode_name == "fir" ? paqkit::decompose_bsseval(y, target, others, taps)
                           : paqkit::decompose_si(y, target, others);
    const paqkit::BssRatios r = paqkit::ratios(dec);

    const std::filesystem::path dir(outdir);
    std::filesystem::create_directories(dir);
    paqkit::save_wav(dir / "s_target.wav", dec.s_target);
    paqkit::save_wav(dir / "e_interf.wav", dec.e_interf);
    paqkit::save_wav(dir / "e_artif.wav", dec.e_artif);

    nlohmann::json out = {{"mode", mode_name}, {"sdr", r.sdr}, {"sir", r.sir}, {"sar", r.sar}};
    if (mode_name == "fir") out["filter_taps"] = dec.filter_taps;
    const std::string text = out.dump(2) + "\n";
    std::ofstream json_file(dir / "ratios.json", std::ios::binary);
    if (!json_file || !(json_file << text).flush())
        throw Error("cannot write " + (dir / "ratios.json").string());
    std::cout << text;
    return 0;
}

int cmd_correlate(const std::string& results_path, const std::string& manifest_path,
                  const std::string& outdir) {
    const auto rows = paqkit::load_results_csv(results_path);
    const paqkit::Manifest manifest = paqkit::load_manifest(manifest_path);
    std::vector<std::string> warnings;
    const paqkit::CorrelationReport report = paqkit::correlate_results(rows, manifest, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (report.rows.empty())
        throw Error("no measure has a listening test with at least 3 valid pairs");

    const std::filesystem::path dir(outdir);
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : {std::pair<const char*, std::string>{
                                         "report.csv", paqkit::render_report_csv(report)},
                                     {"report.md", paqkit::render_report_markdown(report)}}) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out || !(out << text).flush())
            throw Error("cannot write " + (dir / name).string());
    }
    std::cout << report.rows.size() << " measures reported to " << outdir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perceptual audio quality measures and correlation reports"};
    app.set_version_flag("--version", paqkit::version_string);
    app.require_subcommand(1);

    std::string manifest_path, config_path, out_path;
    auto* measure = app.add_subcommand("measure", "Run configured measures over a manifest");
    measure->add_option("--manifest", manifest_path, "Manifest file (.json or .csv)")
        ->required();
    measure->add_option("--config", config_path, "Run config (.json)")->required();
    measure->add_option("--out", out_path, "Results CSV to write")->required();

    std::string test_path, target_path, mode_name = "fir", decomp_outdir;
    std::vector<std::string> other_paths;
    int taps = 512;
    auto* decompose =
        app.add_subcommand("decompose", "Split a signal into target, interference and artifacts");
    decompose->add_option("--test", test_path, "Signal under test (WAV)")->required();
    decompose->add_option("--target", target_path, "Target reference (WAV)")->required();
    decompose->add_option("--other", other_paths, "Competing source reference (repeatable)");
    decompose->add_option("--mode", mode_name, "fir: delayed-filter projection, si: single gain")
        ->required()
        ->check(CLI::IsMember({"fir", "si"}));
    decompose->add_option("--taps", taps, "FIR filter length for fir mode");
    decompose->add_option("--outdir", decomp_outdir, "Directory for WAVs and ratios.json")
        ->required();

    std::string results_path, corr_manifest_path, corr_outdir;
    auto* correlate =
        app.add_subcommand("correlate", "Correlate results against subjective scores");
    correlate->add_option("--results", results_path, "Results CSV from measure")->required();
    correlate->add_option("--manifest", corr_manifest_path, "Manifest file (.json or .csv)")
        ->required();
    correlate->add_option("--out", corr_outdir, "Directory for report.csv and report.md")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (measure->parsed())
            return cmd_measure(manifest_path, config_path, out_path);
        if (decompose->parsed())
            return cmd_decompose(test_path, target_path, other_paths, mode_name, taps,
                                 decomp_outdir);
        return cmd_correlate(results_path, corr_manifest_path, corr_outdir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
