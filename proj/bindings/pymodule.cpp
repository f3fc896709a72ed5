#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "paqkit/batch.hpp"
#include "paqkit/resample.hpp"
#include "paqkit/version.hpp"

namespace py = pybind11;
using namespace paqkit;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

AudioSignal to_signal(const DoubleArray& array, int rate) {
    AudioSignal signal;
    signal.sample_rate = rate;
    if (array.ndim() == 1) {
        const auto view = array.unchecked<1>();
        std::vector<double> channel(static_cast<std::size_t>(view.shape(0)));
        for (py::ssize_t i = 0; i < view.shape(0); ++i)
            channel[static_cast<std::size_t>(i)] = view(i);
        signal.channels.push_back(std::move(channel));
    } else if (array.ndim() == 2) {
        const auto view = array.unchecked<2>();
        for (py::ssize_t c = 0; c < view.shape(0); ++c) {
            std::vector<double> channel(static_cast<std::size_t>(view.shape(1)));
            for (py::ssize_t i = 0; i < view.shape(1); ++i)
                channel[static_cast<std::size_t>(i)] = view(c, i);
            signal.channels.push_back(std::move(channel));
        }
    } else {
        throw Error("expected a 1-D (samples) or 2-D (channels, samples) array");
    }
    signal.validate();
    return signal;
}

py::array_t<double> from_signal(const AudioSignal& signal) {
    const auto channels = static_cast<py::ssize_t>(signal.channel_count());
    const auto length = static_cast<py::ssize_t>(signal.length());
    py::array_t<double> out({channels, length});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t c = 0; c < channels; ++c)
        for (py::ssize_t i = 0; i < length; ++i)
            view(c, i) = signal.channels[static_cast<std::size_t>(c)]
                                        [static_cast<std::size_t>(i)];
    return out;
}

std::vector<AudioSignal> to_signals(const std::vector<DoubleArray>& arrays, int rate) {
    std::vector<AudioSignal> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays) out.push_back(to_signal(a, rate));
    return out;
}

WavFormat parse_format(const std::string& name) {
    if (name == "float32") return WavFormat::float32;
    if (name == "pcm16") return WavFormat::pcm16;
    throw Error("format must be float32 or pcm16, got " + name);
}

DecompositionMode parse_mode(const std::string& name) {
    if (name == "fir") return DecompositionMode::full_fir;
    if (name == "si") return DecompositionMode::scale_invariant;
    throw Error("mode must be fir or si, got " + name);
}

CorrKind parse_kind(const std::string& name) {
    if (name == "pearson") return CorrKind::pearson;
    if (name == "kendall") return CorrKind::kendall;
    throw Error("kind must be pearson or kendall, got " + name);
}

py::dict decomposition_dict(const Decomposition& dec) {
    const BssRatios clamped = ratios(dec);
    py::dict out;
    out["s_target"] = from_signal(dec.s_target);
    out["e_interf"] = from_signal(dec.e_interf);
    out["e_artif"] = from_signal(dec.e_artif);
    out["sdr"] = clamped.sdr;
    out["sir"] = clamped.sir;
    out["sar"] = clamped.sar;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Full-reference perceptual audio quality measures";
    m.attr("__version__") = version_string;

    py::register_exception<Error>(m, "PaqkitError", PyExc_RuntimeError);

    m.def(
        "load_wav",
        [](const std::filesystem::path& path) {
            const AudioSignal signal = load_wav(path);
            return py::make_tuple(from_signal(signal), signal.sample_rate);
        },
        py::arg("path"), "Reads a WAV file; returns ((channels, samples) float64 array, rate).");

    m.def(
        "save_wav",
        [](const std::filesystem::path& path, const DoubleArray& samples, int rate,
           const std::string& format) {
            save_wav(path, to_signal(samples, rate), parse_format(format));
        },
        py::arg("path"), py::arg("samples"), py::arg("rate"), py::arg("format") = "float32");

    m.def(
        "resample",
        [](const DoubleArray& samples, int rate, int target_rate) {
            return from_signal(resample(to_signal(samples, rate), target_rate));
        },
        py::arg("samples"), py::arg("rate"), py::arg("target_rate"),
        "Windowed-sinc rate conversion; shape (channels, samples) in and out.");

    m.def(
        "fwsnrseg",
        [](const DoubleArray& reference, const DoubleArray& test, int rate) {
            return fwsnrseg(to_signal(reference, rate), to_signal(test, rate));
        },
        py::arg("reference"), py::arg("test"), py::arg("rate"),
        "Frequency-weighted segmental SNR in dB, higher is better.");

    m.def(
        "dllr",
        [](const DoubleArray& reference, const DoubleArray& test, int rate) {
            return dllr(to_signal(reference, rate), to_signal(test, rate));
        },
        py::arg("reference"), py::arg("test"), py::arg("rate"),
        "Log-likelihood-ratio spectral distance, lower is better.");

    m.def(
        "decompose",
        [](const DoubleArray& test, const DoubleArray& target,
           const std::vector<DoubleArray>& others, int rate, const std::string& mode,
           int taps) {
            const AudioSignal y = to_signal(test, rate);
            const AudioSignal t = to_signal(target, rate);
            const auto other_signals = to_signals(others, rate);
            const Decomposition dec = parse_mode(mode) == DecompositionMode::full_fir
                                          ? decompose_bsseval(y, t, other_signals, taps)
                                          : decompose_si(y, t, other_signals);
            return decomposition_dict(dec);
        },
        py::arg("test"), py::arg("target"), py::arg("others") = std::vector<DoubleArray>{},
        py::arg("rate") = 48000, py::arg("mode") = "fir", py::arg("taps") = 512,
        "Splits a signal into target, interference and artifact parts; returns the\n"
        "three signals plus clamped SDR/SIR/SAR in dB.");

    m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
    m.def("kendall", &kendall, py::arg("x"), py::arg("y"));
    m.def("tau_prime", &tau_prime, py::arg("tau"));
    m.def(
        "corr_significant",
        [](double coefficient, const std::string& kind, int n) {
            return corr_significant(coefficient, parse_kind(kind), n);
        },
        py::arg("coefficient"), py::arg("kind"), py::arg("n"),
        "Two-tailed significance at alpha = 0.05.");
    m.def(
        "fisher_z", [](double gamma) { return fisher_z(gamma); }, py::arg("gamma"));
    m.def("fisher_z_inv", &fisher_z_inv, py::arg("z"));

    m.def(
        "two_f_combine",
        [](double adb, double avg_mod_diff_1, const std::string& mapping, double intercept,
           double coef_adb, double coef_avg_mod_diff_1) {
            TwoFParams params;
            if (mapping == "affine")
                params.mapping = TwoFMapping::affine;
            else if (mapping == "logistic")
                params.mapping = TwoFMapping::logistic;
            else
                throw Error("mapping must be affine or logistic, got " + mapping);
            params.intercept = intercept;
            params.coef_adb = coef_adb;
            params.coef_avg_mod_diff_1 = coef_avg_mod_diff_1;
            return two_f_combine(adb, avg_mod_diff_1, params);
        },
        py::arg("adb"), py::arg("avg_mod_diff_1"), py::arg("mapping"), py::arg("intercept"),
        py::arg("coef_adb"), py::arg("coef_avg_mod_diff_1"),
        "Maps the two model output variables to a 0-100 quality score.");
}
