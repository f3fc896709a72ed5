#include "paqkit/speech.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "paqkit/fft.hpp"
#include "paqkit/framing.hpp"
#include "paqkit/resample.hpp"

namespace paqkit {

namespace {

double hz_to_bark(double hz) {
    return 13.0 * std::atan(0.00076 * hz) + 3.5 * std::atan((hz / 7500.0) * (hz / 7500.0));
}

double bark_to_hz(double bark) {
    double lo = 0.0, hi = 16000.0;
    while (hz_to_bark(hi) < bark) hi *= 2.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (hz_to_bark(mid) < bark ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::size_t samples_for_ms(double ms, int rate) {
    const double n = ms * 1e-3 * static_cast<double>(rate);
    const auto s = static_cast<long long>(std::llround(n));
    if (s < 1)
        throw Error("frame/hop duration too short for sample rate " + std::to_string(rate));
    return static_cast<std::size_t>(s);
}

void check_pair(const AudioSignal& reference, const AudioSignal& test, const char* what) {
    reference.validate();
    test.validate();
    if (reference.sample_rate != test.sample_rate)
        throw Error(std::string(what) + ": sample rates differ");
    if (reference.length() != test.length())
        throw Error(std::string(what) + ": lengths differ");
    if (reference.channel_count() != test.channel_count())
        throw Error(std::string(what) + ": channel counts differ");
    if (reference.channel_count() > 2)
        throw Error(std::string(what) + " is defined for mono and stereo only, got " +
                    std::to_string(reference.channel_count()) + " channels");
}

double frame_power_db(const std::vector<double>& channel, std::size_t start, std::size_t length) {
    double acc = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
        const double v = channel[start + i];
        acc += v * v;
    }
    const double mean = acc / static_cast<double>(length);
    if (mean <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mean);
}

std::vector<double> autocorrelation(const std::vector<double>& frame, int max_lag) {
    std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
    const std::size_t n = frame.size();
    for (int k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i)
            acc += frame[i] * frame[i - static_cast<std::size_t>(k)];
        r[static_cast<std::size_t>(k)] = acc;
    }
    return r;
}

std::optional<LpcResult> lpc_from_autocorrelation(const std::vector<double>& r, int order) {
    if (r[0] <= 0.0) return std::nullopt;
    std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
    a[0] = 1.0;
    double energy = r[0];
    for (int i = 1; i <= order; ++i) {
        double acc = r[static_cast<std::size_t>(i)];
        for (int j = 1; j < i; ++j)
            acc += a[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(i - j)];
        const double k = -acc / energy;
        for (int j = 1; j <= i / 2; ++j) {
            const double tmp = a[static_cast<std::size_t>(j)] + k * a[static_cast<std::size_t>(i - j)];
            a[static_cast<std::size_t>(i - j)] += k * a[static_cast<std::size_t>(j)];
            a[static_cast<std::size_t>(j)] = tmp;
        }
        a[static_cast<std::size_t>(i)] = k;
        energy *= 1.0 - k * k;
        if (!(energy > 0.0)) return std::nullopt;
    }
    return LpcResult{std::move(a), energy};
}

/// a R a' with R the Toeplitz matrix built from the autocorrelation r.
double quadratic_form(const std::vector<double>& a, const std::vector<double>& r) {
    const std::size_t n = a.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            acc += a[i] * a[j] * r[i > j ? i - j : j - i];
    return acc;
}

}  // namespace

std::vector<double> critical_band_edges(int band_count, int sample_rate) {
    if (band_count < 1)
        throw Error("band_count must be positive");
    if (sample_rate <= 0)
        throw Error("sample rate must be positive");
    const double top_hz = std::min(0.5 * sample_rate, 15500.0);
    const double top_bark = hz_to_bark(top_hz);
    std::vector<double> edges(static_cast<std::size_t>(band_count) + 1);
    edges[0] = 0.0;
    edges[static_cast<std::size_t>(band_count)] = top_hz;
    for (int i = 1; i < band_count; ++i)
        edges[static_cast<std::size_t>(i)] =
            bark_to_hz(top_bark * static_cast<double>(i) / band_count);
    return edges;
}

std::vector<double> critical_band_energies(const std::vector<double>& magnitude_spectrum,
                                           double bin_hz,
                                           const std::vector<double>& band_edges_hz) {
    if (band_edges_hz.size() < 2)
        throw Error("need at least two band edges");
    for (std::size_t i = 1; i < band_edges_hz.size(); ++i)
        if (!(band_edges_hz[i] > band_edges_hz[i - 1]))
            throw Error("band edges must be strictly increasing");
    if (bin_hz <= 0.0)
        throw Error("bin spacing must be positive");

    const std::size_t bands = band_edges_hz.size() - 1;
    std::vector<double> power(bands, 0.0);
    for (std::size_t k = 0; k < magnitude_spectrum.size(); ++k) {
        const double f = bin_hz * static_cast<double>(k);
        if (f < band_edges_hz.front() || f >= band_edges_hz.back()) continue;
        const auto it = std::upper_bound(band_edges_hz.begin(), band_edges_hz.end(), f);
        const auto band = static_cast<std::size_t>(it - band_edges_hz.begin()) - 1;
        power[band] += magnitude_spectrum[k] * magnitude_spectrum[k];
    }
    std::vector<double> magnitude(bands);
    for (std::size_t b = 0; b < bands; ++b) magnitude[b] = std::sqrt(power[b]);
    return magnitude;
}

double fwsnrseg(const AudioSignal& reference, const AudioSignal& test,
                const FwSnrSegParams& params) {
    check_pair(reference, test, "fwsnrseg");
    if (!(params.snr_floor_db < params.snr_ceil_db))
        throw Error("fwsnrseg: snr_floor_db must be below snr_ceil_db");
    if (!(params.weight_exponent > 0.0 && params.weight_exponent <= 1.0))
        throw Error("fwsnrseg: weight_exponent must be in (0, 1]");

    const int rate = reference.sample_rate;
    const std::size_t frame_len = samples_for_ms(params.frame_ms, rate);
    const std::size_t hop = samples_for_ms(params.hop_ms, rate);
    if (reference.length() < frame_len)
        throw Error("fwsnrseg: signal shorter than one frame");

    const std::vector<double> edges = critical_band_edges(params.band_count, rate);
    const std::size_t nfft = next_pow2(frame_len);
    const double bin_hz = static_cast<double>(rate) / static_cast<double>(nfft);

    const auto ref_frames = frame_stream(reference, frame_len, hop, WindowKind::hann);
    const auto test_frames = frame_stream(test, frame_len, hop, WindowKind::hann);

    std::vector<double> per_channel;
    for (int c = 0; c < reference.channel_count(); ++c) {
        const auto& rf = ref_frames[static_cast<std::size_t>(c)];
        const auto& tf = test_frames[static_cast<std::size_t>(c)];
        double frame_sum = 0.0;
        std::size_t frames_used = 0;
        for (std::size_t f = 0; f < rf.size(); ++f) {
            // The gate looks at the raw (unwindowed) reference frame power.
            const double gate_db = frame_power_db(reference.channels[static_cast<std::size_t>(c)],
                                                  rf[f].start, frame_len);
            if (gate_db < params.silence_gate_db) continue;

            const auto b_ref =
                critical_band_energies(magnitude_spectrum(rf[f].samples, nfft), bin_hz, edges);
            const auto b_test =
                critical_band_energies(magnitude_spectrum(tf[f].samples, nfft), bin_hz, edges);

            double num = 0.0, den = 0.0;
            double first_snr = 0.0;
            bool all_equal = true;
            std::size_t bands_used = 0;
            for (std::size_t b = 0; b < b_ref.size(); ++b) {
                if (b_ref[b] <= 0.0) continue;  // zero weight, no contribution
                const double weight = std::pow(b_ref[b], params.weight_exponent);
                const double diff = b_ref[b] - b_test[b];
                double snr;
                if (diff == 0.0) {
                    snr = params.snr_ceil_db;
                } else {
                    snr = 10.0 * std::log10((b_ref[b] * b_ref[b]) / (diff * diff));
                    snr = std::clamp(snr, params.snr_floor_db, params.snr_ceil_db);
                }
                if (bands_used == 0)
                    first_snr = snr;
                else if (snr != first_snr)
                    all_equal = false;
                ++bands_used;
                num += weight * snr;
                den += weight;
            }
            if (den <= 0.0) continue;
            // A weighted mean of equal values is that value; taking the
            // shortcut keeps identities like fwsnrseg(x, x) == ceiling exact.
            frame_sum += all_equal ? first_snr : num / den;
            ++frames_used;
        }
        if (frames_used == 0)
            throw Error("fwsnrseg: no frames survive the silence gate");
        per_channel.push_back(frame_sum / static_cast<double>(frames_used));
    }
    return channel_mean(per_channel);
}

std::optional<LpcResult> lpc(const std::vector<double>& frame, int order) {
    if (order < 1)
        throw Error("lpc order must be positive");
    if (frame.size() <= static_cast<std::size_t>(order))
        throw Error("lpc frame must be longer than the order");
    return lpc_from_autocorrelation(autocorrelation(frame, order), order);
}

double dllr(const AudioSignal& reference, const AudioSignal& test, const DllrParams& params) {
    check_pair(reference, test, "dllr");
    if (params.lpc_order < 1)
        throw Error("dllr: lpc_order must be positive");

    const AudioSignal ref16 = resample(reference, params.internal_rate);
    const AudioSignal test16 = resample(test, params.internal_rate);

    const std::size_t frame_len = samples_for_ms(params.frame_ms, params.internal_rate);
    const std::size_t hop = samples_for_ms(params.hop_ms, params.internal_rate);
    if (frame_len <= static_cast<std::size_t>(params.lpc_order))
        throw Error("dllr: frame shorter than the LPC order");
    if (ref16.length() < frame_len)
        throw Error("dllr: signal shorter than one frame");

    const auto ref_frames = frame_stream(ref16, frame_len, hop, WindowKind::hann);
    const auto test_frames = frame_stream(test16, frame_len, hop, WindowKind::hann);

    std::vector<double> per_channel;
    for (int c = 0; c < ref16.channel_count(); ++c) {
        const auto& rf = ref_frames[static_cast<std::size_t>(c)];
        const auto& tf = test_frames[static_cast<std::size_t>(c)];
        std::vector<double> distances;
        distances.reserve(rf.size());
        for (std::size_t f = 0; f < rf.size(); ++f) {
            const auto r_ref = autocorrelation(rf[f].samples, params.lpc_order);
            const auto fit_ref = lpc_from_autocorrelation(r_ref, params.lpc_order);
            const auto fit_test = lpc(tf[f].samples, params.lpc_order);
            if (!fit_ref || !fit_test) continue;
            // Both coefficient vectors lead with 1 and the reference fit
            // satisfies the normal equations, so num = den + delta R delta'
            // with delta the coefficient difference. Evaluating the excess
            // term directly instead of num - den avoids the cancellation
            // noise, and a sub-roundoff excess is genuinely a perfect match.
            const double den = quadratic_form(fit_ref->coefficients, r_ref);
            if (!(den > 0.0)) continue;
            std::vector<double> delta = fit_test->coefficients;
            for (std::size_t i = 0; i < delta.size(); ++i)
                delta[i] -= fit_ref->coefficients[i];
            double excess = quadratic_form(delta, r_ref);
            if (!(excess > 1e-20 * den)) excess = 0.0;
            distances.push_back(std::log1p(excess / den));
        }
        if (distances.empty())
            throw Error("dllr: all frames degenerate");
        per_channel.push_back(detail::capped_frame_mean(distances, DllrParams::per_frame_cap));
    }
    return channel_mean(per_channel);
}

namespace detail {

double capped_frame_mean(const std::vector<double>& values, double cap) {
    if (values.empty())
        throw Error("capped_frame_mean of an empty list");
    double acc = 0.0;
    for (double v : values) acc += std::clamp(v, 0.0, cap);
    return acc / static_cast<double>(values.size());
}

}

}
