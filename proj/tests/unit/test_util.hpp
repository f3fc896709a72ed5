#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "paqkit/audio_signal.hpp"

namespace testutil {

/// Deterministic uniform samples in [-scale, scale].
inline std::vector<double> noise(std::size_t length, std::uint32_t seed, double scale = 0.5) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<double> out(length);
    for (auto& v : out) v = dist(rng);
    return out;
}

inline std::vector<double> sine(std::size_t length, double freq_hz, int rate,
                                double amplitude = 0.5, double phase = 0.0) {
    std::vector<double> out(length);
    for (std::size_t n = 0; n < length; ++n)
        out[n] = amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(n) / rate +
                                      phase);
    return out;
}

inline paqkit::AudioSignal mono(int rate, std::vector<double> samples) {
    return paqkit::make_signal(rate, {std::move(samples)});
}

inline paqkit::AudioSignal noise_signal(std::size_t length, int rate, std::uint32_t seed,
                                        int channels = 1, double scale = 0.5) {
    std::vector<std::vector<double>> data;
    for (int c = 0; c < channels; ++c)
        data.push_back(noise(length, seed + static_cast<std::uint32_t>(c) * 7919u, scale));
    return paqkit::make_signal(rate, std::move(data));
}

inline paqkit::AudioSignal mix(const paqkit::AudioSignal& a, double ga,
                               const paqkit::AudioSignal& b, double gb) {
    paqkit::AudioSignal out = a;
    for (std::size_t c = 0; c < out.channels.size(); ++c)
        for (std::size_t i = 0; i < out.channels[c].size(); ++i)
            out.channels[c][i] = ga * a.channels[c][i] + gb * b.channels[c][i];
    return out;
}

inline paqkit::AudioSignal scaled(const paqkit::AudioSignal& a, double gain) {
    paqkit::AudioSignal out = a;
    for (auto& channel : out.channels)
        for (auto& v : channel) v *= gain;
    return out;
}

/// Direct convolution with an FIR, truncated to the input length.
inline std::vector<double> fir(const std::vector<double>& x, const std::vector<double>& h) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n)
        for (std::size_t k = 0; k < h.size() && k <= n; ++k) out[n] += h[k] * x[n - k];
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}
