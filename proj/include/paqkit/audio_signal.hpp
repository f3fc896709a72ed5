#pragma once

#include <cstddef>
#include <vector>

#include "paqkit/error.hpp"

namespace paqkit {

/// Multichannel audio buffer. Samples are stored per channel as doubles,
/// nominally in [-1, 1]. Intermediate processing results (resampler output,
/// decomposition components) may exceed that range; clamping only happens
/// when writing an integer WAV format.
struct AudioSignal {
    std::vector<std::vector<double>> channels;
    int sample_rate = 0;

    int channel_count() const { return static_cast<int>(channels.size()); }

    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }

    /// Throws Error unless: 1..8 channels, all channels equally long and
    /// non-empty, sample_rate > 0.
    void validate() const;
};

AudioSignal make_signal(int sample_rate, std::vector<std::vector<double>> channels);

/// Mean of one score per channel; the reduction used by measures that
/// process stereo material channel by channel. Throws on an empty input.
double channel_mean(const std::vector<double>& per_channel_scores);

/// Sum of squared samples over all channels.
double signal_energy(const AudioSignal& signal);

/// Per-sample sum of two equally shaped signals.
AudioSignal signal_sum(const AudioSignal& a, const AudioSignal& b);

}
