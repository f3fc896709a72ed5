#include "paqkit/audio_signal.hpp"

#include <string>

namespace paqkit {

void AudioSignal::validate() const {
    if (sample_rate <= 0)
        throw Error("audio signal has non-positive sample rate " + std::to_string(sample_rate));
    if (channels.empty() || channels.size() > 8)
        throw Error("audio signal must have 1..8 channels, got " + std::to_string(channels.size()));
    const std::size_t len = channels.front().size();
    if (len == 0)
        throw Error("audio signal has zero-length channels");
    for (const auto& ch : channels)
        if (ch.size() != len)
            throw Error("audio signal channels differ in length");
}

AudioSignal make_signal(int sample_rate, std::vector<std::vector<double>> channels) {
    AudioSignal s;
    s.sample_rate = sample_rate;
    s.channels = std::move(channels);
    s.validate();
    return s;
}

double channel_mean(const std::vector<double>& per_channel_scores) {
    if (per_channel_scores.empty())
        throw Error("channel_mean of an empty score list");
    double sum = 0.0;
    for (double v : per_channel_scores) sum += v;
    return sum / static_cast<double>(per_channel_scores.size());
}

double signal_energy(const AudioSignal& signal) {
    double e = 0.0;
    for (const auto& ch : signal.channels)
        for (double v : ch) e += v * v;
    return e;
}

AudioSignal signal_sum(const AudioSignal& a, const AudioSignal& b) {
    if (a.channel_count() != b.channel_count() || a.length() != b.length() ||
        a.sample_rate != b.sample_rate)
        throw Error("signal_sum requires equally shaped signals");
    AudioSignal out = a;
    for (int c = 0; c < a.channel_count(); ++c)
        for (std::size_t i = 0; i < a.length(); ++i)
            out.channels[c][i] += b.channels[c][i];
    return out;
}

}
