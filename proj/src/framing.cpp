#include "paqkit/framing.hpp"

#include <cmath>

namespace paqkit {

std::vector<double> window_values(WindowKind kind, std::size_t length) {
    if (length == 0)
        throw Error("window length must be positive");
    std::vector<double> w(length, 1.0);
    if (kind == WindowKind::hann && length > 1) {
        const double denom = static_cast<double>(length - 1);
        for (std::size_t n = 0; n < length; ++n)
            w[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(n) / denom));
    }
    return w;
}

std::size_t frame_count(std::size_t length, std::size_t frame_length, std::size_t hop) {
    if (frame_length == 0 || hop == 0)
        throw Error("frame length and hop must be positive");
    if (length < frame_length) return 0;
    return (length - frame_length) / hop + 1;
}

std::vector<std::vector<Frame>> frame_stream(const AudioSignal& signal, std::size_t frame_length,
                                             std::size_t hop, WindowKind window) {
    signal.validate();
    const std::size_t count = frame_count(signal.length(), frame_length, hop);
    const std::vector<double> w = window_values(window, frame_length);

    std::vector<std::vector<Frame>> out(static_cast<std::size_t>(signal.channel_count()));
    for (int c = 0; c < signal.channel_count(); ++c) {
        const auto& src = signal.channels[static_cast<std::size_t>(c)];
        auto& frames = out[static_cast<std::size_t>(c)];
        frames.resize(count);
        for (std::size_t f = 0; f < count; ++f) {
            Frame& frame = frames[f];
            frame.start = f * hop;
            frame.samples.resize(frame_length);
            for (std::size_t n = 0; n < frame_length; ++n)
                frame.samples[n] = src[frame.start + n] * w[n];
        }
    }
    return out;
}

}
