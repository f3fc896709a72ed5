#pragma once

#include <cstddef>
#include <vector>

#include "paqkit/audio_signal.hpp"

namespace paqkit {

enum class WindowKind { rectangular, hann };

struct Frame {
    std::size_t start = 0;        // sample index into the source channel
    std::vector<double> samples;  // window already applied
};

/// w[n] for n in [0, N): rectangular, or the symmetric Hann window
/// 0.5 * (1 - cos(2*pi*n / (N-1))), whose values sum to (N-1)/2.
std::vector<double> window_values(WindowKind kind, std::size_t length);

/// floor((length - frame_length) / hop) + 1 when length >= frame_length,
/// else 0. The trailing partial frame is discarded.
std::size_t frame_count(std::size_t length, std::size_t frame_length, std::size_t hop);

/// Windowed frames per channel: result[channel][frame].
std::vector<std::vector<Frame>> frame_stream(const AudioSignal& signal,
                                             std::size_t frame_length, std::size_t hop,
                                             WindowKind window);

}
