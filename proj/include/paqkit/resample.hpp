#pragma once

#include "paqkit/audio_signal.hpp"

namespace paqkit {

/// Sample rate conversion with a Kaiser-windowed (beta = 8.6) sinc kernel,
/// 64 taps per output phase. When downsampling, the kernel cutoff scales to
/// the target Nyquist. Output length is round(length * target / source).
/// Returns the input unchanged when the rate already matches.
AudioSignal resample(const AudioSignal& input, int target_rate);

}
