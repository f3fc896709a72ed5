#pragma once

#include <filesystem>

#include "paqkit/audio_signal.hpp"

namespace paqkit {

enum class WavFormat { float32, pcm16 };

/// Reads a RIFF/WAVE file. Supported encodings: PCM 16/24/32-bit integer
/// and IEEE 32-bit float, 1 to 8 channels. Integer samples are scaled by
/// 1 / 2^(bits-1); float samples are taken as stored. Throws Error on
/// unreadable files, unsupported codecs and zero-length streams.
AudioSignal load_wav(const std::filesystem::path& path);

/// Writes a RIFF/WAVE file. float32 round-trips our sample type losslessly;
/// pcm16 rounds and clamps to [-1, 1), for external tools that cannot read
/// float WAVs.
void save_wav(const std::filesystem::path& path, const AudioSignal& signal,
              WavFormat format = WavFormat::float32);

}
