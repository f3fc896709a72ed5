#include "paqkit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace paqkit {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void append_tag(std::vector<std::uint8_t>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

}  // namespace

AudioSignal load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open WAV file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error("cannot read WAV file: " + path.string());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw Error("not a RIFF/WAVE file: " + path.string());

    FmtChunk fmt;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size())
            throw Error("truncated WAV chunk in " + path.string());
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16)
                throw Error("malformed fmt chunk in " + path.string());
            const std::uint8_t* p = bytes.data() + body;
            fmt.format = read_u16(p);
            fmt.channels = read_u16(p + 2);
            fmt.sample_rate = read_u32(p + 4);
            fmt.bits_per_sample = read_u16(p + 14);
            if (fmt.format == kFormatExtensible) {
                // The actual codec sits in the first two bytes of the
                // extension's SubFormat GUID.
                if (chunk_size < 40)
                    throw Error("malformed extensible fmt chunk in " + path.string());
                fmt.format = read_u16(p + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word aligned
    }

    if (!have_fmt)
        throw Error("WAV file has no fmt chunk: " + path.string());
    if (data == nullptr)
        throw Error("WAV file has no data chunk: " + path.string());
    if (fmt.channels < 1 || fmt.channels > 8)
        throw Error("unsupported channel count " + std::to_string(fmt.channels) + " in " +
                    path.string());
    if (fmt.sample_rate == 0)
        throw Error("WAV file has zero sample rate: " + path.string());

    const bool is_float = fmt.format == kFormatFloat;
    if (is_float) {
        if (fmt.bits_per_sample != 32)
            throw Error("unsupported float bit depth " + std::to_string(fmt.bits_per_sample) +
                        " in " + path.string());
    } else if (fmt.format == kFormatPcm) {
        if (fmt.bits_per_sample != 16 && fmt.bits_per_sample != 24 && fmt.bits_per_sample != 32)
            throw Error("unsupported PCM bit depth " + std::to_string(fmt.bits_per_sample) +
                        " in " + path.string());
    } else {
        throw Error("unsupported WAV codec 0x" + std::to_string(fmt.format) + " in " +
                    path.string());
    }

    const std::size_t bytes_per_sample = fmt.bits_per_sample / 8u;
    const std::size_t stride = bytes_per_sample * fmt.channels;
    const std::size_t frames = stride == 0 ? 0 : data_size / stride;
    if (frames == 0)
        throw Error("WAV file has no samples: " + path.string());

    AudioSignal out;
    out.sample_rate = static_cast<int>(fmt.sample_rate);
    out.channels.assign(fmt.channels, std::vector<double>(frames));
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::uint16_t c = 0; c < fmt.channels; ++c) {
            const std::uint8_t* p = data + f * stride + c * bytes_per_sample;
            double v = 0.0;
            if (is_float) {
                float x;
                std::memcpy(&x, p, 4);
                v = static_cast<double>(x);
            } else if (fmt.bits_per_sample == 16) {
                const auto raw = static_cast<std::int16_t>(p[0] | (p[1] << 8));
                v = static_cast<double>(raw) / 32768.0;
            } else if (fmt.bits_per_sample == 24) {
                std::int32_t raw = p[0] | (p[1] << 8) | (p[2] << 16);
                if (raw & 0x800000) raw |= ~0xFFFFFF;  // sign extend
                v = static_cast<double>(raw) / 8388608.0;
            } else {
                std::int32_t raw;
                std::memcpy(&raw, p, 4);
                v = static_cast<double>(raw) / 2147483648.0;
            }
            out.channels[c][f] = v;
        }
    }
    out.validate();
    return out;
}

void save_wav(const std::filesystem::path& path, const AudioSignal& signal, WavFormat format) {
    signal.validate();
    const std::uint16_t channels = static_cast<std::uint16_t>(signal.channel_count());
    const std::size_t frames = signal.length();
    const bool is_float = format == WavFormat::float32;
    const std::uint16_t bits = is_float ? 32 : 16;
    const std::uint16_t bytes_per_sample = bits / 8;
    const std::uint32_t data_size =
        static_cast<std::uint32_t>(frames * channels * bytes_per_sample);

    std::vector<std::uint8_t> out;
    out.reserve(data_size + 64);
    append_tag(out, "RIFF");
    // fact chunk (12 bytes) is required for non-PCM formats.
    const std::uint32_t riff_size = 4 + 24 + (is_float ? 12 : 0) + 8 + data_size;
    append_u32(out, riff_size);
    append_tag(out, "WAVE");

    append_tag(out, "fmt ");
    append_u32(out, 16);
    append_u16(out, is_float ? kFormatFloat : kFormatPcm);
    append_u16(out, channels);
    append_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
    append_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * channels * bytes_per_sample);
    append_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
    append_u16(out, bits);

    if (is_float) {
        append_tag(out, "fact");
        append_u32(out, 4);
        append_u32(out, static_cast<std::uint32_t>(frames));
    }

    append_tag(out, "data");
    append_u32(out, data_size);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const double v = signal.channels[c][f];
            if (is_float) {
                const float x = static_cast<float>(v);
                std::uint32_t raw;
                std::memcpy(&raw, &x, 4);
                append_u32(out, raw);
            } else {
                const long scaled =
                    std::lround(std::clamp(v, -1.0, 1.0 - 1.0 / 32768.0) * 32768.0);
                append_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
            }
        }
    }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot create WAV file: " + path.string());
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os)
        throw Error("cannot write WAV file: " + path.string());
}

}
