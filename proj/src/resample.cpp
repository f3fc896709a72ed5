#include "paqkit/resample.hpp"

#include <cmath>
#include <vector>

namespace paqkit {

namespace {

constexpr double kKaiserBeta = 8.6;
constexpr int kHalfTaps = 32;       // 64-tap kernel at the slower of the two rates
constexpr int kLutPerSample = 256;  // kernel table resolution, linearly interpolated

double bessel_i0(double x) {
    // Power series; converges quickly for the argument range used here.
    double sum = 1.0, term = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

// Interpolation kernel sampled on a fine grid. `cut` is the lowpass scale
// (1 for upsampling, target/source when downsampling); the half width in
// input samples is kHalfTaps / cut.
struct Kernel {
    double half_width;
    double inv_step;
    std::vector<double> table;

    explicit Kernel(double cut) {
        half_width = kHalfTaps / cut;
        const int n = static_cast<int>(std::ceil(half_width * kLutPerSample)) + 2;
        inv_step = kLutPerSample;
        table.resize(static_cast<std::size_t>(n), 0.0);
        const double i0_beta = bessel_i0(kKaiserBeta);
        for (int i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) / kLutPerSample;  // distance in input samples
            const double w = cut * u / kHalfTaps;                     // window position in [0, 1]
            if (w >= 1.0) continue;
            const double window = bessel_i0(kKaiserBeta * std::sqrt(1.0 - w * w)) / i0_beta;
            table[static_cast<std::size_t>(i)] = cut * sinc(cut * u) * window;
        }
    }

    double operator()(double u) const {
        const double a = std::abs(u) * inv_step;
        const auto i = static_cast<std::size_t>(a);
        if (i + 1 >= table.size()) return 0.0;
        const double frac = a - static_cast<double>(i);
        return table[i] + frac * (table[i + 1] - table[i]);
    }
};

}  // namespace

AudioSignal resample(const AudioSignal& input, int target_rate) {
    input.validate();
    if (target_rate <= 0)
        throw Error("resample target rate must be positive");
    if (target_rate == input.sample_rate)
        return input;

    const double ratio = static_cast<double>(target_rate) / input.sample_rate;
    const Kernel kernel(std::min(1.0, ratio));
    const auto in_len = static_cast<double>(input.length());
    const auto out_len = static_cast<std::size_t>(std::llround(in_len * ratio));
    if (out_len == 0)
        throw Error("resample output would be empty");

    AudioSignal out;
    out.sample_rate = target_rate;
    out.channels.assign(static_cast<std::size_t>(input.channel_count()),
                        std::vector<double>(out_len, 0.0));
    const auto n_in = static_cast<long long>(input.length());
    for (int c = 0; c < input.channel_count(); ++c) {
        const auto& src = input.channels[static_cast<std::size_t>(c)];
        auto& dst = out.channels[static_cast<std::size_t>(c)];
        for (std::size_t n = 0; n < out_len; ++n) {
            const double t = static_cast<double>(n) / ratio;  // position in input samples
            auto first = static_cast<long long>(std::ceil(t - kernel.half_width));
            auto last = static_cast<long long>(std::floor(t + kernel.half_width));
            first = std::max<long long>(first, 0);
            last = std::min(last, n_in - 1);
            double acc = 0.0;
            for (long long i = first; i <= last; ++i)
                acc += src[static_cast<std::size_t>(i)] * kernel(t - static_cast<double>(i));
            dst[n] = acc;
        }
    }
    return out;
}

}
