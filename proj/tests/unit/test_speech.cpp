#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "paqkit/speech.hpp"
#include "test_util.hpp"

using namespace paqkit;

namespace {

// Independent fwsnrseg reimplementation: own window, own naive DFT, own
// band assignment. Only critical_band_edges is shared (tested separately).
namespace oracle {

double hz_to_bark(double hz) {
    return 13.0 * std::atan(0.00076 * hz) + 3.5 * std::atan((hz / 7500.0) * (hz / 7500.0));
}

std::vector<double> dft_magnitudes(const std::vector<double>& frame, std::size_t nfft) {
    std::vector<double> mags(nfft / 2 + 1, 0.0);
    for (std::size_t k = 0; k < mags.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < frame.size(); ++n) {
            const double w = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(n) /
                             static_cast<double>(nfft);
            re += frame[n] * std::cos(w);
            im -= frame[n] * std::sin(w);
        }
        mags[k] = std::hypot(re, im);
    }
    return mags;
}

std::vector<double> band_magnitudes(const std::vector<double>& mags, double bin_hz,
                                    const std::vector<double>& edges) {
    std::vector<double> power(edges.size() - 1, 0.0);
    for (std::size_t k = 0; k < mags.size(); ++k) {
        const double f = bin_hz * static_cast<double>(k);
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (f >= edges[b] && f < edges[b + 1]) {
                power[b] += mags[k] * mags[k];
                break;
            }
    }
    for (auto& p : power) p = std::sqrt(p);
    return power;
}

double fwsnrseg(const AudioSignal& reference, const AudioSignal& test,
                const FwSnrSegParams& p = {}) {
    const int rate = reference.sample_rate;
    const auto frame_len =
        static_cast<std::size_t>(std::llround(p.frame_ms * 1e-3 * rate));
    const auto hop = static_cast<std::size_t>(std::llround(p.hop_ms * 1e-3 * rate));
    std::size_t nfft = 1;
    while (nfft < frame_len) nfft *= 2;
    const double bin_hz = static_cast<double>(rate) / static_cast<double>(nfft);
    const auto edges = critical_band_edges(p.band_count, rate);

    std::vector<double> window(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n)
        window[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(n) /
                                          static_cast<double>(frame_len - 1)));

    std::vector<double> per_channel;
    for (const auto& [ref_ch, test_ch] :
         [&] {
             std::vector<std::pair<const std::vector<double>*, const std::vector<double>*>> v;
             for (std::size_t c = 0; c < reference.channels.size(); ++c)
                 v.emplace_back(&reference.channels[c], &test.channels[c]);
             return v;
         }()) {
        double total = 0.0;
        std::size_t used = 0;
        for (std::size_t start = 0; start + frame_len <= ref_ch->size(); start += hop) {
            double raw_power = 0.0;
            for (std::size_t n = 0; n < frame_len; ++n)
                raw_power += (*ref_ch)[start + n] * (*ref_ch)[start + n];
            raw_power /= static_cast<double>(frame_len);
            if (raw_power <= 0.0 ||
                10.0 * std::log10(raw_power) < p.silence_gate_db)
                continue;

            std::vector<double> rw(frame_len), tw(frame_len);
            for (std::size_t n = 0; n < frame_len; ++n) {
                rw[n] = (*ref_ch)[start + n] * window[n];
                tw[n] = (*test_ch)[start + n] * window[n];
            }
            const auto b_ref = band_magnitudes(dft_magnitudes(rw, nfft), bin_hz, edges);
            const auto b_test = band_magnitudes(dft_magnitudes(tw, nfft), bin_hz, edges);

            double num = 0.0, den = 0.0;
            for (std::size_t b = 0; b < b_ref.size(); ++b) {
                if (b_ref[b] <= 0.0) continue;
                const double weight = std::pow(b_ref[b], p.weight_exponent);
                const double diff = b_ref[b] - b_test[b];
                const double snr =
                    diff == 0.0 ? p.snr_ceil_db
                                : std::clamp(10.0 * std::log10(b_ref[b] * b_ref[b] /
                                                               (diff * diff)),
                                             p.snr_floor_db, p.snr_ceil_db);
                num += weight * snr;
                den += weight;
            }
            if (den <= 0.0) continue;
            total += num / den;
            ++used;
        }
        per_channel.push_back(total / static_cast<double>(used));
    }
    double mean = 0.0;
    for (const double v : per_channel) mean += v;
    return mean / static_cast<double>(per_channel.size());
}

}  // namespace oracle

}  // namespace

TEST_CASE("critical band edges are uniform on the Bark scale") {
    for (const int rate : {8000, 16000, 48000}) {
        const auto edges = critical_band_edges(25, rate);
        REQUIRE(edges.size() == 26);
        CHECK(edges.front() == 0.0);
        CHECK(edges.back() == doctest::Approx(std::min(rate / 2.0, 15500.0)));
        const double step = oracle::hz_to_bark(edges.back()) / 25.0;
        for (std::size_t i = 1; i < edges.size(); ++i) {
            CHECK(edges[i] > edges[i - 1]);
            CHECK(oracle::hz_to_bark(edges[i]) ==
                  doctest::Approx(step * static_cast<double>(i)).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(critical_band_edges(0, 48000), Error);
    CHECK_THROWS_AS(critical_band_edges(25, 0), Error);
}

TEST_CASE("critical band energies bucket bins correctly") {
    // Edges 0/100/300; bins at 0, 80, 160, 240, 320 Hz with bin_hz = 80.
    const std::vector<double> edges = {0.0, 100.0, 300.0};
    const std::vector<double> mags = {1.0, 2.0, 3.0, 4.0, 5.0};
    const auto bands = critical_band_energies(mags, 80.0, edges);
    REQUIRE(bands.size() == 2);
    CHECK(bands[0] == doctest::Approx(std::sqrt(1.0 + 4.0)));     // 0 and 80 Hz
    CHECK(bands[1] == doctest::Approx(std::sqrt(9.0 + 16.0)));    // 160 and 240 Hz
    CHECK_THROWS_AS(critical_band_energies(mags, 80.0, {100.0, 100.0}), Error);
    CHECK_THROWS_AS(critical_band_energies(mags, 0.0, edges), Error);
}

TEST_CASE("fwsnrseg matches an independent reimplementation") {
    for (const auto [rate, seed] :
         {std::pair{8000, 101u}, {8000, 102u}, {16000, 103u}, {16000, 104u}}) {
        const std::size_t length = static_cast<std::size_t>(rate) / 2;
        const AudioSignal ref = testutil::noise_signal(length, rate, seed);
        const AudioSignal test = testutil::mix(ref, 1.0,
                                               testutil::noise_signal(length, rate, seed + 50),
                                               0.1);
        const double fast = fwsnrseg(ref, test);
        const double slow = oracle::fwsnrseg(ref, test);
        CHECK(std::abs(fast - slow) < 1e-9);
    }

    // Stereo: library result equals the oracle and the mean of mono runs.
    const AudioSignal ref = testutil::noise_signal(6000, 8000, 7, 2);
    AudioSignal test = ref;
    for (std::size_t i = 0; i < test.channels[0].size(); ++i) {
        test.channels[0][i] *= 0.92;
        test.channels[1][i] *= 0.70;
    }
    const double stereo = fwsnrseg(ref, test);
    CHECK(std::abs(stereo - oracle::fwsnrseg(ref, test)) < 1e-9);
    const double left = fwsnrseg(make_signal(8000, {ref.channels[0]}),
                                 make_signal(8000, {test.channels[0]}));
    const double right = fwsnrseg(make_signal(8000, {ref.channels[1]}),
                                  make_signal(8000, {test.channels[1]}));
    CHECK(stereo == doctest::Approx(0.5 * (left + right)).epsilon(1e-12));
    CHECK(left > right);  // milder gain error scores higher
}

TEST_CASE("fwsnrseg exact identities and gating") {
    const AudioSignal x = testutil::noise_signal(8000, 16000, 42);
    CHECK(fwsnrseg(x, x) == 35.0);

    AudioSignal silence = x;
    for (auto& v : silence.channels[0]) v = 0.0;
    CHECK(fwsnrseg(x, silence) == 0.0);

    // A silent stretch in the reference is gated out: corrupt the test
    // signal only there and the score must not move.
    AudioSignal gappy = x;
    for (std::size_t i = 2000; i < 4000; ++i) gappy.channels[0][i] = 0.0;
    AudioSignal clean_elsewhere = gappy;
    AudioSignal corrupted = gappy;
    for (std::size_t i = 2400; i < 3400; ++i) corrupted.channels[0][i] = 0.3;
    CHECK(fwsnrseg(gappy, clean_elsewhere) == fwsnrseg(gappy, corrupted));

    CHECK_THROWS_WITH_AS(fwsnrseg(silence, x), "fwsnrseg: no frames survive the silence gate",
                         Error);
}

TEST_CASE("fwsnrseg input validation") {
    const AudioSignal x = testutil::noise_signal(4000, 16000, 1);
    const AudioSignal shorter = testutil::noise_signal(3999, 16000, 1);
    const AudioSignal other_rate = testutil::noise_signal(4000, 8000, 1);
    const AudioSignal stereo = testutil::noise_signal(4000, 16000, 1, 2);
    const AudioSignal three = testutil::noise_signal(4000, 16000, 1, 3);
    CHECK_THROWS_AS(fwsnrseg(x, shorter), Error);
    CHECK_THROWS_AS(fwsnrseg(x, other_rate), Error);
    CHECK_THROWS_AS(fwsnrseg(x, stereo), Error);
    CHECK_THROWS_AS(fwsnrseg(three, three), Error);

    FwSnrSegParams bad;
    bad.weight_exponent = 0.0;
    CHECK_THROWS_AS(fwsnrseg(x, x, bad), Error);
    bad.weight_exponent = 1.5;
    CHECK_THROWS_AS(fwsnrseg(x, x, bad), Error);
    FwSnrSegParams swapped;
    swapped.snr_floor_db = 40.0;
    CHECK_THROWS_AS(fwsnrseg(x, x, swapped), Error);
    CHECK_THROWS_AS(fwsnrseg(testutil::noise_signal(100, 16000, 1),
                             testutil::noise_signal(100, 16000, 1)),
                    Error);  // shorter than one frame
}

TEST_CASE("LPC recovers known processes") {
    // White noise: no linear predictability, coefficients near zero.
    const auto white = testutil::noise(20000, 55);
    const auto fit_white = lpc(white, 4);
    REQUIRE(fit_white.has_value());
    CHECK(fit_white->coefficients[0] == 1.0);
    for (std::size_t i = 1; i < fit_white->coefficients.size(); ++i)
        CHECK(std::abs(fit_white->coefficients[i]) < 0.05);

    // AR(1): x[n] = 0.9 x[n-1] + e[n] -> a1 close to -0.9.
    std::vector<double> ar(20000, 0.0);
    const auto e = testutil::noise(ar.size(), 56, 0.1);
    for (std::size_t n = 1; n < ar.size(); ++n) ar[n] = 0.9 * ar[n - 1] + e[n];
    const auto fit_ar = lpc(ar, 2);
    REQUIRE(fit_ar.has_value());
    CHECK(fit_ar->coefficients[1] == doctest::Approx(-0.9).epsilon(0.02));
    CHECK(std::abs(fit_ar->coefficients[2]) < 0.05);

    // Levinson identity: a R a' equals the recursion's residual energy.
    const auto frame = testutil::noise(2000, 57);
    const auto fit = lpc(frame, 10);
    REQUIRE(fit.has_value());
    std::vector<double> r(11, 0.0);
    for (int k = 0; k <= 10; ++k)
        for (std::size_t i = static_cast<std::size_t>(k); i < frame.size(); ++i)
            r[static_cast<std::size_t>(k)] += frame[i] * frame[i - static_cast<std::size_t>(k)];
    double quad = 0.0;
    for (std::size_t i = 0; i <= 10; ++i)
        for (std::size_t j = 0; j <= 10; ++j)
            quad += fit->coefficients[i] * fit->coefficients[j] * r[i > j ? i - j : j - i];
    CHECK(quad == doctest::Approx(fit->residual_energy).epsilon(1e-9));

    CHECK_FALSE(lpc(std::vector<double>(100, 0.0), 4).has_value());
    CHECK_THROWS_AS(lpc(white, 0), Error);
    CHECK_THROWS_AS(lpc(std::vector<double>(4, 0.1), 4), Error);
}

TEST_CASE("dllr identities and sensitivity") {
    const AudioSignal x = testutil::noise_signal(16000, 16000, 70);
    CHECK(dllr(x, x) == 0.0);

    const AudioSignal x48 = testutil::noise_signal(48000, 48000, 71);
    CHECK(dllr(x48, x48) == 0.0);  // resampled internally, still identical paths

    // Joint gain moves both LPC fits the same way.
    const AudioSignal y = testutil::mix(x, 1.0, testutil::noise_signal(16000, 16000, 72), 0.2);
    const double base = dllr(x, y);
    CHECK(base > 0.0);
    CHECK(base <= 2.0);
    CHECK(std::abs(dllr(testutil::scaled(x, 0.31), testutil::scaled(y, 0.31)) - base) < 1e-9);

    // A one-tap smoother changes the spectral envelope and must register.
    AudioSignal smoothed = x;
    for (std::size_t i = x.length() - 1; i > 0; --i)
        smoothed.channels[0][i] = 0.5 * (x.channels[0][i] + x.channels[0][i - 1]);
    CHECK(dllr(x, smoothed) > 0.01);

    AudioSignal zeros = x;
    for (auto& v : zeros.channels[0]) v = 0.0;
    CHECK_THROWS_WITH_AS(dllr(zeros, x), "dllr: all frames degenerate", Error);
}

TEST_CASE("capped frame mean") {
    CHECK(detail::capped_frame_mean({0.5, 1.0, 2.5}, 2.0) == doctest::Approx(7.0 / 6.0));
    CHECK(detail::capped_frame_mean({-3.0, 1.0}, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(detail::capped_frame_mean({}, 2.0), Error);
}
