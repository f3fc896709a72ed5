#pragma once

#include <optional>
#include <vector>

#include "paqkit/audio_signal.hpp"

namespace paqkit {

/// band_count + 1 edges in Hz, uniformly spaced on the Bark scale between
/// 0 Hz and min(nyquist, 15500) Hz; 15500 Hz is where the Bark mapping of
/// hearing bands tops out.
std::vector<double> critical_band_edges(int band_count, int sample_rate);

/// Root of summed bin power per band. A bin belongs to band j when
/// edges[j] <= bin centre frequency < edges[j+1]; bands that catch no bins
/// come out 0. bin_hz is the spectrum's bin spacing.
std::vector<double> critical_band_energies(const std::vector<double>& magnitude_spectrum,
                                           double bin_hz,
                                           const std::vector<double>& band_edges_hz);

struct FwSnrSegParams {
    double frame_ms = 30.0;
    double hop_ms = 7.5;
    int band_count = 25;
    double snr_floor_db = -10.0;
    double snr_ceil_db = 35.0;
    double weight_exponent = 0.2;   // band weight = reference band magnitude ^ exponent
    double silence_gate_db = -60.0; // reference frame power below this (dBFS) drops the frame
};

/// Frequency-weighted segmental SNR over Hann frames. Per frame and band:
/// 10*log10(B_ref^2 / (B_ref - B_test)^2), clamped to
/// [snr_floor_db, snr_ceil_db], averaged with weights B_ref^weight_exponent,
/// then averaged over non-silent frames. Stereo runs per channel and
/// returns the channel mean. Throws when the signals differ in shape, have
/// more than two channels, or no frame survives the silence gate.
double fwsnrseg(const AudioSignal& reference, const AudioSignal& test,
                const FwSnrSegParams& params = {});

struct LpcResult {
    std::vector<double> coefficients;  // a[0] = 1, length order + 1
    double residual_energy = 0.0;      // prediction error energy from the recursion
};

/// Levinson-Durbin on the biased autocorrelation of `frame`. Returns
/// nullopt for degenerate frames (zero energy or a recursion breakdown).
std::optional<LpcResult> lpc(const std::vector<double>& frame, int order);

struct DllrParams {
    double frame_ms = 30.0;
    double hop_ms = 7.5;
    int lpc_order = 16;
    int internal_rate = 16000;  // both signals are resampled to this first
    static constexpr double per_frame_cap = 2.0;
};

/// Log-likelihood-ratio distance between LPC fits of reference and test,
/// evaluated in the reference autocorrelation metric:
/// d = ln(a_test R_ref a_test' / a_ref R_ref a_ref'), floored at 0 and
/// capped at 2 per frame, averaged over frames where both fits exist.
/// Stereo runs per channel and returns the channel mean. Identical inputs
/// give exactly 0.
double dllr(const AudioSignal& reference, const AudioSignal& test,
            const DllrParams& params = {});

namespace detail {

/// dllr's per-frame reduction: max(0, min(value, cap)), then the mean.
double capped_frame_mean(const std::vector<double>& values, double cap);

}

}
