#pragma once

#include <vector>

#include "paqkit/audio_signal.hpp"

namespace paqkit {

enum class DecompositionMode { full_fir, scale_invariant };

/// Additive split of an estimated signal: y = s_target + e_interf + e_artif
/// per channel and sample. In full_fir mode s_target is the least-squares
/// projection of y onto delayed copies (0..taps-1) of the target reference's
/// channels, so allowed filtering of the target (spatial error included) is
/// credited to it. In scale_invariant mode the target contribution is a
/// single gain: alpha = <y, s> / <s, s> on channel-flattened vectors.
struct Decomposition {
    DecompositionMode mode = DecompositionMode::full_fir;
    int filter_taps = 1;  // 1 in scale_invariant mode
    AudioSignal s_target;
    AudioSignal e_interf;
    AudioSignal e_artif;
};

/// Least-squares projection coefficients of y onto delayed copies
/// (delays 0..taps-1, zero padded, truncated to the signal length) of every
/// basis signal. Returns taps coefficients per basis signal, basis-major.
/// The normal equations are built from FFT cross-correlations, regularised
/// with lambda = 1e-10 * trace(G) / dim(G), and polished with iterative
/// refinement so near-rank-deficient bases stay solvable without losing
/// projection accuracy.
std::vector<double> solve_projection(const std::vector<std::vector<double>>& basis_signals,
                                     int taps, const std::vector<double>& y);

/// Full FIR-forgiving decomposition. Each estimated channel is projected
/// onto delayed copies of every channel of every reference image; the
/// target-only projection gives s_target, the gap to the all-references
/// projection gives e_interf, the remainder e_artif. basis_dim_cap bounds
/// the dense normal-equation solve.
Decomposition decompose_bsseval(const AudioSignal& y, const AudioSignal& target_ref,
                                const std::vector<AudioSignal>& other_refs,
                                int filter_taps = 512, int basis_dim_cap = 8192);

/// Scale-invariant decomposition on channel-flattened vectors: s_target is
/// alpha * target, e_interf the rest of the projection onto the span of all
/// references, e_artif what remains of y.
Decomposition decompose_si(const AudioSignal& y, const AudioSignal& target_ref,
                           const std::vector<AudioSignal>& other_refs);

struct BssRatios {
    double sdr = 0.0;
    double sir = 0.0;
    double sar = 0.0;
};

/// Energy ratios in dB, clamped to [-30, 30]. A zero denominator clamps to
/// +30, then a zero numerator to -30. SAR's numerator is the full
/// projection energy E[s_target + e_interf] in full_fir mode but E[s_target]
/// in scale_invariant mode, which is what makes the scale-invariant ratios
/// satisfy 10^(-SDR/10) = 10^(-SIR/10) + 10^(-SAR/10).
BssRatios ratios(const Decomposition& d);

/// Same ratios before clamping; zero denominators give +inf, zero
/// numerators -inf.
BssRatios raw_ratios(const Decomposition& d);

}
