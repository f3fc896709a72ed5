#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace paqkit {

std::size_t next_pow2(std::size_t n);

/// In-place iterative radix-2 FFT; the size must be a power of two.
/// The inverse transform includes the 1/N scaling.
void fft(std::vector<std::complex<double>>& data, bool inverse);

/// Magnitudes of bins 0..nfft/2 of `frame` zero padded to nfft samples.
std::vector<double> magnitude_spectrum(const std::vector<double>& frame, std::size_t nfft);

/// Cross-correlation r[m] = sum_s u[s] * v[s + m] for m in
/// [-max_lag, max_lag], computed via FFT. Index [m + max_lag] holds lag m.
std::vector<double> cross_correlation(const std::vector<double>& u, const std::vector<double>& v,
                                      std::size_t max_lag);

}
