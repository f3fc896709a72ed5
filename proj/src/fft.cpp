#include "paqkit/fft.hpp"

#include <cmath>

#include "paqkit/error.hpp"

namespace paqkit {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw Error("fft size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> a = data[i + k];
                const std::complex<double> b = data[i + k + len / 2] * w;
                data[i + k] = a + b;
                data[i + k + len / 2] = a - b;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= scale;
    }
}

std::vector<double> magnitude_spectrum(const std::vector<double>& frame, std::size_t nfft) {
    if (nfft < frame.size() || nfft == 0 || (nfft & (nfft - 1)) != 0)
        throw Error("magnitude_spectrum needs a power-of-two nfft >= frame length");
    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = {frame[i], 0.0};
    fft(buf, false);
    std::vector<double> mags(nfft / 2 + 1);
    for (std::size_t k = 0; k <= nfft / 2; ++k) mags[k] = std::abs(buf[k]);
    return mags;
}

std::vector<double> cross_correlation(const std::vector<double>& u, const std::vector<double>& v,
                                      std::size_t max_lag) {
    if (u.empty() || v.empty())
        throw Error("cross_correlation of an empty signal");
    const std::size_t nfft = next_pow2(std::max(u.size(), v.size()) + max_lag + 1);
    std::vector<std::complex<double>> a(nfft, {0.0, 0.0}), b(nfft, {0.0, 0.0});
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = {u[i], 0.0};
    for (std::size_t i = 0; i < v.size(); ++i) b[i] = {v[i], 0.0};
    fft(a, false);
    fft(b, false);
    for (std::size_t i = 0; i < nfft; ++i) a[i] = std::conj(a[i]) * b[i];
    fft(a, true);
    // a[m mod nfft] now holds sum_s u[s] * v[s + m].
    std::vector<double> lags(2 * max_lag + 1);
    for (std::size_t m = 0; m <= max_lag; ++m) {
        lags[max_lag + m] = a[m].real();
        if (m > 0) lags[max_lag - m] = a[nfft - m].real();
    }
    return lags;
}

}
