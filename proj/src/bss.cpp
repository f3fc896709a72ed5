#include "paqkit/bss.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

#include "paqkit/fft.hpp"

namespace paqkit {

namespace {

constexpr double kRatioClampDb = 30.0;
constexpr double kTikhonovScale = 1e-10;
constexpr int kRefinementSteps = 2;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// Normal equations for the span of delayed copies of a signal family.
///
/// Delayed basis vectors live in R^n: shifting by d drops the last d source
/// samples instead of growing the vector, so the Gram matrix is the plain
/// cross-correlation Toeplitz form minus a small tail correction per entry:
///   <shift_d u, shift_e v> = sum_{s=0}^{n-1-d} u[s] v[s+m]        (m = d-e >= 0)
///                          = X_uv(m) - sum_{s=n-d}^{n-1-m} u[s] v[s+m].
/// Correlations come from cached FFTs; the corrections are accumulated
/// directly while walking each block diagonal.
class DelayedBasisSolver {
public:
    DelayedBasisSolver(std::vector<const std::vector<double>*> signals, int taps)
        : signals_(std::move(signals)), taps_(static_cast<std::size_t>(taps)) {
        n_ = signals_.front()->size();
        if (taps_ < 1)
            throw Error("projection filter needs at least one tap");
        if (taps_ >= n_)
            throw Error("projection filter taps (" + std::to_string(taps_) +
                        ") must be below the signal length (" + std::to_string(n_) + ")");
        const std::size_t sig_count = signals_.size();
        dim_ = sig_count * taps_;

        nfft_ = next_pow2(n_ + taps_);
        sig_fft_.resize(sig_count);
        for (std::size_t s = 0; s < sig_count; ++s) sig_fft_[s] = forward_fft(*signals_[s]);

        gram_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
        for (std::size_t p = 0; p < sig_count; ++p)
            for (std::size_t q = p; q < sig_count; ++q) fill_block(p, q);

        factor_full_ = factor(gram_);
    }

    std::size_t dim() const { return dim_; }
    std::size_t taps() const { return taps_; }

    /// Projection coefficients for y against the whole family, or against
    /// the leading `head_signals` signals only (head_signals = 0: all).
    std::vector<double> solve(const std::vector<double>& y, std::size_t head_signals = 0) {
        const std::size_t sigs = head_signals == 0 ? signals_.size() : head_signals;
        const std::size_t dim = sigs * taps_;
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(dim));
        const auto y_fft = forward_fft(y);
        for (std::size_t p = 0; p < sigs; ++p) {
            const auto lags = correlate(sig_fft_[p], y_fft, taps_ - 1);
            for (std::size_t d = 0; d < taps_; ++d)
                rhs[static_cast<Eigen::Index>(p * taps_ + d)] =
                    lags[taps_ - 1 + d];  // non-negative lags only
        }

        if (sigs < signals_.size() && !factor_head_) {
            gram_head_ = gram_.topLeftCorner(static_cast<Eigen::Index>(dim),
                                             static_cast<Eigen::Index>(dim));
            factor_head_ = factor(gram_head_);
        }
        const Eigen::MatrixXd& g = sigs == signals_.size() ? gram_ : gram_head_;
        const auto& fac = sigs == signals_.size() ? factor_full_ : *factor_head_;

        Eigen::VectorXd c = fac.solve(rhs);
        for (int it = 0; it < kRefinementSteps; ++it) {
            const Eigen::VectorXd residual = rhs - g * c;
            c += fac.solve(residual);
        }
        return std::vector<double>(c.data(), c.data() + c.size());
    }

    /// sum_p sum_d coeffs[p * taps + d] * shift_d(signal_p), truncated to n.
    std::vector<double> synthesize(const std::vector<double>& coeffs,
                                   std::size_t head_signals = 0) const {
        const std::size_t sigs = head_signals == 0 ? signals_.size() : head_signals;
        std::vector<double> out(n_, 0.0);
        for (std::size_t p = 0; p < sigs; ++p) {
            const auto& sig = *signals_[p];
            for (std::size_t d = 0; d < taps_; ++d) {
                const double c = coeffs[p * taps_ + d];
                if (c == 0.0) continue;
                for (std::size_t t = d; t < n_; ++t) out[t] += c * sig[t - d];
            }
        }
        return out;
    }

private:
    std::vector<std::complex<double>> forward_fft(const std::vector<double>& x) const {
        std::vector<std::complex<double>> buf(nfft_, {0.0, 0.0});
        for (std::size_t i = 0; i < x.size(); ++i) buf[i] = {x[i], 0.0};
        fft(buf, false);
        return buf;
    }

    /// Two-sided lags of sum_s a[s] * b[s + m]; index [m + max_lag].
    std::vector<double> correlate(const std::vector<std::complex<double>>& a_fft,
                                  const std::vector<std::complex<double>>& b_fft,
                                  std::size_t max_lag) const {
        std::vector<std::complex<double>> prod(nfft_);
        for (std::size_t i = 0; i < nfft_; ++i) prod[i] = std::conj(a_fft[i]) * b_fft[i];
        fft(prod, true);
        std::vector<double> lags(2 * max_lag + 1);
        for (std::size_t m = 0; m <= max_lag; ++m) {
            lags[max_lag + m] = prod[m].real();
            if (m > 0) lags[max_lag - m] = prod[nfft_ - m].real();
        }
        return lags;
    }

    void fill_block(std::size_t p, std::size_t q) {
        const auto& u = *signals_[p];
        const auto& v = *signals_[q];
        const auto lags = correlate(sig_fft_[p], sig_fft_[q], taps_ - 1);
        const auto ip = static_cast<Eigen::Index>(p * taps_);
        const auto iq = static_cast<Eigen::Index>(q * taps_);

        // m >= 0: entries (d, e = d - m), walking d accumulates the tail.
        for (std::size_t m = 0; m < taps_; ++m) {
            const double full = lags[taps_ - 1 + m];
            double tail = 0.0;
            for (std::size_t d = m; d < taps_; ++d) {
                if (d > m) tail += u[n_ - d] * v[n_ - d + m];
                const double value = full - tail;
                gram_(ip + static_cast<Eigen::Index>(d), iq + static_cast<Eigen::Index>(d - m)) =
                    value;
                if (p != q)
                    gram_(iq + static_cast<Eigen::Index>(d - m), ip + static_cast<Eigen::Index>(d)) =
                        value;
                else if (m > 0)
                    gram_(ip + static_cast<Eigen::Index>(d - m), iq + static_cast<Eigen::Index>(d)) =
                        value;
            }
        }
        if (p == q) return;
        // m < 0 (e > d): <shift_d u, shift_e v> = X_vu(e - d) - tail over e.
        for (std::size_t m = 1; m < taps_; ++m) {
            const double full = lags[taps_ - 1 - m];
            double tail = 0.0;
            for (std::size_t e = m; e < taps_; ++e) {
                if (e > m) tail += v[n_ - e] * u[n_ - e + m];
                const double value = full - tail;
                gram_(ip + static_cast<Eigen::Index>(e - m), iq + static_cast<Eigen::Index>(e)) =
                    value;
                gram_(iq + static_cast<Eigen::Index>(e), ip + static_cast<Eigen::Index>(e - m)) =
                    value;
            }
        }
    }

    static Eigen::LDLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& g) {
        const double lambda =
            kTikhonovScale * g.trace() / static_cast<double>(g.rows());
        Eigen::MatrixXd reg = g;
        reg.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
        if (ldlt.info() != Eigen::Success)
            throw Error("projection normal equations could not be factorised");
        return ldlt;
    }

    std::vector<const std::vector<double>*> signals_;
    std::size_t taps_ = 0;
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::size_t nfft_ = 0;
    std::vector<std::vector<std::complex<double>>> sig_fft_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd gram_head_;
    Eigen::LDLT<Eigen::MatrixXd> factor_full_;
    std::optional<Eigen::LDLT<Eigen::MatrixXd>> factor_head_;
};

void check_reference_shape(const AudioSignal& y, const AudioSignal& ref, const char* what) {
    ref.validate();
    if (ref.sample_rate != y.sample_rate)
        throw Error(std::string(what) + ": sample rates differ");
    if (ref.length() != y.length())
        throw Error(std::string(what) + ": lengths differ");
    if (ref.channel_count() != y.channel_count())
        throw Error(std::string(what) + ": channel counts differ");
}

std::vector<double> flatten(const AudioSignal& s) {
    std::vector<double> out;
    out.reserve(s.length() * static_cast<std::size_t>(s.channel_count()));
    for (const auto& ch : s.channels) out.insert(out.end(), ch.begin(), ch.end());
    return out;
}

AudioSignal unflatten(const std::vector<double>& flat, int channels, std::size_t length,
                      int rate) {
    AudioSignal out;
    out.sample_rate = rate;
    out.channels.resize(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        const auto begin = flat.begin() + static_cast<std::ptrdiff_t>(c * length);
        out.channels[static_cast<std::size_t>(c)].assign(begin,
                                                         begin + static_cast<std::ptrdiff_t>(length));
    }
    return out;
}

AudioSignal empty_like(const AudioSignal& y) {
    AudioSignal out;
    out.sample_rate = y.sample_rate;
    out.channels.assign(static_cast<std::size_t>(y.channel_count()),
                        std::vector<double>(y.length(), 0.0));
    return out;
}

double ratio_db_clamped(double num, double den) {
    if (den == 0.0) return kRatioClampDb;
    if (num == 0.0) return -kRatioClampDb;
    return std::clamp(10.0 * std::log10(num / den), -kRatioClampDb, kRatioClampDb);
}

double ratio_db_raw(double num, double den) {
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    if (num == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(num / den);
}

BssRatios ratios_impl(const Decomposition& d, bool clamped) {
    const double e_target = signal_energy(d.s_target);
    const double e_interf = signal_energy(d.e_interf);
    const double e_artif = signal_energy(d.e_artif);
    const double e_distortion = signal_energy(signal_sum(d.e_interf, d.e_artif));
    const double sar_numerator = d.mode == DecompositionMode::full_fir
                                     ? signal_energy(signal_sum(d.s_target, d.e_interf))
                                     : e_target;
    const auto db = clamped ? ratio_db_clamped : ratio_db_raw;
    BssRatios r;
    r.sdr = db(e_target, e_distortion);
    r.sir = db(e_target, e_interf);
    r.sar = db(sar_numerator, e_artif);
    return r;
}

}  // namespace

std::vector<double> solve_projection(const std::vector<std::vector<double>>& basis_signals,
                                     int taps, const std::vector<double>& y) {
    if (basis_signals.empty())
        throw Error("solve_projection needs at least one basis signal");
    std::vector<const std::vector<double>*> ptrs;
    ptrs.reserve(basis_signals.size());
    for (const auto& s : basis_signals) {
        if (s.size() != y.size())
            throw Error("solve_projection: basis and target lengths differ");
        ptrs.push_back(&s);
    }
    DelayedBasisSolver solver(std::move(ptrs), taps);
    return solver.solve(y);
}

Decomposition decompose_bsseval(const AudioSignal& y, const AudioSignal& target_ref,
                                const std::vector<AudioSignal>& other_refs, int filter_taps,
                                int basis_dim_cap) {
    y.validate();
    check_reference_shape(y, target_ref, "decompose_bsseval target");
    for (const auto& o : other_refs) check_reference_shape(y, o, "decompose_bsseval reference");
    if (filter_taps < 1)
        throw Error("decompose_bsseval: filter_taps must be positive");

    const auto channels = static_cast<std::size_t>(y.channel_count());
    const std::size_t sig_count = (1 + other_refs.size()) * channels;
    const std::size_t dim = sig_count * static_cast<std::size_t>(filter_taps);
    if (basis_dim_cap > 0 && dim > static_cast<std::size_t>(basis_dim_cap))
        throw Error("decompose_bsseval: basis dimension " + std::to_string(dim) +
                    " exceeds the cap of " + std::to_string(basis_dim_cap));

    std::vector<const std::vector<double>*> signals;
    signals.reserve(sig_count);
    for (const auto& ch : target_ref.channels) signals.push_back(&ch);
    for (const auto& o : other_refs)
        for (const auto& ch : o.channels) signals.push_back(&ch);

    DelayedBasisSolver solver(std::move(signals), filter_taps);

    Decomposition out;
    out.mode = DecompositionMode::full_fir;
    out.filter_taps = filter_taps;
    out.s_target = empty_like(y);
    out.e_interf = empty_like(y);
    out.e_artif = empty_like(y);

    for (std::size_t c = 0; c < channels; ++c) {
        const auto& y_ch = y.channels[c];
        const auto coeff_all = solver.solve(y_ch);
        const auto proj_all = solver.synthesize(coeff_all);

        std::vector<double> proj_target;
        if (other_refs.empty()) {
            proj_target = proj_all;  // same span; keeps e_interf exactly zero
        } else {
            const auto coeff_target = solver.solve(y_ch, channels);
            proj_target = solver.synthesize(coeff_target, channels);
        }

        for (std::size_t t = 0; t < y.length(); ++t) {
            out.s_target.channels[c][t] = proj_target[t];
            out.e_interf.channels[c][t] = proj_all[t] - proj_target[t];
            out.e_artif.channels[c][t] = y_ch[t] - proj_all[t];
        }
    }
    return out;
}

Decomposition decompose_si(const AudioSignal& y, const AudioSignal& target_ref,
                           const std::vector<AudioSignal>& other_refs) {
    y.validate();
    check_reference_shape(y, target_ref, "decompose_si target");
    for (const auto& o : other_refs) check_reference_shape(y, o, "decompose_si reference");

    const std::vector<double> y_flat = flatten(y);
    const std::vector<double> target_flat = flatten(target_ref);
    const double target_energy = dot(target_flat, target_flat);
    if (target_energy == 0.0)
        throw Error("decompose_si: target reference has zero energy");

    const double alpha = dot(y_flat, target_flat) / target_energy;
    const std::size_t n = y_flat.size();

    std::vector<double> projection(n);
    if (other_refs.empty()) {
        for (std::size_t i = 0; i < n; ++i) projection[i] = alpha * target_flat[i];
    } else {
        std::vector<std::vector<double>> basis;
        basis.push_back(target_flat);
        for (const auto& o : other_refs) basis.push_back(flatten(o));

        const auto count = static_cast<Eigen::Index>(basis.size());
        Eigen::MatrixXd gram(count, count);
        Eigen::VectorXd rhs(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            rhs[i] = dot(basis[static_cast<std::size_t>(i)], y_flat);
            for (Eigen::Index j = i; j < count; ++j) {
                const double g =
                    dot(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
                gram(i, j) = g;
                gram(j, i) = g;
            }
        }
        const double lambda = kTikhonovScale * gram.trace() / static_cast<double>(count);
        Eigen::MatrixXd reg = gram;
        reg.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
        if (ldlt.info() != Eigen::Success)
            throw Error("decompose_si: reference Gram matrix could not be factorised");
        Eigen::VectorXd c = ldlt.solve(rhs);
        for (int it = 0; it < kRefinementSteps; ++it) {
            const Eigen::VectorXd residual = rhs - gram * c;
            c += ldlt.solve(residual);
        }
        std::fill(projection.begin(), projection.end(), 0.0);
        for (Eigen::Index b = 0; b < count; ++b) {
            const double coeff = c[b];
            const auto& sig = basis[static_cast<std::size_t>(b)];
            for (std::size_t i = 0; i < n; ++i) projection[i] += coeff * sig[i];
        }
    }

    std::vector<double> s_target(n), e_interf(n), e_artif(n);
    for (std::size_t i = 0; i < n; ++i) {
        s_target[i] = alpha * target_flat[i];
        e_interf[i] = projection[i] - s_target[i];
        e_artif[i] = y_flat[i] - projection[i];
    }

    Decomposition out;
    out.mode = DecompositionMode::scale_invariant;
    out.filter_taps = 1;
    out.s_target = unflatten(s_target, y.channel_count(), y.length(), y.sample_rate);
    out.e_interf = unflatten(e_interf, y.channel_count(), y.length(), y.sample_rate);
    out.e_artif = unflatten(e_artif, y.channel_count(), y.length(), y.sample_rate);
    return out;
}

BssRatios ratios(const Decomposition& d) { return ratios_impl(d, true); }

BssRatios raw_ratios(const Decomposition& d) { return ratios_impl(d, false); }

}
