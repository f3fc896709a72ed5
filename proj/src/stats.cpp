#include "paqkit/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

namespace paqkit {

namespace {

constexpr double kAlpha = 0.05;
constexpr double kNormalCritical = 1.95996;  // two-tailed z threshold at alpha = 0.05
constexpr double kFisherClip = 0.999999;

void check_pairs(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_n) {
    if (x.size() != y.size())
        throw Error("paired score vectors differ in length");
    if (x.size() < min_n)
        throw Error("need at least " + std::to_string(min_n) + " paired scores, got " +
                    std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error("paired scores contain a non-finite value");
}

bool is_constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

/// Neumaier-compensated sum; keeps aggregation independent of test order.
double compensated_sum(const std::vector<double>& values) {
    double sum = 0.0, compensation = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            compensation += (sum - t) + v;
        else
            compensation += (v - t) + sum;
        sum = t;
    }
    if (!std::isfinite(sum)) return sum;
    return sum + compensation;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    check_pairs(x, y, 3);
    if (is_constant(x) || is_constant(y))
        throw DegenerateCorrelation("pearson is undefined for a constant score vector");

    const auto n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

double kendall(const std::vector<double>& x, const std::vector<double>& y) {
    check_pairs(x, y, 3);
    const std::size_t n = x.size();
    long long k = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double prod = (x[i] - x[j]) * (y[i] - y[j]);
            if (prod > 0.0)
                ++k;
            else if (prod < 0.0)
                --k;
        }
    }
    return 2.0 * static_cast<double>(k) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double tau_prime(double tau) { return std::sin(tau * M_PI / 2.0); }

bool corr_significant(double coefficient, CorrKind kind, int n) {
    if (!std::isfinite(coefficient))
        throw Error("corr_significant: non-finite coefficient");
    if (n < 4) return false;

    if (kind == CorrKind::pearson) {
        const double denom = 1.0 - coefficient * coefficient;
        if (denom <= 0.0) return true;  // |rho| = 1: t diverges
        const double t = std::abs(coefficient) * std::sqrt((n - 2) / denom);
        const boost::math::students_t_distribution<double> dist(n - 2);
        const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
        return p < kAlpha;
    }
    const double sigma =
        std::sqrt(2.0 * (2.0 * n + 5.0) / (9.0 * static_cast<double>(n) * (n - 1.0)));
    return std::abs(coefficient / sigma) > kNormalCritical;
}

double fisher_z(double gamma, bool* clipped) {
    if (!std::isfinite(gamma))
        throw Error("fisher_z: non-finite coefficient");
    bool did_clip = false;
    if (gamma >= 1.0) {
        gamma = kFisherClip;
        did_clip = true;
    } else if (gamma <= -1.0) {
        gamma = -kFisherClip;
        did_clip = true;
    }
    if (clipped) *clipped = did_clip;
    return 0.5 * std::log((1.0 + gamma) / (1.0 - gamma));
}

double fisher_z_inv(double z) { return std::tanh(z); }

CorrelationCell make_cell(const std::string& test_id, const std::vector<double>& x,
                          const std::vector<double>& y) {
    check_pairs(x, y, 3);
    CorrelationCell cell;
    cell.test_id = test_id;
    cell.n = static_cast<int>(x.size());
    if (is_constant(x) || is_constant(y)) {
        cell.degenerate = true;  // mirrors the all-zero rows for constant-output measures
        return cell;
    }
    cell.rho = pearson(x, y);
    cell.tau = kendall(x, y);
    cell.tau_pr = tau_prime(cell.tau);
    cell.rho_significant = corr_significant(cell.rho, CorrKind::pearson, cell.n);
    cell.tau_significant = corr_significant(cell.tau, CorrKind::kendall, cell.n);
    return cell;
}

AggregatedScore aggregate(const std::vector<CorrelationCell>& cells,
                          const std::vector<std::string>& excluded_tests) {
    std::vector<const CorrelationCell*> included;
    for (const auto& cell : cells) {
        const bool excluded = std::find(excluded_tests.begin(), excluded_tests.end(),
                                        cell.test_id) != excluded_tests.end();
        if (!excluded) included.push_back(&cell);
    }
    if (included.empty())
        throw Error("aggregate: no cells left after exclusions");
    std::sort(included.begin(), included.end(),
              [](const CorrelationCell* a, const CorrelationCell* b) {
                  return a->test_id < b->test_id;
              });

    AggregatedScore agg;
    agg.cell_count = static_cast<int>(included.size());
    std::vector<double> z_rho, z_tau, inv_weights;
    for (const CorrelationCell* cell : included) {
        bool clip_rho = false, clip_tau = false;
        z_rho.push_back(fisher_z(std::abs(cell->rho), &clip_rho));
        z_tau.push_back(fisher_z(std::abs(cell->tau_pr), &clip_tau));
        agg.clipped_count += (clip_rho ? 1 : 0) + (clip_tau ? 1 : 0);
        inv_weights.push_back(cell->n > 3
                                  ? 1.0 / static_cast<double>(cell->n - 3)
                                  : std::numeric_limits<double>::infinity());
    }
    const auto k = static_cast<double>(included.size());
    agg.z_mean_rho = compensated_sum(z_rho) / k;
    agg.rho_bar = fisher_z_inv(agg.z_mean_rho);
    agg.tau_prime_bar = fisher_z_inv(compensated_sum(z_tau) / k);
    agg.z_variance = compensated_sum(inv_weights) / (k * k);
    return agg;
}

bool aggregate_diff_significant(const AggregatedScore& a, const AggregatedScore& b) {
    const double var = a.z_variance + b.z_variance;
    if (!(var > 0.0) || !std::isfinite(var)) return false;
    const double d = (a.z_mean_rho - b.z_mean_rho) / std::sqrt(var);
    return std::abs(d) > kNormalCritical;
}

}
