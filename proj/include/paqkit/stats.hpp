#pragma once

#include <string>
#include <vector>

#include "paqkit/error.hpp"

namespace paqkit {

/// Raised when a correlation coefficient is undefined because one of the
/// score vectors is constant.
class DegenerateCorrelation : public Error {
public:
    using Error::Error;
};

enum class CorrKind { pearson, kendall };

/// Pearson's rho. Requires n >= 3 paired, finite values; throws
/// DegenerateCorrelation when either vector is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Kendall's tau = 2K / (n (n - 1)) where K counts concordant pairs as +1,
/// discordant as -1 and any tie in X or Y as 0. No tie normalisation is
/// applied, so heavily tied data cannot reach |tau| = 1 by construction.
double kendall(const std::vector<double>& x, const std::vector<double>& y);

/// tau' = sin(tau * pi / 2): rescales tau onto Pearson's scale under
/// bivariate normality so the two columns are comparable.
double tau_prime(double tau);

/// Two-tailed test at alpha = 0.05. Pearson: t = rho * sqrt((n-2)/(1-rho^2))
/// against Student's t with n - 2 degrees of freedom. Kendall: normal
/// approximation z = tau / sqrt(2 (2n+5) / (9 n (n-1))), |z| > 1.95996.
/// Requires n >= 4; smaller samples report not significant.
bool corr_significant(double coefficient, CorrKind kind, int n);

/// Fisher z = 0.5 * ln((1 + g) / (1 - g)). |g| >= 1 is clipped to 0.999999
/// (sign kept); when `clipped` is non-null it reports whether that happened.
double fisher_z(double gamma, bool* clipped = nullptr);

double fisher_z_inv(double z);

/// Per-(measure, listening test) correlation against subjective scores.
/// Coefficients keep their sign here; reporting and aggregation take the
/// absolute value so that distance-like measures line up with quality-like
/// ones.
struct CorrelationCell {
    std::string test_id;
    int n = 0;
    bool degenerate = false;  // constant X or Y: coefficients reported as 0
    double rho = 0.0;
    double tau = 0.0;
    double tau_pr = 0.0;
    bool rho_significant = false;
    bool tau_significant = false;
};

/// Builds one cell. X and Y must be equally long (n >= 3) and finite.
CorrelationCell make_cell(const std::string& test_id, const std::vector<double>& x,
                          const std::vector<double>& y);

struct AggregatedScore {
    double rho_bar = 0.0;
    double tau_prime_bar = 0.0;
    double z_mean_rho = 0.0;   // mean of Fisher-z(|rho|) over included cells
    double z_variance = 0.0;   // sum(1 / (n_i - 3)) / k^2 over included cells
    int cell_count = 0;        // included cells
    int clipped_count = 0;     // coefficients clipped at the Fisher transform
};

/// Fisher-z-domain mean of |rho| and |tau'| over the cells whose test_id is
/// not excluded, inverted back through tanh. Cells are summed in test_id
/// order with compensated accumulation, so the outcome is independent of
/// input order. Throws when nothing remains after exclusion.
AggregatedScore aggregate(const std::vector<CorrelationCell>& cells,
                          const std::vector<std::string>& excluded_tests);

/// Two-sided z-test on the aggregated rho difference:
/// d = (z_a - z_b) / sqrt(var_a + var_b), significant when |d| > 1.95996.
bool aggregate_diff_significant(const AggregatedScore& a, const AggregatedScore& b);

}
