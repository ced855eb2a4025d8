#ifndef MEDIAFRAME_ECONOMETRICS_HPP
#define MEDIAFRAME_ECONOMETRICS_HPP

// Univariate and bivariate statistics used by the screening stage:
// least squares, ADF unit-root test, Granger F-test, cross-correlation, t-tests.

#include "mediaframe/core.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mediaframe {

/// Pearson correlation of two equally sized Eigen expressions (two-pass, centered).
/// Returns NaN when either side has zero variance.
template <class DerivedX, class DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    eigen_assert(x.size() == y.size());
    const auto xc = (x.array() - x.mean()).matrix().eval();
    const auto yc = (y.array() - y.mean()).matrix().eval();
    const Scalar sxx = xc.squaredNorm();
    const Scalar syy = yc.squaredNorm();
    if (sxx <= Scalar(0) || syy <= Scalar(0)) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(xc.dot(yc) / std::sqrt(sxx * syy));
}

/// Dense least squares on an explicit design matrix (no intercept is added).
struct LeastSquaresFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    double ssr = 0.0;
    /// (X'X)^{-1}; multiply by the residual variance for coefficient covariances.
    Eigen::MatrixXd xtx_inverse;
};

/// Column-pivoted Householder QR solve. Throws RankDeficient for collinear columns.
LeastSquaresFit least_squares(const Eigen::Ref<const Eigen::MatrixXd>& design,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

// ---------------------------------------------------------------------------
// ADF

struct AdfCriticalValues {
    double one = 0.0;
    double five = 0.0;
    double ten = 0.0;
};

/// Constant-only response-surface critical values for `nobs` regression observations.
AdfCriticalValues adf_critical_values(int nobs);

struct AdfLagPolicy {
    /// Upper bound on augmentation lags; defaults to floor(12 (T/100)^(1/4)).
    std::optional<int> max_lag;
    /// When false the test uses exactly `max_lag` lags.
    bool select_by_aic = true;
};

struct AdfResult {
    double gamma = 0.0;
    double gamma_t_stat = 0.0;
    int lag_used = 0;
    int nobs = 0;
    bool reject_unit_root = false;
    AdfCriticalValues critical_values;
};

/// Schwert bound floor(12 (T/100)^(1/4)).
int schwert_max_lag(int n);

/// Δy_t = α + γ y_{t-1} + Σ δ_i Δy_{t-i} + ε_t; rejects at 5%.
/// Throws SeriesTooShort, ConstantSeries, MissingValues.
AdfResult adf_test(const Eigen::Ref<const Eigen::VectorXd>& series, const AdfLagPolicy& policy = {});

enum class Transform { None, Diff1, Dropped };
std::string_view to_string(Transform t);

struct StationaryResult {
    MonthlySeries series;  // empty when dropped
    Transform transform = Transform::Dropped;
    int interpolated = 0;
    std::optional<AdfResult> adf;  // the test that decided the outcome
};

/// Interior gaps up to `max_gaps` are filled linearly, edge gaps trimmed; then
/// ADF, first difference and retest, or drop.
StationaryResult make_stationary(const MonthlySeries& series, const AdfLagPolicy& policy = {},
                                 int max_gaps = 2);

// ---------------------------------------------------------------------------
// Granger

struct GrangerResult {
    int lag = 1;
    double f_stat = 0.0;
    double p_value = 1.0;
    int df_num = 1;
    int df_den = 0;
    double cc = 0.0;
    double ssr_restricted = 0.0;
    double ssr_unrestricted = 0.0;
    bool perfect_fit = false;
};

/// SSR-based F-test of whether lags 1..lag of x improve an autoregression of y.
/// Throws InsufficientObservations when fewer than 8 residual df remain.
GrangerResult granger_test(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y, int lag);

/// Minimal p wins; ties go to the smaller lag.
GrangerResult pick_min_p(std::span<const GrangerResult> results);

GrangerResult scan_lags(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y,
                        std::span<const int> lags = std::span<const int>());

/// Pearson correlation of (x[t - lag], y[t]) over the overlap. Throws ZeroVariance.
double cross_correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y, int lag);

// ---------------------------------------------------------------------------
// OLS

struct OlsResult {
    Eigen::VectorXd coefficients;  // intercept first
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double r = 0.0;          // Pearson(fitted, actual)
    double r_squared = 0.0;
    double f_stat = 0.0;
    double p_value = 1.0;    // overall F-test
    int df_model = 0;
    int df_resid = 0;
    double residual_ssr = 0.0;
    bool zero_variance = false;  // constant response
    bool perfect_fit = false;
};

/// OLS with an internally added intercept. Requires rows > cols + 1.
OlsResult ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& predictors,
                  const Eigen::Ref<const Eigen::VectorXd>& y);

// ---------------------------------------------------------------------------
// t-tests

enum class TTestVariant { Welch, Pooled };

struct TTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    double df = 0.0;
    std::pair<double, double> group_means;
    std::pair<double, double> group_sds;  // sample sd (n - 1)
    std::pair<int, int> group_ns;
};

/// Two-sided two-sample t-test. Throws SampleTooSmall, BothConstant.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         TTestVariant variant = TTestVariant::Welch);

/// Benjamini-Hochberg step-up adjusted p-values, same order as the input.
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

}  // namespace mediaframe

#endif  // MEDIAFRAME_ECONOMETRICS_HPP
