#include "mediaframe/econometrics.hpp"

#include "mediaframe/distributions.hpp"

#include <algorithm>
#include <numeric>

namespace mediaframe {

namespace {

constexpr int kDefaultLags[] = {1, 2, 3};

bool has_missing(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.array().isNaN().any(); }

// Exact fits leave residuals at rounding level; compare against the response scale.
bool negligible_ssr(double ssr, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const double scale = (y.array() - y.mean()).matrix().squaredNorm() + y.squaredNorm();
    return ssr <= 1e-24 * std::max(scale, 1e-300);
}

}  // namespace

LeastSquaresFit least_squares(const Eigen::Ref<const Eigen::MatrixXd>& design,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index p = design.cols();
    if (design.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "design rows vs response");
    if (design.rows() < p) throw Error(ErrorCode::InsufficientObservations, "fewer rows than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.rows(), p);
    qr.setThreshold(1e-10);
    qr.compute(design);
    if (qr.rank() < p) throw Error(ErrorCode::RankDeficient, "collinear design columns");

    LeastSquaresFit fit;
    fit.beta = qr.solve(y);
    fit.residuals = y - design * fit.beta;
    fit.ssr = fit.residuals.squaredNorm();

    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    fit.xtx_inverse = perm * inner * perm.transpose();
    return fit;
}

// ---------------------------------------------------------------------------

AdfCriticalValues adf_critical_values(int nobs) {
    // Constant, no trend, one variable: tau_inf + b1/T + b2/T^2 + b3/T^3.
    constexpr double coef[3][4] = {
        {-3.43035, -6.5393, -16.786, -79.433},
        {-2.86154, -2.8903, -4.234, -40.040},
        {-2.56677, -1.5384, -2.809, 0.0},
    };
    const double t = static_cast<double>(nobs);
    auto eval = [&](const double* c) { return c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t); };
    return {eval(coef[0]), eval(coef[1]), eval(coef[2])};
}

int schwert_max_lag(int n) {
    return static_cast<int>(std::floor(12.0 * std::pow(n / 100.0, 0.25)));
}

namespace {

struct AdfRegression {
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
};

// Rows t = start..n-1 regress Δy_t on [1, y_{t-1}, Δy_{t-1}, ..., Δy_{t-k}].
AdfRegression adf_design(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::VectorXd& dy, int k, int start) {
    const Eigen::Index n = y.size();
    const Eigen::Index rows = n - start;
    AdfRegression reg{Eigen::MatrixXd(rows, k + 2), Eigen::VectorXd(rows)};
    for (Eigen::Index row = 0; row < rows; ++row) {
        const Eigen::Index t = start + row;
        reg.response(row) = dy(t - 1);
        reg.design(row, 0) = 1.0;
        reg.design(row, 1) = y(t - 1);
        for (int i = 1; i <= k; ++i) reg.design(row, 1 + i) = dy(t - 1 - i);
    }
    return reg;
}

}  // namespace

AdfResult adf_test(const Eigen::Ref<const Eigen::VectorXd>& series, const AdfLagPolicy& policy) {
    const int n = static_cast<int>(series.size());
    if (has_missing(series)) throw Error(ErrorCode::MissingValues, "adf_test: series has gaps");
    if (n - 1 < 12) throw Error(ErrorCode::SeriesTooShort, "adf_test: " + std::to_string(n) + " observations");
    if ((series.array() == series(0)).all())
        throw Error(ErrorCode::ConstantSeries, "adf_test: zero variance");

    const Eigen::VectorXd dy = series.tail(n - 1) - series.head(n - 1);
    if ((dy.array() == dy(0)).all())
        throw Error(ErrorCode::ConstantSeries, "adf_test: constant differences");

    int kmax = std::max(0, policy.max_lag.value_or(schwert_max_lag(n)));
    while (kmax > 0 && (n - 1 - kmax < 12 || n - 1 - kmax <= kmax + 2)) --kmax;
    if (n - 1 - kmax < 12) throw Error(ErrorCode::SeriesTooShort, "adf_test: too few rows after lags");

    int k = kmax;
    if (policy.select_by_aic) {
        double best_aic = std::numeric_limits<double>::infinity();
        for (int cand = 0; cand <= kmax; ++cand) {
            const auto reg = adf_design(series, dy, cand, kmax + 1);
            const auto fit = least_squares(reg.design, reg.response);
            const double m = static_cast<double>(reg.response.size());
            const double aic = m * std::log(std::max(fit.ssr, 1e-300) / m) + 2.0 * (cand + 2);
            if (aic < best_aic) {
                best_aic = aic;
                k = cand;
            }
        }
    }

    const auto reg = adf_design(series, dy, k, k + 1);
    const auto fit = least_squares(reg.design, reg.response);
    const int nobs = static_cast<int>(reg.response.size());
    if (negligible_ssr(fit.ssr, reg.response))
        throw Error(ErrorCode::ConstantSeries, "adf_test: exact fit, degenerate series");
    const double sigma2 = fit.ssr / (nobs - (k + 2));
    const double se = std::sqrt(sigma2 * fit.xtx_inverse(1, 1));

    AdfResult out;
    out.gamma = fit.beta(1);
    out.gamma_t_stat = out.gamma / se;
    out.lag_used = k;
    out.nobs = nobs;
    out.critical_values = adf_critical_values(nobs);
    out.reject_unit_root = out.gamma_t_stat < out.critical_values.five;
    return out;
}

std::string_view to_string(Transform t) {
    switch (t) {
        case Transform::None: return "NONE";
        case Transform::Diff1: return "DIFF1";
        case Transform::Dropped: return "DROPPED";
    }
    return "DROPPED";
}

StationaryResult make_stationary(const MonthlySeries& series, const AdfLagPolicy& policy,
                                 int max_gaps) {
    const auto& v = series.values;
    Eigen::Index first = 0;
    Eigen::Index last = v.size() - 1;
    while (first < v.size() && is_missing(v(first))) ++first;
    while (last >= first && is_missing(v(last))) --last;
    if (first > last) throw Error(ErrorCode::SeriesTooShort, "make_stationary: no observations");

    StationaryResult out;
    Eigen::VectorXd y = v.segment(first, last - first + 1);
    const auto gaps = static_cast<int>(y.array().isNaN().count());
    if (gaps > max_gaps) return out;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!is_missing(y(i))) continue;
        Eigen::Index j = i;
        while (is_missing(y(j))) ++j;
        const double lo = y(i - 1);
        const double hi = y(j);
        const double span = static_cast<double>(j - (i - 1));
        for (Eigen::Index m = i; m < j; ++m) y(m) = lo + (hi - lo) * double(m - (i - 1)) / span;
        i = j;
    }
    out.interpolated = gaps;
    const YearMonth start = series.start.plus(static_cast<int>(first));

    try {
        out.adf = adf_test(y, policy);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConstantSeries) return out;
        throw;
    }
    if (out.adf->reject_unit_root) {
        out.series = {start, std::move(y)};
        out.transform = Transform::None;
        return out;
    }

    Eigen::VectorXd dy = y.tail(y.size() - 1) - y.head(y.size() - 1);
    try {
        out.adf = adf_test(dy, policy);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConstantSeries) return out;
        throw;
    }
    if (out.adf->reject_unit_root) {
        out.series = {start.plus(1), std::move(dy)};
        out.transform = Transform::Diff1;
    }
    return out;
}

// ---------------------------------------------------------------------------

double cross_correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y, int lag) {
    // Pairs (x[t - lag], y[t]) for every t where both indices are valid.
    const Eigen::Index t0 = std::max<Eigen::Index>(0, lag);
    const Eigen::Index t1 = std::min<Eigen::Index>(y.size(), x.size() + lag);
    const Eigen::Index len = t1 - t0;
    if (len < 3) throw Error(ErrorCode::InsufficientObservations, "cross_correlation: overlap < 3");
    const double r = pearson(x.segment(t0 - lag, len), y.segment(t0, len));
    if (std::isnan(r)) throw Error(ErrorCode::ZeroVariance, "cross_correlation");
    return r;
}

GrangerResult granger_test(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y, int lag) {
    if (lag < 1) throw Error(ErrorCode::InvalidArgument, "granger_test: lag must be >= 1");
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "granger_test: x and y lengths");
    if (has_missing(x) || has_missing(y)) throw Error(ErrorCode::MissingValues, "granger_test");

    const Eigen::Index n = y.size() - lag;  // usable rows
    const Eigen::Index df_den = n - 2 * lag - 1;
    if (df_den < 8)
        throw Error(ErrorCode::InsufficientObservations,
                    "granger_test: " + std::to_string(df_den) + " residual df at lag " + std::to_string(lag));

    Eigen::MatrixXd unrestricted(n, 1 + 2 * lag);
    const Eigen::VectorXd response = y.tail(n);
    unrestricted.col(0).setOnes();
    for (int i = 1; i <= lag; ++i) {
        unrestricted.col(i) = y.segment(lag - i, n);
        unrestricted.col(lag + i) = x.segment(lag - i, n);
    }
    const auto restricted_fit = least_squares(unrestricted.leftCols(1 + lag), response);
    const auto full_fit = least_squares(unrestricted, response);

    GrangerResult out;
    out.lag = lag;
    out.df_num = lag;
    out.df_den = static_cast<int>(df_den);
    out.ssr_restricted = restricted_fit.ssr;
    out.ssr_unrestricted = full_fit.ssr;
    out.cc = cross_correlation(x, y, lag);
    if (negligible_ssr(full_fit.ssr, response)) {
        out.perfect_fit = true;
        if (negligible_ssr(restricted_fit.ssr, response)) {
            out.f_stat = 0.0;
            out.p_value = 1.0;
        } else {
            out.f_stat = std::numeric_limits<double>::infinity();
            out.p_value = 0.0;
        }
        return out;
    }
    out.f_stat = std::max(0.0, (restricted_fit.ssr - full_fit.ssr) / lag) /
                 (full_fit.ssr / static_cast<double>(df_den));
    out.p_value = f_p_value(out.f_stat, lag, static_cast<double>(df_den));
    return out;
}

GrangerResult pick_min_p(std::span<const GrangerResult> results) {
    if (results.empty()) throw Error(ErrorCode::InvalidArgument, "pick_min_p: no results");
    const GrangerResult* best = &results.front();
    for (const auto& r : results) {
        if (r.p_value < best->p_value || (r.p_value == best->p_value && r.lag < best->lag))
            best = &r;
    }
    return *best;
}

GrangerResult scan_lags(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y, std::span<const int> lags) {
    if (lags.empty()) lags = kDefaultLags;
    std::vector<GrangerResult> results;
    results.reserve(lags.size());
    for (int lag : lags) results.push_back(granger_test(x, y, lag));
    return pick_min_p(results);
}

// ---------------------------------------------------------------------------

OlsResult ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& predictors,
                  const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index n = predictors.rows();
    const Eigen::Index p = predictors.cols();
    if (n != y.size()) throw Error(ErrorCode::LengthMismatch, "ols_fit: rows vs response");
    if (n <= p + 1) throw Error(ErrorCode::InsufficientObservations, "ols_fit: need rows > cols + 1");
    if (has_missing(y) || predictors.array().isNaN().any())
        throw Error(ErrorCode::MissingValues, "ols_fit");

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = predictors;
    const auto fit = least_squares(design, y);

    OlsResult out;
    out.coefficients = fit.beta;
    out.residuals = fit.residuals;
    out.fitted = y - fit.residuals;
    out.residual_ssr = fit.ssr;
    out.df_model = static_cast<int>(p);
    out.df_resid = static_cast<int>(n - p - 1);

    const double sst = (y.array() - y.mean()).matrix().squaredNorm();
    if (sst <= 0.0) {
        out.zero_variance = true;
        out.r = 0.0;
        out.r_squared = 0.0;
        out.f_stat = 0.0;
        out.p_value = 1.0;
        return out;
    }
    if (negligible_ssr(fit.ssr, y)) {
        out.perfect_fit = true;
        out.r = 1.0;
        out.r_squared = 1.0;
        out.f_stat = std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
    }
    out.r_squared = std::clamp(1.0 - fit.ssr / sst, 0.0, 1.0);
    const double r = pearson(out.fitted, y);
    out.r = std::isnan(r) ? 0.0 : r;
    out.f_stat = std::max(0.0, (sst - fit.ssr) / p) / (fit.ssr / out.df_resid);
    out.p_value = f_p_value(out.f_stat, static_cast<double>(p), out.df_resid);
    return out;
}

// ---------------------------------------------------------------------------

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         TTestVariant variant) {
    if (a.size() < 2 || b.size() < 2)
        throw Error(ErrorCode::SampleTooSmall, "t-test needs at least 2 observations per group");
    const Eigen::Map<const Eigen::VectorXd> va(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Eigen::VectorXd> vb(b.data(), static_cast<Eigen::Index>(b.size()));
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = va.mean();
    const double mb = vb.mean();
    const double var_a = (va.array() - ma).square().sum() / (na - 1.0);
    const double var_b = (vb.array() - mb).square().sum() / (nb - 1.0);
    if (var_a <= 0.0 && var_b <= 0.0) throw Error(ErrorCode::BothConstant, "t-test: zero variance in both groups");

    TTestResult out;
    out.group_means = {ma, mb};
    out.group_sds = {std::sqrt(var_a), std::sqrt(var_b)};
    out.group_ns = {static_cast<int>(a.size()), static_cast<int>(b.size())};

    double se2 = 0.0;
    if (variant == TTestVariant::Welch) {
        const double qa = var_a / na;
        const double qb = var_b / nb;
        se2 = qa + qb;
        out.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    } else {
        out.df = na + nb - 2.0;
        const double pooled = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / out.df;
        se2 = pooled * (1.0 / na + 1.0 / nb);
    }
    out.t_stat = (ma - mb) / std::sqrt(se2);
    out.p_value = t_p_value(out.t_stat, out.df);
    return out;
}

std::vector<double> benjamini_hochberg(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t rank = m; rank-- > 0;) {
        const std::size_t i = order[rank];
        running = std::min(running, p_values[i] * static_cast<double>(m) / double(rank + 1));
        adjusted[i] = running;
    }
    return adjusted;
}

}  // namespace mediaframe
