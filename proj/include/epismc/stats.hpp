#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "epismc/errors.hpp"

namespace epismc {

inline double logsumexp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v)
        if (x > m) m = x;
    if (!std::isfinite(m)) return m;  // all -inf (or a nan poisons max)
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// weighted mean and covariance on whatever scale the samples are given;
// weights need not be normalized. Covariance uses the plain Sum w (x-m)(x-m)'/Sum w
// form so that uniform weights reduce exactly to 1/n moments.
struct WeightedMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline WeightedMoments weighted_moments(const Eigen::MatrixXd& samples,
                                        const Eigen::VectorXd& weights) {
    if (samples.rows() != weights.size())
        throw invalid_parameter_error("weighted_moments: sample/weight size mismatch");
    if (samples.rows() == 0) throw invalid_parameter_error("weighted_moments: empty sample");
    const double wsum = weights.sum();
    if (!(wsum > 0.0)) throw degenerate_weights_error("weighted_moments: weights sum to zero");
    WeightedMoments out;
    out.mean = (samples.transpose() * weights) / wsum;
    Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
    out.cov = centered.transpose() * (weights.asDiagonal() * centered) / wsum;
    return out;
}

// Sum w^2-style effective sample size for arbitrary nonnegative weights.
inline double effective_sample_size(const Eigen::VectorXd& weights) {
    double s = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (w < 0.0 || !std::isfinite(w))
            throw degenerate_weights_error("effective_sample_size: negative or non-finite weight");
        s += w;
        s2 += w * w;
    }
    if (s2 == 0.0) throw degenerate_weights_error("effective_sample_size: all weights zero");
    return s * s / s2;
}

// Ridge-regularized Cholesky shared by MH kernels and KL: adds a uniform
// 1e-8 * max(diag(S)) ridge (so the protection does not vanish for the
// smallest-variance coordinates) and attempts an LLT; failure is reported
// through the supplied exception type.
template <typename ErrorT>
inline Eigen::LLT<Eigen::MatrixXd> regularized_llt(const Eigen::MatrixXd& S, const char* what) {
    const double scale = S.diagonal().maxCoeff();
    if (!(scale > 0.0)) throw ErrorT(what);
    Eigen::MatrixXd R = S;
    R.diagonal().array() += 1e-8 * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) throw ErrorT(what);
    return llt;
}

// weighted quantile of values with nonnegative weights, by cumulative weight;
// q in [0,1]. Values need not be sorted on entry.
inline double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q) {
    if (values.empty() || values.size() != weights.size())
        throw invalid_parameter_error("weighted_quantile: bad inputs");
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw degenerate_weights_error("weighted_quantile: weights sum to zero");
    const double target = q * wsum;
    double acc = 0.0;
    for (std::size_t i : idx) {
        acc += weights[i];
        if (acc >= target) return values[i];
    }
    return values[idx.back()];
}

// two-sided Kolmogorov-Smirnov p-value for a sample against a continuous CDF
// given as already-evaluated values in [0,1]; asymptotic Kolmogorov tail.
inline double ks_uniform_pvalue(std::vector<double> u) {
    const std::size_t n = u.size();
    if (n == 0) throw invalid_parameter_error("ks test: empty sample");
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = u[i];
        d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - cdf));
    }
    const double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n))) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace epismc
