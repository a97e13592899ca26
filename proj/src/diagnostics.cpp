#include "epismc/diagnostics.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "epismc/stats.hpp"

namespace epismc {

GaussianSummary gaussian_summary(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights) {
    Eigen::VectorXd w = weights.size() == 0
                            ? Eigen::VectorXd::Constant(rows.rows(), 1.0 / static_cast<double>(rows.rows()))
                            : weights;
    const auto mom = weighted_moments(rows, w);
    return {mom.mean, mom.cov};
}

GaussianSummary gaussian_summary(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                                 const std::vector<int>& cols) {
    Eigen::MatrixXd sub(rows.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = rows.col(cols[c]);
    return gaussian_summary(sub, weights);
}

double gaussian_kl(const GaussianSummary& n0, const GaussianSummary& n1) {
    const Eigen::Index d = n0.mean.size();
    if (n1.mean.size() != d || n0.cov.rows() != d || n1.cov.rows() != d)
        throw diagnostic_error("gaussian_kl: dimension mismatch");
    const auto llt1 = regularized_llt<diagnostic_error>(n1.cov, "covariance (target) not positive definite");
    const auto llt0 = regularized_llt<diagnostic_error>(n0.cov, "covariance (source) not positive definite");
    const double tr = llt1.solve(n0.cov).trace();
    const Eigen::VectorXd dm = n1.mean - n0.mean;
    const double quad = dm.dot(llt1.solve(dm));
    double logdet1 = 0.0, logdet0 = 0.0;
    const Eigen::MatrixXd l1 = llt1.matrixL(), l0 = llt0.matrixL();
    for (Eigen::Index i = 0; i < d; ++i) {
        logdet1 += 2.0 * std::log(l1(i, i));
        logdet0 += 2.0 * std::log(l0(i, i));
    }
    return 0.5 * (tr + quad - static_cast<double>(d) + logdet1 - logdet0);
}

double divergence_from_reference(const Eigen::MatrixXd& reference, const Eigen::VectorXd& w_ref,
                                 const Eigen::MatrixXd& candidate, const Eigen::VectorXd& w_cand,
                                 const std::vector<int>& cols) {
    if (cols.empty()) throw diagnostic_error("no components left to compare");
    return gaussian_kl(gaussian_summary(reference, w_ref, cols),
                       gaussian_summary(candidate, w_cand, cols));
}

std::vector<int> columns_excluding(const std::vector<std::string>& names,
                                   const std::vector<std::string>& patterns) {
    auto matches = [&](const std::string& name) {
        for (const auto& p : patterns) {
            if (!p.empty() && p.back() == '*') {
                if (name.compare(0, p.size() - 1, p, 0, p.size() - 1) == 0) return true;
            } else if (name == p) {
                return true;
            }
        }
        return false;
    };
    std::vector<int> out;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (!matches(names[i])) out.push_back(static_cast<int>(i));
    return out;
}

double quantile_type7(std::vector<double> v, double q) {
    if (v.empty()) throw diagnostic_error("quantile of empty sample");
    if (q < 0.0 || q > 1.0) throw invalid_parameter_error("quantile level out of [0,1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

// ---- DiscretePredictive ------------------------------------------------------

DiscretePredictive::DiscretePredictive(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    double s = 0.0;
    for (double p : pmf_) s += p;
    if (!(s > 0.0)) throw diagnostic_error("predictive has no mass on its support");
    for (double& p : pmf_) p /= s;
    cdf_.resize(pmf_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        acc += pmf_[k];
        cdf_[k] = std::min(acc, 1.0);
    }
    cdf_.back() = 1.0;
    prefix_f2_.assign(pmf_.size() + 1, 0.0);
    suffix_q2_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t y = 1; y <= pmf_.size(); ++y)
        prefix_f2_[y] = prefix_f2_[y - 1] + cdf_[y - 1] * cdf_[y - 1];
    for (std::size_t y = pmf_.size(); y-- > 0;) {
        const double q = 1.0 - cdf_[y];
        suffix_q2_[y] = suffix_q2_[y + 1] + q * q;
    }
}

namespace {
Eigen::VectorXd normalize_mix_weights(const Eigen::VectorXd& w) {
    const double s = w.sum();
    if (!(s > 0.0)) throw diagnostic_error("mixture weights sum to zero");
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w[i] < 0.0 || !std::isfinite(w[i]))
            throw diagnostic_error("mixture weight negative or non-finite");
    return w / s;
}
constexpr long kMaxSupport = 4000000;
}  // namespace

DiscretePredictive DiscretePredictive::negbin_mixture(const Eigen::VectorXd& mu,
                                                      const Eigen::VectorXd& eta,
                                                      const Eigen::VectorXd& w) {
    if (mu.size() != eta.size() || mu.size() != w.size() || mu.size() == 0)
        throw diagnostic_error("negbin mixture: inconsistent component arrays");
    const Eigen::VectorXd wn = normalize_mix_weights(w);
    long kmax = 10;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        if (!(mu[j] >= 0.0) || !(eta[j] > 0.0))
            throw diagnostic_error("negbin mixture: bad component parameters");
        const double sd = std::sqrt(mu[j] * (1.0 + eta[j]));
        kmax = std::max(kmax, static_cast<long>(std::ceil(mu[j] + 12.0 * sd)));
    }
    if (kmax > kMaxSupport) throw diagnostic_error("predictive support too large to materialize");

    std::vector<double> pmf(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        if (mu[j] == 0.0) {
            pmf[0] += wn[j];
            continue;
        }
        const double r = mu[j] / eta[j];
        const double logq = std::log(eta[j]) - std::log1p(eta[j]);
        double lp = -r * std::log1p(eta[j]);  // log pmf(0)
        pmf[0] += wn[j] * std::exp(lp);
        for (long k = 0; k < kmax; ++k) {
            lp += std::log(static_cast<double>(k) + r) - std::log(static_cast<double>(k) + 1.0) + logq;
            pmf[static_cast<std::size_t>(k) + 1] += wn[j] * std::exp(lp);
        }
    }
    return DiscretePredictive(std::move(pmf));
}

DiscretePredictive DiscretePredictive::binomial_mixture(long n, const Eigen::VectorXd& p,
                                                        const Eigen::VectorXd& w) {
    if (p.size() != w.size() || p.size() == 0)
        throw diagnostic_error("binomial mixture: inconsistent component arrays");
    if (n < 0 || n > kMaxSupport) throw diagnostic_error("binomial mixture: bad trial count");
    const Eigen::VectorXd wn = normalize_mix_weights(w);
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double pj = p[j];
        if (pj < 0.0 || pj > 1.0) throw diagnostic_error("binomial mixture: probability out of range");
        if (pj == 0.0) {
            pmf[0] += wn[j];
            continue;
        }
        if (pj == 1.0) {
            pmf[static_cast<std::size_t>(n)] += wn[j];
            continue;
        }
        const double logit = std::log(pj) - std::log1p(-pj);
        double lp = static_cast<double>(n) * std::log1p(-pj);  // log pmf(0)
        pmf[0] += wn[j] * std::exp(lp);
        for (long k = 0; k < n; ++k) {
            lp += std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k) + 1.0) + logit;
            pmf[static_cast<std::size_t>(k) + 1] += wn[j] * std::exp(lp);
        }
    }
    return DiscretePredictive(std::move(pmf));
}

double DiscretePredictive::cdf(long k) const {
    if (k < 0) return 0.0;
    if (k >= static_cast<long>(cdf_.size())) return 1.0;
    return cdf_[static_cast<std::size_t>(k)];
}

double DiscretePredictive::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
    return m;
}

long DiscretePredictive::draw(RngStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<long>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                                   cdf_.size() - 1));
}

double DiscretePredictive::rps(long y) const {
    if (y < 0) throw diagnostic_error("rps of a negative count");
    const long edge = static_cast<long>(pmf_.size());  // = support_max()+1
    if (y >= edge)
        // past the grid every F_k is 1 and the indicator is 0 up to y
        return prefix_f2_[static_cast<std::size_t>(edge)] + static_cast<double>(y - edge);
    return prefix_f2_[static_cast<std::size_t>(y)] + suffix_q2_[static_cast<std::size_t>(y)];
}

double DiscretePredictive::rps_null_mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) s += cdf_[k] * (1.0 - cdf_[k]);
    return s;
}

double DiscretePredictive::rps_null_var() const {
    const double m = rps_null_mean();
    double m2 = 0.0;
    for (std::size_t y = 0; y < pmf_.size(); ++y) {
        const double s = prefix_f2_[y] + suffix_q2_[y];
        m2 += pmf_[y] * s * s;
    }
    return std::max(0.0, m2 - m * m);
}

void ScoreSeries::add(const DiscretePredictive& f, long y) {
    sum_s += f.rps(y);
    sum_mean += f.rps_null_mean();
    sum_var += f.rps_null_var();
    ++n;
}

double ScoreSeries::z() const {
    if (n == 0 || !(sum_var > 0.0)) throw diagnostic_error("score series carries no variance");
    return (sum_s - sum_mean) / std::sqrt(sum_var);
}

void PitHistogram::add(double f_lo, double f_hi) {
    f_lo = std::min(std::max(f_lo, 0.0), 1.0);
    f_hi = std::min(std::max(f_hi, 0.0), 1.0);
    const int bins = static_cast<int>(mass.size());
    if (f_hi <= f_lo) {
        const int b = std::min(bins - 1, static_cast<int>(f_lo * bins));
        mass[static_cast<std::size_t>(b)] += 1.0;
    } else {
        for (int b = 0; b < bins; ++b) {
            const double lo = static_cast<double>(b) / bins, hi = static_cast<double>(b + 1) / bins;
            const double ov = std::max(0.0, std::min(hi, f_hi) - std::max(lo, f_lo));
            mass[static_cast<std::size_t>(b)] += ov / (f_hi - f_lo);
        }
    }
    total += 1.0;
}

double PitHistogram::chi2() const {
    if (total <= 0.0) throw diagnostic_error("empty PIT histogram");
    const double expected = total / static_cast<double>(mass.size());
    double x = 0.0;
    for (double m : mass) x += (m - expected) * (m - expected) / expected;
    return x;
}

double PitHistogram::chi2_pvalue() const {
    const double df = static_cast<double>(mass.size()) - 1.0;
    return boost::math::gamma_q(df / 2.0, chi2() / 2.0);
}

// ---- forecasting -------------------------------------------------------------

ForecastResult forecast_counts(const LikelihoodModel& model, const Eigen::MatrixXd& u_rows,
                               const Eigen::VectorXd& weights, int from_day, int horizon,
                               std::uint64_t seed) {
    if (horizon < 1) throw config_error("forecast horizon must be positive");
    if (from_day < 0 || from_day + horizon > model.horizon_days())
        throw config_error("forecast window leaves the model horizon");
    const int n = static_cast<int>(u_rows.rows());
    const int A = model.schedule().n_ages();
    if (n < 1) throw config_error("forecast needs at least one particle");
    Eigen::VectorXd w = weights.size() == 0
                            ? Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))
                            : weights;

    ForecastResult out;
    out.from_day = from_day;
    out.q025.resize(horizon, A);
    out.q50.resize(horizon, A);
    out.q975.resize(horizon, A);
    out.mean_signal = Eigen::MatrixXd::Zero(horizon, A);

    // counts[h][a][j]
    std::vector<std::vector<std::vector<double>>> counts(
        static_cast<std::size_t>(horizon),
        std::vector<std::vector<double>>(static_cast<std::size_t>(A),
                                         std::vector<double>(static_cast<std::size_t>(n))));
    const double wsum = w.sum();
    for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd theta = model.space().to_natural(u_rows.row(j).transpose());
        const auto days = model.expectations(theta, from_day + 1, from_day + horizon);
        RngStream rng(seed, 0xF0CA, static_cast<std::uint64_t>(j), 0, 0);
        for (int h = 0; h < horizon; ++h) {
            const auto& e = days[static_cast<std::size_t>(h)];
            for (int a = 0; a < A; ++a) {
                const double mu = e.mu_signal[a] + e.background[a];
                counts[static_cast<std::size_t>(h)][static_cast<std::size_t>(a)]
                      [static_cast<std::size_t>(j)] =
                          static_cast<double>(rng.negbin_mean_dispersion(mu, e.eta));
                out.mean_signal(h, a) += w[j] / wsum * mu;
            }
        }
    }

    std::vector<double> wv(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) wv[static_cast<std::size_t>(j)] = w[j];
    for (int h = 0; h < horizon; ++h)
        for (int a = 0; a < A; ++a) {
            const auto& c = counts[static_cast<std::size_t>(h)][static_cast<std::size_t>(a)];
            out.q025(h, a) = weighted_quantile(c, wv, 0.025);
            out.q50(h, a) = weighted_quantile(c, wv, 0.5);
            out.q975(h, a) = weighted_quantile(c, wv, 0.975);
        }
    return out;
}

}  // namespace epismc
