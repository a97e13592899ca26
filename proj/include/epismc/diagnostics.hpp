#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "epismc/likelihood.hpp"
#include "epismc/rng.hpp"

namespace epismc {

// ---- posterior agreement ----------------------------------------------------

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

GaussianSummary gaussian_summary(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights);
GaussianSummary gaussian_summary(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                                 const std::vector<int>& cols);

// KL(N0 || N1) between moment-matched Gaussians:
//   0.5 [ tr(S1^-1 S0) + (m1-m0)' S1^-1 (m1-m0) - d + ln |S1|/|S0| ]
double gaussian_kl(const GaussianSummary& n0, const GaussianSummary& n1);

// divergence of a candidate sample from a reference sample: the reference
// plays N0, the candidate N1, both summarized by weighted moments over the
// selected columns (empty weights = uniform)
double divergence_from_reference(const Eigen::MatrixXd& reference, const Eigen::VectorXd& w_ref,
                                 const Eigen::MatrixXd& candidate, const Eigen::VectorXd& w_cand,
                                 const std::vector<int>& cols);

// column indices surviving exclusion patterns (exact names or "prefix*")
std::vector<int> columns_excluding(const std::vector<std::string>& names,
                                   const std::vector<std::string>& patterns);

// R's type-7 sample quantile
double quantile_type7(std::vector<double> v, double q);

// ---- one-step-ahead predictive scoring --------------------------------------

// Finite mixture over count distributions, materialized on a truncated grid
// (components reach out to +-12 predictive standard deviations, then the grid
// is renormalized). All scores and the null moments below refer to exactly
// this truncated distribution, so calibration identities hold by construction.
class DiscretePredictive {
  public:
    static DiscretePredictive negbin_mixture(const Eigen::VectorXd& mu, const Eigen::VectorXd& eta,
                                             const Eigen::VectorXd& w);
    static DiscretePredictive binomial_mixture(long n, const Eigen::VectorXd& p,
                                               const Eigen::VectorXd& w);

    long support_max() const { return static_cast<long>(pmf_.size()) - 1; }
    const std::vector<double>& pmf() const { return pmf_; }
    double cdf(long k) const;  // 0 below the grid, 1 past its end
    double mean() const;
    long draw(RngStream& rng) const;

    // ranked probability score s(F,y) = sum_k (F_k - 1{k >= y})^2
    double rps(long y) const;
    double rps_null_mean() const;  // E s(F,Y), Y ~ F
    double rps_null_var() const;   // Var s(F,Y), Y ~ F

    double pit_lower(long y) const { return cdf(y - 1); }
    double pit_upper(long y) const { return cdf(y); }

  private:
    explicit DiscretePredictive(std::vector<double> pmf);
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    std::vector<double> prefix_f2_;  // sum_{k<y} F_k^2
    std::vector<double> suffix_q2_;  // sum_{k>=y} (1-F_k)^2
};

// standardized ranked-probability statistic over a scored series:
//   z = (sum_t s_t - sum_t E_t) / sqrt(sum_t V_t),
// mean 0, variance 1 when each y_t really comes from its predictive
struct ScoreSeries {
    double sum_s = 0.0, sum_mean = 0.0, sum_var = 0.0;
    long n = 0;
    void add(const DiscretePredictive& f, long y);
    double z() const;
};

// Non-randomized PIT for counts: each observation spreads unit mass uniformly
// over [F(y-1), F(y)], binned; under the true predictive the spread PIT has
// exactly uniform density, so the chi-square against uniform bins applies.
struct PitHistogram {
    explicit PitHistogram(int bins = 10) : mass(static_cast<std::size_t>(bins), 0.0) {}
    std::vector<double> mass;
    double total = 0.0;
    void add(double f_lo, double f_hi);
    void add(const DiscretePredictive& f, long y) { add(f.pit_lower(y), f.pit_upper(y)); }
    double chi2() const;
    double chi2_pvalue() const;
};

// ---- forecasting ------------------------------------------------------------

// Count forecasts from a weighted parameter sample: each particle's trajectory
// runs deterministically past the assimilation frontier and per-day counts are
// drawn from its observation law; intervals are weighted quantiles across
// particles. Rows: horizon days (day0+1 .. day0+h); columns: age groups.
struct ForecastResult {
    int from_day = 0;
    Eigen::MatrixXd q025, q50, q975;  // forecast count quantiles
    Eigen::MatrixXd mean_signal;      // weighted mean of the expected count
};

ForecastResult forecast_counts(const LikelihoodModel& model, const Eigen::MatrixXd& u_rows,
                               const Eigen::VectorXd& weights, int from_day, int horizon,
                               std::uint64_t seed);

}  // namespace epismc
