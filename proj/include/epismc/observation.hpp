#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epismc/errors.hpp"
#include "epismc/model.hpp"

namespace epismc {

// Report-delay distribution: a Gamma with nominal mean zeta and variance
// sigma2 is shifted by half a bin (underlying mean zeta + 0.5) and cut into
// unit bins, mass(l) = F(l+1) - F(l), renormalized over 0..l_max. The shift
// keeps the discretized mean at zeta and sends the variance->0 limit to a
// point mass at lag zeta rather than splitting across the bin edge.
struct DelayPmf {
    std::vector<double> mass;  // index = lag in whole days
    int max_lag() const { return static_cast<int>(mass.size()) - 1; }
    double mean() const;
};

DelayPmf discretize_delay(double zeta, double sigma2, int l_max);

struct ObservationParams {
    double phi;               // proportion of infections leading to a report
    Eigen::Vector4d p;        // p1,p2 child/adult propensity; p3,p4 post-intervention factors
    double eta1, eta2;        // negative-binomial dispersion before/after intervention
    Eigen::VectorXd beta_B;   // 9 background coefficients (scenario 2), may be empty
};

void validate(const ObservationParams& p, bool need_background);

struct ObservationConfig {
    int intervention_day = 83;  // eta and p switch strictly after this day
    int n_child_groups = 3;     // age groups 1..n are "children" for p and background
    double zeta = 5.0;
    double sigma2 = 8.0;
    int l_max = 45;
    // background knot days: pre segment {1, intervention_day}, post segment
    // configurable, defaults to the production analysis grid
    std::vector<int> background_knots = {84, 128, 176, 245};
};

double dispersion_at(const ObservationParams& p, const ObservationConfig& cfg, int day);
double reporting_propensity(const ObservationParams& p, const ObservationConfig& cfg, int day,
                            int age_group /*0-based*/);

// log background consultation rate for day t (1-based), age group a.
// Layout of beta_B (9): [mu, alpha_1, alpha_2, alpha_3, beta_child,
// pre1_child, pre1_adult, preT_child, preT_adult] where the post segment knots
// take values mu + alpha_t + beta_a with sum-to-zero alpha (4th knot derived)
// and beta_adult = -beta_child, interpolated linearly on the log scale; the
// pre segment is log-linear between its two per-age-class knot values and is
// allowed to be discontinuous at the intervention day.
double log_background_rate(const Eigen::VectorXd& beta_B, const ObservationConfig& cfg, int day,
                           int age_group);

// mu^e(t,a) = phi * p(t,a) * sum_l f(l) * daily_delta(t-l, a); rows are days 1..T
Eigen::MatrixXd expected_counts(const Eigen::MatrixXd& daily_delta, const ObservationParams& p,
                                const ObservationConfig& cfg, const DelayPmf& delay);

// negative binomial with E = mu, Var = mu*(eta+1)
double loglik_negbin(long x, double mu, double eta);
// confirmed-case stream
inline double loglik_confirmed(long x, double mu, double eta) { return loglik_negbin(x, mu, eta); }
// GP consultation stream: pandemic signal plus background
inline double loglik_gp(long x, double mu_doc, double B, double eta) {
    return loglik_negbin(x, mu_doc + B, eta);
}
// virology: w positives of v swabs, positivity mu_doc/(mu_doc+B)
double loglik_virology(long w, long v, double mu_doc, double B);
// serology: z positives of v samples, seropositivity 1 - S/N
double loglik_serology(long z, long v, double S_ta, double N_a);

double log_binomial_pmf(long k, long n, double prob);

}  // namespace epismc
