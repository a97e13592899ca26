#include "epismc/observation.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

namespace epismc {

double DelayPmf::mean() const {
    double s = 0.0;
    for (std::size_t l = 0; l < mass.size(); ++l) s += static_cast<double>(l) * mass[l];
    return s;
}

DelayPmf discretize_delay(double zeta, double sigma2, int l_max) {
    if (!(zeta > 0.0)) throw invalid_parameter_error("delay mean must be positive");
    if (!(sigma2 >= 0.0)) throw invalid_parameter_error("delay variance must be nonnegative");
    if (l_max < 0) throw invalid_parameter_error("l_max must be nonnegative");

    DelayPmf out;
    out.mass.assign(static_cast<std::size_t>(l_max) + 1, 0.0);

    const double mu = zeta + 0.5;  // bin-centre continuity correction
    // degenerate spread: place the whole mass in the bin containing the mean
    if (sigma2 / (zeta * zeta) < 1e-12) {
        int l = static_cast<int>(std::floor(mu));
        if (l > l_max)
            throw config_error("delay support truncated: l_max below the degenerate lag");
        out.mass[static_cast<std::size_t>(l)] = 1.0;
        return out;
    }

    const double shape = mu * mu / sigma2;
    const double scale = sigma2 / mu;
    double prev = 0.0;
    double total = 0.0;
    for (int l = 0; l <= l_max; ++l) {
        const double next = boost::math::gamma_p(shape, (l + 1) / scale);
        out.mass[static_cast<std::size_t>(l)] = next - prev;
        total += next - prev;
        prev = next;
    }
    if (1.0 - total > 1e-6)
        throw config_error("delay support truncated: more than 1e-6 mass beyond l_max");
    for (auto& f : out.mass) f /= total;
    return out;
}

void validate(const ObservationParams& p, bool need_background) {
    if (!(p.phi > 0.0 && p.phi < 1.0)) throw invalid_parameter_error("phi must lie in (0,1)");
    for (int i = 0; i < 4; ++i)
        if (!(p.p[i] > 0.0 && p.p[i] < 1.0))
            throw invalid_parameter_error("propensity components must lie in (0,1)");
    if (!(p.eta1 > 0.0) || !(p.eta2 > 0.0))
        throw invalid_parameter_error("dispersions must be positive");
    if (need_background && p.beta_B.size() != 9)
        throw invalid_parameter_error("background model needs 9 coefficients");
}

double dispersion_at(const ObservationParams& p, const ObservationConfig& cfg, int day) {
    return day <= cfg.intervention_day ? p.eta1 : p.eta2;
}

double reporting_propensity(const ObservationParams& p, const ObservationConfig& cfg, int day,
                            int age_group) {
    const bool child = age_group < cfg.n_child_groups;
    double pe = child ? p.p[0] : p.p[1];
    if (day > cfg.intervention_day) pe *= child ? p.p[2] : p.p[3];
    return pe;
}

double log_background_rate(const Eigen::VectorXd& beta_B, const ObservationConfig& cfg, int day,
                           int age_group) {
    if (beta_B.size() != 9) throw invalid_parameter_error("background model needs 9 coefficients");
    if (cfg.background_knots.size() != 4) throw config_error("expected 4 post-segment knots");
    const bool child = age_group < cfg.n_child_groups;

    double log_B;
    if (day <= cfg.intervention_day) {
        // pre segment: per-age-class knot values at day 1 and the intervention day
        const double v0 = child ? beta_B[5] : beta_B[6];
        const double v1 = child ? beta_B[7] : beta_B[8];
        const int t0 = 1, t1 = cfg.intervention_day;
        const double w = (t1 == t0) ? 0.0
                                    : (static_cast<double>(day) - t0) / static_cast<double>(t1 - t0);
        log_B = (1.0 - w) * v0 + w * v1;
    } else {
        const double mu = beta_B[0];
        const double a1 = beta_B[1], a2 = beta_B[2], a3 = beta_B[3];
        const double a4 = -(a1 + a2 + a3);  // sum-to-zero over the four knots
        const double alpha[4] = {a1, a2, a3, a4};
        const double beta_age = child ? beta_B[4] : -beta_B[4];
        const auto& knots = cfg.background_knots;
        const int t = std::min(std::max(day, knots.front()), knots.back());
        int seg = 0;
        while (seg < 2 && t > knots[seg + 1]) ++seg;
        const double w = static_cast<double>(t - knots[seg]) /
                         static_cast<double>(knots[seg + 1] - knots[seg]);
        log_B = mu + (1.0 - w) * alpha[seg] + w * alpha[seg + 1] + beta_age;
    }
    return log_B;
}

Eigen::MatrixXd expected_counts(const Eigen::MatrixXd& daily_delta, const ObservationParams& p,
                                const ObservationConfig& cfg, const DelayPmf& delay) {
    const int T = static_cast<int>(daily_delta.rows());
    const int A = static_cast<int>(daily_delta.cols());
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(T, A);
    const int L = delay.max_lag();
    for (int t = 1; t <= T; ++t) {
        const int lmax = std::min(L, t - 1);
        for (int a = 0; a < A; ++a) {
            double conv = 0.0;
            for (int l = 0; l <= lmax; ++l) conv += delay.mass[static_cast<std::size_t>(l)] * daily_delta(t - l - 1, a);
            mu(t - 1, a) = p.phi * reporting_propensity(p, cfg, t, a) * conv;
        }
    }
    return mu;
}

namespace {
// Stirling tail J(z) = lgamma(z) - [(z-1/2)log z - z + log(2pi)/2]; < 1e-17 error for z >= 100
double lgamma_tail(double z) {
    const double zi = 1.0 / z;
    const double zi2 = zi * zi;
    return zi * (1.0 / 12.0 + zi2 * (-1.0 / 360.0 + zi2 * (1.0 / 1260.0)));
}
}  // namespace

double loglik_negbin(long x, double mu, double eta) {
    if (x < 0) throw invalid_parameter_error("negative count");
    if (!(eta > 0.0)) throw invalid_parameter_error("dispersion must be positive");
    if (!(mu >= 0.0)) throw invalid_parameter_error("negative mean");
    if (mu == 0.0) return x == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double xd = static_cast<double>(x);
    // E = mu, Var = mu(eta+1)  =>  size r = mu/eta, success prob p0 = 1/(1+eta)
    const double r = mu / eta;
    const double log1p_eta = std::log1p(eta);
    if (!std::isfinite(r))  // eta below ~mu*DBL_MIN: exact Poisson limit
        return xd * std::log(mu) - mu - std::lgamma(xd + 1.0);
    if (r <= 100.0) {
        const double log_q0 = std::log(eta) - log1p_eta;
        return std::lgamma(xd + r) - std::lgamma(r) - std::lgamma(xd + 1.0) - r * log1p_eta +
               xd * log_q0;
    }
    // small eta: lgamma(x+r) - lgamma(r) cancels catastrophically (quantises the log-likelihood
    // once r*log(r) passes ~1e16), so expand it by Stirling; recovers Poisson as eta -> 0
    return (xd + r - 0.5) * std::log1p(xd / r) - xd + lgamma_tail(xd + r) - lgamma_tail(r) +
           xd * (std::log(mu) - log1p_eta) - mu * (log1p_eta / eta) - std::lgamma(xd + 1.0);
}

double log_binomial_pmf(long k, long n, double prob) {
    if (n < 0 || k < 0 || k > n) throw invalid_parameter_error("binomial pmf: bad k or n");
    if (prob < 0.0 || prob > 1.0) throw invalid_parameter_error("binomial pmf: prob outside [0,1]");
    if (prob == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
           k * std::log(prob) + (n - k) * std::log1p(-prob);
}

double loglik_virology(long w, long v, double mu_doc, double B) {
    if (v == 0) return 0.0;
    const double denom = mu_doc + B;
    if (!(denom > 0.0))
        throw domain_error("virology positivity undefined: mu_doc + B is zero");
    return log_binomial_pmf(w, v, mu_doc / denom);
}

double loglik_serology(long z, long v, double S_ta, double N_a) {
    if (v == 0) return 0.0;
    if (!(N_a > 0.0)) throw invalid_parameter_error("serology: population must be positive");
    if (S_ta < 0.0 || S_ta > N_a) throw domain_error("serology: susceptibles outside [0, N]");
    return log_binomial_pmf(z, v, 1.0 - S_ta / N_a);
}

}  // namespace epismc
