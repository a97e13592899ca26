#include "epismc/likelihood.hpp"

#include <cmath>
#include <limits>

namespace epismc {

LikelihoodModel::LikelihoodModel(ModelConfig model_cfg, ObservationConfig obs_cfg,
                                 ParameterSpace space, Dataset data, int scenario)
    : model_cfg_(std::move(model_cfg)),
      obs_cfg_(std::move(obs_cfg)),
      space_(std::move(space)),
      data_(std::move(data)),
      scenario_(scenario),
      schedule_(model_cfg_.make_schedule()),
      delay_(discretize_delay(obs_cfg_.zeta, obs_cfg_.sigma2, obs_cfg_.l_max)) {
    if (scenario_ != 1 && scenario_ != 2) throw config_error("scenario must be 1 or 2");
    if (!data_.batches.empty() && data_.n_ages != schedule_.n_ages())
        throw config_error("data age groups do not match the contact schedule");
    if (data_.n_days() > model_cfg_.horizon_days)
        throw config_error("data extends past the model horizon");
    const bool bg = space_.layout().include_background();
    if (bg != (scenario_ == 2))
        throw config_error("parameter layout background flag inconsistent with scenario");
}

TransmissionParams LikelihoodModel::transmission(const Eigen::VectorXd& theta_natural) const {
    const auto& L = space_.layout();
    TransmissionParams p;
    p.psi = theta_natural[L.psi()];
    p.nu = theta_natural[L.nu()];
    p.d_I = theta_natural[L.d_I()];
    p.d_L = model_cfg_.d_L;
    p.m.resize(L.n_multipliers());
    for (int j = 0; j < L.n_multipliers(); ++j) p.m[j] = theta_natural[L.m(j)];
    return p;
}

ObservationParams LikelihoodModel::observation_params(const Eigen::VectorXd& theta_natural) const {
    const auto& L = space_.layout();
    ObservationParams p;
    p.phi = theta_natural[L.phi()];
    for (int i = 0; i < 4; ++i) p.p[i] = theta_natural[L.p(i)];
    p.eta1 = theta_natural[L.eta(0)];
    p.eta2 = theta_natural[L.eta(1)];
    if (L.include_background()) {
        p.beta_B.resize(9);
        for (int i = 0; i < 9; ++i) p.beta_B[i] = theta_natural[L.beta_B(i)];
    }
    return p;
}

std::vector<DayExpectation> LikelihoodModel::expectations(const Eigen::VectorXd& theta_natural,
                                                          int first_day, int last_day) const {
    if (first_day < 1 || last_day < first_day || last_day > model_cfg_.horizon_days)
        throw config_error("expectation day range out of bounds");
    const TransmissionParams tp = transmission(theta_natural);
    const ObservationParams op = observation_params(theta_natural);
    const int A = schedule_.n_ages();
    const int spd = schedule_.steps_per_day();
    const Trajectory traj = simulate_epidemic(tp, schedule_, last_day * spd);

    Eigen::MatrixXd daily_delta(last_day, A);
    for (int d = 1; d <= last_day; ++d) daily_delta.row(d - 1) = traj.daily_infections(d);
    const Eigen::MatrixXd mu = expected_counts(daily_delta, op, obs_cfg_, delay_);

    const bool bg = space_.layout().include_background();
    const Eigen::VectorXd& N = schedule_.populations();
    std::vector<DayExpectation> out;
    out.reserve(static_cast<std::size_t>(last_day - first_day + 1));
    for (int d = first_day; d <= last_day; ++d) {
        DayExpectation e;
        e.mu_signal = mu.row(d - 1).transpose();
        e.background = Eigen::VectorXd::Zero(A);
        if (bg)
            for (int a = 0; a < A; ++a)
                e.background[a] = std::exp(log_background_rate(op.beta_B, obs_cfg_, d, a));
        const Eigen::VectorXd S = traj.end_of_day_susceptibles(d);
        e.sero_prob = (1.0 - S.array() / N.array()).cwiseMax(0.0).cwiseMin(1.0);
        e.eta = dispersion_at(op, obs_cfg_, d);
        out.push_back(std::move(e));
    }
    return out;
}

double LikelihoodModel::day_loglik(const DayExpectation& e, const SurveillanceBatch& batch) const {
    const int A = static_cast<int>(e.mu_signal.size());
    double ll = 0.0;
    for (int a = 0; a < A; ++a) {
        if (batch.confirmed[a] >= 0) ll += loglik_confirmed(batch.confirmed[a], e.mu_signal[a], e.eta);
        if (batch.gp[a] >= 0) ll += loglik_gp(batch.gp[a], e.mu_signal[a], e.background[a], e.eta);
        if (batch.viro_n[a] > 0)
            ll += loglik_virology(batch.viro_pos[a], batch.viro_n[a], e.mu_signal[a], e.background[a]);
        if (batch.sero_n[a] > 0)
            ll += log_binomial_pmf(batch.sero_pos[a], batch.sero_n[a], e.sero_prob[a]);
    }
    return ll;
}

LikelihoodModel::Eval LikelihoodModel::evaluate(const Eigen::VectorXd& u_free, int k,
                                                double delta) const {
    if (k < 0 || k > data_.n_days()) throw config_error("evaluate: day index out of range");
    if (delta < 0.0 || delta > 1.0) throw config_error("evaluate: tempering exponent out of [0,1]");
    const bool want_batch = delta > 0.0;
    if (want_batch && k + 1 > data_.n_days())
        throw config_error("evaluate: tempered batch beyond the data");

    Eval ev;
    ev.log_prior = space_.log_prior_unconstrained(u_free);
    const int last = want_batch ? k + 1 : k;
    if (last == 0) {
        ev.target = ev.log_prior;
        return ev;
    }

    const double neg_inf = -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd theta = space_.to_natural(u_free);
    std::vector<DayExpectation> exp_days;
    try {
        exp_days = expectations(theta, 1, last);
    } catch (const domain_error&) {
        // discretization breaks down here (stage outflow or per-contact
        // probability past one): excluded from the posterior support
        ev.history = ev.batch = ev.target = neg_inf;
        return ev;
    } catch (const invalid_parameter_error&) {
        ev.history = ev.batch = ev.target = neg_inf;
        return ev;
    }

    for (int d = 1; d <= k; ++d) ev.history += day_loglik(exp_days[static_cast<std::size_t>(d - 1)], data_.day(d));
    if (want_batch) ev.batch = day_loglik(exp_days[static_cast<std::size_t>(k)], data_.day(k + 1));
    // delta = 0 must not touch batch: 0 * (-inf) would poison the target
    ev.target = ev.log_prior + ev.history + (want_batch ? delta * ev.batch : 0.0);
    if (std::isnan(ev.target)) ev.target = neg_inf;
    return ev;
}

double LikelihoodModel::batch_loglik(const Eigen::VectorXd& theta_natural, int day) const {
    const auto e = expectations(theta_natural, day, day);
    return day_loglik(e.front(), data_.day(day));
}

double LikelihoodModel::attack_rate_of(const Eigen::VectorXd& theta_natural) const {
    return attack_rate(transmission(theta_natural), schedule_);
}

}  // namespace epismc
