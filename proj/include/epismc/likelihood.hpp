#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epismc/config.hpp"
#include "epismc/data.hpp"
#include "epismc/model.hpp"
#include "epismc/observation.hpp"
#include "epismc/parameters.hpp"

namespace epismc {

// Everything the observation streams need about one day, derived from a
// parameter vector by running the transmission model.
struct DayExpectation {
    Eigen::VectorXd mu_signal;   // phi * p * delayed infections, per age
    Eigen::VectorXd background;  // B per age (zero unless the background model is active)
    Eigen::VectorXd sero_prob;   // 1 - S/N per age at the end of the day
    double eta = 1.0;            // dispersion in force that day
};

// Deterministic map theta -> log posterior pieces, shared verbatim by the
// MCMC reference and the particle engine. Instances are immutable after
// construction and safe for concurrent use.
class LikelihoodModel {
  public:
    LikelihoodModel(ModelConfig model_cfg, ObservationConfig obs_cfg, ParameterSpace space,
                    Dataset data, int scenario);

    const ParameterSpace& space() const { return space_; }
    const ContactSchedule& schedule() const { return schedule_; }
    const DelayPmf& delay() const { return delay_; }
    const Dataset& data() const { return data_; }
    const ModelConfig& model_config() const { return model_cfg_; }
    const ObservationConfig& observation_config() const { return obs_cfg_; }
    int scenario() const { return scenario_; }
    int n_data_days() const { return data_.n_days(); }
    int horizon_days() const { return model_cfg_.horizon_days; }

    TransmissionParams transmission(const Eigen::VectorXd& theta_natural) const;
    ObservationParams observation_params(const Eigen::VectorXd& theta_natural) const;

    // expectations for days first..last (1-based, inclusive), one trajectory run
    std::vector<DayExpectation> expectations(const Eigen::VectorXd& theta_natural, int first_day,
                                             int last_day) const;

    double day_loglik(const DayExpectation& e, const SurveillanceBatch& batch) const;

    struct Eval {
        double log_prior = 0.0;
        double history = 0.0;  // sum of day log-likelihoods for days 1..k
        double batch = 0.0;    // log-likelihood of day k+1 (0 when not requested)
        double target = 0.0;   // log_prior + history + delta * batch
    };

    // Tempered posterior on the unconstrained scale. delta > 0 includes day
    // k+1 raised to that power. Parameter regions where the discretization
    // breaks down (overly short stage durations, per-contact probabilities
    // reaching one) are treated as zero posterior mass rather than errors.
    Eval evaluate(const Eigen::VectorXd& u_free, int k, double delta) const;

    // log-likelihood of a single day's batch at theta (natural scale)
    double batch_loglik(const Eigen::VectorXd& theta_natural, int day) const;

    // epidemic summary used by the mixing diagnostic: full-horizon attack rate
    double attack_rate_of(const Eigen::VectorXd& theta_natural) const;

  private:
    ModelConfig model_cfg_;
    ObservationConfig obs_cfg_;
    ParameterSpace space_;
    Dataset data_;
    int scenario_;
    ContactSchedule schedule_;
    DelayPmf delay_;
};

}  // namespace epismc
