#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "epismc/errors.hpp"
#include "epismc/model.hpp"
#include "epismc/observation.hpp"
#include "epismc/parameters.hpp"

namespace epismc {

struct WindowSpec {
    int start_day;       // inclusive, 0-based calendar day offset
    int end_day;         // exclusive
    int multiplier;      // 1-based index into m
};

struct ModelConfig {
    double dt = 0.5;
    int horizon_days = 245;
    double d_L = 2.0;
    Eigen::VectorXd populations;
    Eigen::MatrixXd contact_matrix;
    std::vector<WindowSpec> windows;
    double reference_multiplier = 1.0;
    int n_multipliers = 0;

    ContactSchedule make_schedule() const;
};

struct CalendarConfig {
    std::vector<int> serology_days;
    long serology_size = 500;     // samples per age group per collection day
    int virology_start = 7;      // first swab day
    int virology_period = 7;     // days between swab rounds
    std::vector<long> virology_sizes;  // per round, last value reused when exhausted
};

struct SmcSettings {
    int particles = 10000;
    double epsilon_L = 0.5;
    double r_A_star = 0.1;
    std::string kernel = "hybrid";
    std::string mode = "continuous";
    int max_mh_iters = 500;
    double gamma = 0.0;  // 0 = default 2.38^2/dim for full-vector proposals
};

struct McmcSettings {
    long iterations = 100000;
    long burn_in = 0;  // 0 = iterations/5
    long thin = 10;
    double target_accept = 0.234;
};

struct PipelineSettings {
    std::vector<int> landmark_days = {50, 70, 83, 120, 164, 245};
    std::vector<int> kl_days = {84, 85, 86, 87, 90, 100, 110, 120};
    int kl_replicates = 10;
    int forecast_horizon = 20;
    std::vector<std::string> kl_exclude;  // component names dropped from KL, e.g. bB*
};

struct AppConfig {
    ModelConfig model;
    ObservationConfig observation;
    CalendarConfig calendar;
    SmcSettings smc;
    McmcSettings mcmc;
    PipelineSettings pipeline;
    int scenario = 1;

    // truth on the natural scale, keyed by component name (full layout incl. background)
    std::map<std::string, double> truth;
    // prior overrides keyed by component name or block name ("m", "p", "eta", "beta_B")
    std::map<std::string, PriorSpec> prior_overrides;

    static AppConfig load(const std::string& path);
    std::string source_text;  // raw file contents, for manifest hashing

    ParameterSpace make_space(int scenario_id) const;
    Eigen::VectorXd truth_vector(int scenario_id) const;  // natural scale, layout order
    TransmissionParams transmission_truth() const;
    ObservationParams observation_truth(int scenario_id) const;
};

PriorSpec default_prior(const std::string& component_name);

}  // namespace epismc
