#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epismc/errors.hpp"

namespace epismc {

// Deterministic age-structured SEIR with Erlang(2) latent and infectious
// stages, integrated by forward Euler on half-day (or finer) steps. Infection
// pressure follows the Reed-Frost form: one infective in age group b escapes
// infecting a given susceptible of group a with probability 1 - M(a,b)*R0/d_I
// per unit time, so
//   lambda_a = [1 - prod_b (1 - M(a,b)*R0/d_I)^(I1_b+I2_b)] * dt.

struct TransmissionParams {
    double psi;             // initial exponential growth rate per day
    double nu;              // log initial infectious fraction
    double d_I;             // mean infectious period (days)
    double d_L = 2.0;       // mean latent period (days), fixed by convention
    Eigen::VectorXd m;      // contact multipliers, one per calendar window class
};

void validate(const TransmissionParams& p);

// R0 solving the Erlang(2)/Erlang(2) Euler-Lotka equation for growth rate psi:
//   R0 = psi*d_I*(1+psi*d_L/2)^2 / (1 - (1+psi*d_I/2)^-2),  R0(0) = 1.
double r0_from_growth_rate(double psi, double d_L, double d_I);

// rate feeding the Euler-discretized system so that the per-step growth
// factor is exactly exp(psi*dt); tends to psi as dt -> 0
inline double discrete_equivalent_rate(double psi, double dt) {
    return (std::exp(psi * dt) - 1.0) / dt;
}

struct ContactPeriod {
    int start_step;        // inclusive
    int end_step;          // exclusive
    int multiplier_index;  // into TransmissionParams::m
};

class ContactSchedule {
  public:
    // raw_contacts(a,b) = daily contacts a reports with group b; corrected to
    // reciprocity against populations, then normalized so the next-generation
    // operator of the reference window (baseline * reference_multiplier) has
    // unit dominant eigenvalue before the R0/d_I scaling.
    ContactSchedule(const Eigen::MatrixXd& raw_contacts, const Eigen::VectorXd& populations,
                    std::vector<ContactPeriod> periods, double dt, int n_steps,
                    double reference_multiplier = 1.0);

    int n_ages() const { return static_cast<int>(unit_matrix_.rows()); }
    int n_steps() const { return n_steps_; }
    double dt() const { return dt_; }
    int steps_per_day() const { return steps_per_day_; }
    int n_multiplier_classes() const { return n_classes_; }
    const Eigen::VectorXd& populations() const { return populations_; }

    int multiplier_index_at(int t_index) const;

    // per-infective transmission kernel at step t: m_j * unit matrix, where
    // unit_matrix = C_reciprocal / (N_b * lambda_max(C) * reference_multiplier)
    Eigen::MatrixXd contact_matrix_at(int t_index, const Eigen::VectorXd& m) const;

    // reciprocity-corrected, normalized baseline before any multiplier
    const Eigen::MatrixXd& unit_matrix() const { return unit_matrix_; }

    // dominant eigenvector of the step-0 next-generation operator (entries
    // positive, normalized to sum 1); multiplier-free by similarity
    const Eigen::VectorXd& ngm_eigenvector() const { return ngm_eigenvector_; }

  private:
    Eigen::MatrixXd unit_matrix_;
    Eigen::VectorXd populations_;
    Eigen::VectorXd ngm_eigenvector_;
    std::vector<ContactPeriod> periods_;
    std::vector<int> step_to_period_;
    double dt_;
    int n_steps_;
    int steps_per_day_;
    int n_classes_;
};

struct EpidemicState {
    Eigen::VectorXd S, E1, E2, I1, I2, R;
    double total() const { return S.sum() + E1.sum() + E2.sum() + I1.sum() + I2.sum() + R.sum(); }
};

// force of infection per age for one step; M is the per-infective kernel from
// contact_matrix_at, already multiplier-scaled. Throws domain_error if any
// per-contact infection probability M*R0/d_I reaches 1.
Eigen::VectorXd force_of_infection(const Eigen::MatrixXd& M, double R0, double d_I,
                                   const Eigen::VectorXd& I1, const Eigen::VectorXd& I2, double dt);

// advances state in place, returns new infections by age for the step
Eigen::VectorXd euler_step(EpidemicState& state, const Eigen::VectorXd& lambda, double d_L,
                           double d_I, double dt);

// Initial conditions: total initial infected mass I0 = exp(nu) * sum(N) spread
// over ages by the NGM eigenvector and over E1,E2,I1,I2 by the proportions
// that reproduce growth factor exp(psi*dt) per step in the linearized system.
EpidemicState initial_state(const TransmissionParams& p, const ContactSchedule& schedule);

struct Trajectory {
    Eigen::MatrixXd delta;         // n_steps x A, new infections during each step
    Eigen::MatrixXd susceptibles;  // n_steps x A, S at the end of each step
    double dt;
    int steps_per_day;

    int n_days() const { return static_cast<int>(delta.rows()) / steps_per_day; }
    // day d (1-based) infections aggregated over the day's steps, by age
    Eigen::VectorXd daily_infections(int day) const;
    // S at the end of day d (1-based), by age
    Eigen::VectorXd end_of_day_susceptibles(int day) const;
};

// simulate up to n_steps_limit steps (<= schedule.n_steps(); <=0 means full horizon)
Trajectory simulate_epidemic(const TransmissionParams& p, const ContactSchedule& schedule,
                             int n_steps_limit = 0);

double attack_rate(const Trajectory& traj, const Eigen::VectorXd& populations);
double attack_rate(const TransmissionParams& p, const ContactSchedule& schedule);

}  // namespace epismc
