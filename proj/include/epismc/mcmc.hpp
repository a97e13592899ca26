#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "epismc/config.hpp"
#include "epismc/likelihood.hpp"

namespace epismc {

// Adaptive random-walk Metropolis on the unconstrained scale, used as the
// ground-truth posterior sampler the particle engine is judged against.
// Proposal covariance follows the running sample covariance (Haario-style)
// with a floor proportional to the prior scales, and the global step scale
// follows a Robbins-Monro recursion toward the target acceptance rate. Both
// keep adapting over the whole chain with diminishing gain, which preserves
// the stationary law.
struct McmcResult {
    Eigen::MatrixXd sample_u;  // kept draws, one per row, unconstrained free scale
    double accept_rate = 0.0;
    long iterations = 0;
    long full_evaluations = 0;
    double final_scale = 0.0;
};

McmcResult run_adaptive_mcmc(const LikelihoodModel& model, int day, const McmcSettings& settings,
                             std::uint64_t seed);

// map unconstrained free rows to full natural-scale rows
Eigen::MatrixXd to_natural_rows(const ParameterSpace& space, const Eigen::MatrixXd& u_rows);

}  // namespace epismc
