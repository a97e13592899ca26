#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "epismc/config.hpp"
#include "epismc/likelihood.hpp"
#include "epismc/rng.hpp"

namespace epismc {

// Resample-move particle filter over a static parameter vector, assimilating
// surveillance one day at a time. Each day the weights pick up the new day's
// likelihood; if the effective sample size survives, that is the whole update.
// Otherwise the day enters through a bridge of tempered targets
//   pi_{k,delta} ∝ prior * L(y_{1:k}) * L(y_{k+1})^delta,
// each reached by an adaptive reweight / residual-resample / MH-rejuvenate
// cycle ("continuous" mode). "discrete" mode skips the bridge and always jumps
// straight to delta = 1, resampling and moving only when the ESS floor is hit.
// Rejuvenation sweeps repeat until the intraclass correlation of an epidemic
// summary across resampling clusters falls below a threshold, so the particle
// population forgets its ancestry before the next day arrives.

enum class KernelType {
    correlated_rw,        // full-vector random walk, covariance-shaped
    gibbs_block,          // independence proposal from the moment-matched Gaussian
    gibbs_componentwise,  // per-group draws from exact Gaussian conditionals
    hybrid,               // one block draw + covariance-shaped per-group random walks
    hybrid_reduced        // as hybrid, but dispersions left out of the block draw
};

KernelType kernel_from_name(const std::string& name);
const char* kernel_name(KernelType k);

// ANOVA intraclass correlation with unequal cluster sizes:
//   r_A = B / (B + MS_w),  B = (MS_a - MS_w) / d_0,
// d_0 the Donner-Koval average cluster size. Singleton clusters are dropped;
// fewer than two usable clusters throws icc_undefined_error. MS_w == 0 (no
// within-cluster variation at all) returns 1.
double intraclass_correlation(const std::vector<double>& g, const std::vector<int>& cluster);

double ess_from_log_weights(const Eigen::VectorXd& log_w);
Eigen::VectorXd normalized_weights(const Eigen::VectorXd& log_w);

// floor(n*w) deterministic copies per particle, remainder multinomial on the
// fractional parts; returns ancestor indices (deterministic copies first)
std::vector<int> residual_resample(const Eigen::VectorXd& weights, int n_out, RngStream& rng);

// smallest exponent step whose reweighted ESS meets the target: bisection for
// ESS(log_w0 + (delta - delta0) * batch_ll) = target_ess within +-0.5 on
// (delta0, 1]; returns 1 outright if the full step already satisfies it
double solve_next_temperature(const Eigen::VectorXd& log_w0, const Eigen::VectorXd& batch_ll,
                              double delta0, double target_ess);

// One rejuvenation kernel, built from a Gaussian summary (mean, cov) of the
// population being moved plus the parameter grouping. Standalone so the same
// proposal machinery can drive both the particle engine and a plain MCMC
// chain against an arbitrary log-target.
//   correlated_rw        one full-vector RW step, covariance gamma*cov
//                        (gamma <= 0 picks the 2.38^2/dim default)
//   gibbs_block          one independence draw from N(mean, cov)
//   gibbs_componentwise  per-group draws from the exact Gaussian conditionals
//   hybrid               block draw, then per-group RW steps scaled by
//                        2.38^2/|group| on the conditional covariance
//   hybrid_reduced       as hybrid with the "eta" group left out of the block
//                        (falls back to the full block if no eta group exists
//                        among group_names)
class MoveKernel {
  public:
    MoveKernel(KernelType type, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
               const std::vector<std::vector<int>>& groups,
               const std::vector<std::string>& group_names, double gamma = 0.0);

    struct SweepResult {
        int proposals = 0;
        int accepts = 0;
    };

    // One full kernel sweep starting from x. Proposals are scored through
    // log_target (must return -inf, not throw, on zero-density points);
    // accepted moves are written into x / current_log_target before the next
    // proposal of the sweep, and on_accept (if given) fires after each
    // write-back so a caller can mirror per-particle caches.
    SweepResult sweep(const std::function<double(const Eigen::VectorXd&)>& log_target,
                      Eigen::VectorXd& x, double& current_log_target, RngStream& rng,
                      const std::function<void(const Eigen::VectorXd&)>& on_accept = {}) const;

    KernelType type() const { return type_; }
    int dim() const { return dim_; }

  private:
    struct Conditional {
        std::vector<int> idx;       // proposed coordinates
        std::vector<int> cond;      // conditioning coordinates
        Eigen::VectorXd mean_base;  // kernel mean over idx
        Eigen::VectorXd cond_mean;  // kernel mean over cond
        Eigen::MatrixXd gain;       // idx x cond regression onto conditioners
        Eigen::MatrixXd chol;       // lower Cholesky of the conditional covariance
        Eigen::MatrixXd chol_rw;    // same, scaled for random-walk steps
        double log_norm = 0.0;      // Gaussian log normalizer for density evaluation
    };
    static Conditional make_conditional(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                        const std::vector<int>& idx, const std::vector<int>& cond,
                                        double rw_scale);

    KernelType type_;
    int dim_ = 0;
    Eigen::MatrixXd chol_rw_full_;
    Conditional block_;
    std::vector<Conditional> groups_;
    bool has_block_ = false;
};

struct ParticleSet {
    Eigen::MatrixXd u;       // n x dim, unconstrained free coordinates
    Eigen::VectorXd log_w;   // unnormalized log weights
    Eigen::VectorXd log_prior;
    Eigen::VectorXd hist_ll;   // log L(y_{1:day}) at each particle
    Eigen::VectorXd batch_ll;  // log L(y_{day+1}), refreshed at each day's entry
    Eigen::VectorXd g;         // mixing summary (full-horizon attack rate)
    std::vector<int> parent;   // ancestor indices from the most recent resample
    int day = 0;               // fully assimilated days

    int size() const { return static_cast<int>(u.rows()); }
    int dim() const { return static_cast<int>(u.cols()); }
};

struct TemperStep {
    double delta = 1.0;   // exponent reached by this step
    double ess = 0.0;     // ESS right after reweighting to delta, before resampling
    bool resampled = false;
    int mh_iterations = 0;
    double icc = std::numeric_limits<double>::quiet_NaN();  // last intraclass correlation
    bool icc_converged = false;
    double accept_rate = std::numeric_limits<double>::quiet_NaN();
    long full_evaluations = 0;  // likelihood evaluations spent on this step's moves
};

struct DayRecord {
    int day = 0;            // day assimilated by this call
    double ess_full = 0.0;  // ESS of the direct full-weight attempt
    // one-step-ahead log predictive density of the day's batch,
    // log sum(w * L_batch) - log sum(w), from the entry weights
    double log_predictive = 0.0;
    std::vector<TemperStep> steps;
    long full_evaluations = 0;  // all likelihood evaluations charged to this day
    long summary_simulations = 0;  // attack-rate runs for the mixing diagnostic
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
};

class SmcEngine {
  public:
    SmcEngine(const LikelihoodModel& model, SmcSettings settings, std::uint64_t seed);

    void initialize_from_prior();
    // seed the filter at a later day from an existing (equal-weight) sample on
    // the unconstrained free scale, e.g. a reference-sampler draw
    void initialize_from_sample(const Eigen::MatrixXd& u_free, int day);

    DayRecord assimilate_next_day();
    void run_to_day(int day);

    const ParticleSet& particles() const { return ps_; }
    const std::vector<DayRecord>& history() const { return history_; }
    const LikelihoodModel& model() const { return model_; }
    const SmcSettings& settings() const { return settings_; }
    std::uint64_t seed() const { return seed_; }
    long full_eval_count() const { return full_evals_; }

    Eigen::VectorXd weights() const { return normalized_weights(ps_.log_w); }
    Eigen::MatrixXd natural_sample() const;  // n x full layout dim

    // checkpoint support: swap in previously saved state
    void restore(ParticleSet ps, long full_evals);

  private:
    MoveKernel plan_kernel(const Eigen::VectorXd& norm_w) const;
    void refresh_caches_and_batch(DayRecord& rec);
    void apply_resample(const std::vector<int>& parents);
    void rejuvenate(double delta, const MoveKernel& kernel, int step_index, TemperStep& step,
                    DayRecord& rec);
    double cached_target(int i, double delta) const {
        return ps_.log_prior[i] + ps_.hist_ll[i] + delta * ps_.batch_ll[i];
    }

    const LikelihoodModel& model_;
    SmcSettings settings_;
    std::uint64_t seed_;
    ParticleSet ps_;
    std::vector<DayRecord> history_;
    long full_evals_ = 0;
    bool initialized_ = false;
};

}  // namespace epismc
