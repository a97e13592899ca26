#include "epismc/mcmc.hpp"

#include <cmath>

#include "epismc/rng.hpp"
#include "epismc/stats.hpp"

namespace epismc {

Eigen::MatrixXd to_natural_rows(const ParameterSpace& space, const Eigen::MatrixXd& u_rows) {
    Eigen::MatrixXd out(u_rows.rows(), space.layout().dim());
    for (Eigen::Index i = 0; i < u_rows.rows(); ++i)
        out.row(i) = space.to_natural(u_rows.row(i).transpose()).transpose();
    return out;
}

McmcResult run_adaptive_mcmc(const LikelihoodModel& model, int day, const McmcSettings& settings,
                             std::uint64_t seed) {
    if (settings.iterations < 10) throw config_error("chain too short");
    if (settings.thin < 1) throw config_error("thinning interval must be >= 1");
    const auto& sp = model.space();
    const int d = sp.n_free();
    const long burn = settings.burn_in > 0 ? settings.burn_in : settings.iterations / 5;
    if (burn >= settings.iterations) throw config_error("burn-in swallows the whole chain");

    RngStream rng(seed, 0x3C3C, static_cast<std::uint64_t>(day), 0, 0);
    McmcResult out;
    out.iterations = settings.iterations;

    // start from a prior draw with positive posterior density
    Eigen::VectorXd u;
    double cur = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 100 && !std::isfinite(cur); ++attempt) {
        u = sp.prior_draw_unconstrained(rng);
        cur = model.evaluate(u, day, 0.0).target;
        ++out.full_evaluations;
    }
    if (!std::isfinite(cur)) {
        u = sp.prior_median_unconstrained();
        cur = model.evaluate(u, day, 0.0).target;
        ++out.full_evaluations;
        if (!std::isfinite(cur)) throw config_error("no usable chain start found");
    }

    // adaptation state; proposal shape starts from the prior scales so that
    // coordinates whose unconstrained priors differ by orders of magnitude
    // (the dispersions especially) mix from the first iteration
    Eigen::VectorXd base_sd(d);
    for (int j = 0; j < d; ++j)
        base_sd[j] = std::min(sp.prior(sp.free_indices()[static_cast<std::size_t>(j)])
                                  .unconstrained_sd(),
                              5.0);
    Eigen::VectorXd mean = u;
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd chol = Eigen::MatrixXd(base_sd.asDiagonal());
    double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));

    const long n_keep = (settings.iterations - burn) / settings.thin;
    out.sample_u.resize(n_keep, d);
    long kept = 0, accepted = 0;

    for (long iter = 1; iter <= settings.iterations; ++iter) {
        Eigen::VectorXd z(d);
        for (int j = 0; j < d; ++j) z[j] = rng.normal();
        const Eigen::VectorXd step = chol.triangularView<Eigen::Lower>() * z;
        const Eigen::VectorXd up = u + std::exp(log_scale) * step;
        const auto ev = model.evaluate(up, day, 0.0);
        ++out.full_evaluations;

        const double la = ev.target - cur;
        const double alpha = std::isfinite(ev.target) ? std::min(1.0, std::exp(std::min(0.0, la))) : 0.0;
        if (std::isfinite(ev.target) && std::log(rng.uniform()) < la) {
            u = up;
            cur = ev.target;
            ++accepted;
        }

        // diminishing adaptation runs for the whole chain: Robbins-Monro on the
        // global scale, empirical covariance for the shape. The shape always
        // keeps a 10%-of-prior-scale diagonal floor, so a stuck early phase
        // cannot collapse the proposal onto a degenerate subspace.
        log_scale += std::pow(static_cast<double>(iter), -0.6) * (alpha - settings.target_accept);
        const Eigen::VectorXd dm = u - mean;
        mean += dm / static_cast<double>(iter + 1);
        m2 += dm * (u - mean).transpose();
        if (iter % 25 == 0 && iter > 2 * d) {
            Eigen::MatrixXd cov = (m2 + m2.transpose()) * 0.5 / static_cast<double>(iter);
            cov += 0.01 * Eigen::MatrixXd(base_sd.cwiseProduct(base_sd).asDiagonal());
            try {
                chol = regularized_llt<kernel_degeneracy_error>(cov, "proposal covariance")
                           .matrixL();
            } catch (const kernel_degeneracy_error&) {
                // keep the previous shape until the sample fills out
            }
        }
        if (iter > burn && (iter - burn) % settings.thin == 0 && kept < n_keep)
            out.sample_u.row(kept++) = u.transpose();
    }
    out.sample_u.conservativeResize(kept, d);
    out.accept_rate = static_cast<double>(accepted) / static_cast<double>(settings.iterations);
    out.final_scale = std::exp(log_scale);
    return out;
}

}  // namespace epismc
