#include "epismc/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "epismc/stats.hpp"

namespace epismc {

namespace {

constexpr std::uint64_t kCtxInit = 0xA11;
constexpr std::uint64_t kCtxResample = 0xB22;
constexpr std::uint64_t kCtxMove = 0xC33;
constexpr int kMaxTemperSteps = 60;

std::uint64_t day_step_ctx(int day, int step) {
    return static_cast<std::uint64_t>(day) * 64 + static_cast<std::uint64_t>(step);
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out[static_cast<Eigen::Index>(j)] = x[idx[j]];
    return out;
}

void scatter(Eigen::VectorXd& x, const std::vector<int>& idx, const Eigen::VectorXd& v) {
    for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] = v[static_cast<Eigen::Index>(j)];
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& S, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = S(rows[r], cols[c]);
    return out;
}

std::vector<int> complement_of(const std::vector<int>& idx, int dim) {
    std::vector<bool> in(static_cast<std::size_t>(dim), false);
    for (int i : idx) in[static_cast<std::size_t>(i)] = true;
    std::vector<int> out;
    for (int i = 0; i < dim; ++i)
        if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

constexpr double kTwoPi = 6.283185307179586476925287;

}  // namespace

KernelType kernel_from_name(const std::string& name) {
    if (name == "correlated_rw") return KernelType::correlated_rw;
    if (name == "gibbs_block") return KernelType::gibbs_block;
    if (name == "gibbs_componentwise") return KernelType::gibbs_componentwise;
    if (name == "hybrid") return KernelType::hybrid;
    if (name == "hybrid_reduced") return KernelType::hybrid_reduced;
    throw config_error("unknown rejuvenation kernel: " + name);
}

const char* kernel_name(KernelType k) {
    switch (k) {
        case KernelType::correlated_rw: return "correlated_rw";
        case KernelType::gibbs_block: return "gibbs_block";
        case KernelType::gibbs_componentwise: return "gibbs_componentwise";
        case KernelType::hybrid: return "hybrid";
        case KernelType::hybrid_reduced: return "hybrid_reduced";
    }
    return "?";
}

double intraclass_correlation(const std::vector<double>& g, const std::vector<int>& cluster) {
    if (g.size() != cluster.size() || g.empty())
        throw invalid_parameter_error("intraclass_correlation: bad inputs");
    std::map<int, std::vector<double>> by;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::isfinite(g[i])) by[cluster[i]].push_back(g[i]);

    std::vector<const std::vector<double>*> kept;
    for (const auto& [id, vals] : by)
        if (vals.size() >= 2) kept.push_back(&vals);
    const int I = static_cast<int>(kept.size());
    if (I < 2) throw icc_undefined_error("fewer than two clusters of size >= 2");

    double d = 0.0, gsum = 0.0, d2 = 0.0;
    for (const auto* v : kept) {
        d += static_cast<double>(v->size());
        d2 += static_cast<double>(v->size()) * static_cast<double>(v->size());
        for (double x : *v) gsum += x;
    }
    const double gbar = gsum / d;

    double ss_a = 0.0, ss_w = 0.0;
    for (const auto* v : kept) {
        const double di = static_cast<double>(v->size());
        double mi = 0.0;
        for (double x : *v) mi += x;
        mi /= di;
        ss_a += di * (mi - gbar) * (mi - gbar);
        for (double x : *v) ss_w += (x - mi) * (x - mi);
    }
    const double ms_a = ss_a / (I - 1);
    const double ms_w = ss_w / (d - I);
    if (ms_w == 0.0) return 1.0;
    const double d0 = (d - d2 / d) / (I - 1);
    const double bcomp = (ms_a - ms_w) / d0;
    const double r = bcomp / (bcomp + ms_w);
    if (!std::isfinite(r)) throw icc_undefined_error("intraclass correlation not finite");
    return r;
}

double ess_from_log_weights(const Eigen::VectorXd& log_w) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < log_w.size(); ++i) {
        if (std::isnan(log_w[i]) || log_w[i] == std::numeric_limits<double>::infinity())
            throw degenerate_weights_error("log weight nan or +inf");
        m = std::max(m, log_w[i]);
    }
    if (!std::isfinite(m)) throw degenerate_weights_error("all log weights are -inf");
    double s = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < log_w.size(); ++i) {
        const double w = std::exp(log_w[i] - m);
        s += w;
        s2 += w * w;
    }
    return s * s / s2;
}

Eigen::VectorXd normalized_weights(const Eigen::VectorXd& log_w) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < log_w.size(); ++i) m = std::max(m, log_w[i]);
    if (!std::isfinite(m)) throw degenerate_weights_error("all log weights are -inf");
    Eigen::VectorXd w(log_w.size());
    double s = 0.0;
    for (Eigen::Index i = 0; i < log_w.size(); ++i) {
        w[i] = std::exp(log_w[i] - m);
        s += w[i];
    }
    return w / s;
}

std::vector<int> residual_resample(const Eigen::VectorXd& weights, int n_out, RngStream& rng) {
    if (n_out <= 0) throw invalid_parameter_error("residual_resample: n_out must be positive");
    const double wsum = weights.sum();
    if (!(wsum > 0.0)) throw degenerate_weights_error("residual_resample: weights sum to zero");

    const Eigen::Index n = weights.size();
    std::vector<int> parents;
    parents.reserve(static_cast<std::size_t>(n_out));
    std::vector<double> residual(static_cast<std::size_t>(n));
    double rsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scaled = static_cast<double>(n_out) * weights[i] / wsum;
        const double copies = std::floor(scaled);
        for (long c = 0; c < static_cast<long>(copies); ++c) parents.push_back(static_cast<int>(i));
        residual[static_cast<std::size_t>(i)] = scaled - copies;
        rsum += scaled - copies;
    }
    if (static_cast<int>(parents.size()) > n_out) parents.resize(static_cast<std::size_t>(n_out));

    const int remaining = n_out - static_cast<int>(parents.size());
    if (remaining > 0) {
        if (rsum <= 0.0) {
            Eigen::Index imax;
            weights.maxCoeff(&imax);
            for (int j = 0; j < remaining; ++j) parents.push_back(static_cast<int>(imax));
        } else {
            std::vector<double> cum(residual.size());
            std::partial_sum(residual.begin(), residual.end(), cum.begin());
            for (int j = 0; j < remaining; ++j) {
                const double u = rng.uniform() * cum.back();
                const auto it = std::upper_bound(cum.begin(), cum.end(), u);
                const auto at = std::min<std::size_t>(
                    static_cast<std::size_t>(it - cum.begin()), residual.size() - 1);
                parents.push_back(static_cast<int>(at));
            }
        }
    }
    return parents;
}

double solve_next_temperature(const Eigen::VectorXd& log_w0, const Eigen::VectorXd& batch_ll,
                              double delta0, double target_ess) {
    if (delta0 < 0.0 || delta0 >= 1.0)
        throw invalid_parameter_error("solve_next_temperature: delta0 must lie in [0,1)");
    auto ess_at = [&](double d) {
        return ess_from_log_weights(log_w0 + (d - delta0) * batch_ll);
    };
    if (ess_at(1.0) >= target_ess) return 1.0;
    double lo = delta0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e = ess_at(mid);
        if (std::fabs(e - target_ess) <= 0.5) return mid;
        if (e > target_ess)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

SmcEngine::SmcEngine(const LikelihoodModel& model, SmcSettings settings, std::uint64_t seed)
    : model_(model), settings_(std::move(settings)), seed_(seed) {
    if (settings_.particles < 2) throw config_error("need at least two particles");
    if (!(settings_.epsilon_L > 0.0 && settings_.epsilon_L <= 1.0))
        throw config_error("ESS floor fraction must lie in (0,1]");
    if (settings_.mode != "continuous" && settings_.mode != "discrete")
        throw config_error("assimilation mode must be 'continuous' or 'discrete'");
    if (settings_.max_mh_iters < 1) throw config_error("max_mh_iters must be >= 1");
    kernel_from_name(settings_.kernel);  // validate early
}

void SmcEngine::initialize_from_prior() {
    const auto& sp = model_.space();
    const int n = settings_.particles;
    const int d = sp.n_free();
    ps_ = ParticleSet{};
    ps_.u.resize(n, d);
    ps_.log_w = Eigen::VectorXd::Zero(n);
    ps_.log_prior.resize(n);
    ps_.hist_ll = Eigen::VectorXd::Zero(n);
    ps_.batch_ll = Eigen::VectorXd::Zero(n);
    ps_.g.resize(n);
    ps_.parent.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream rng(seed_, kCtxInit, 0, 0, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd u = sp.prior_draw_unconstrained(rng);
        ps_.u.row(i) = u.transpose();
        ps_.log_prior[i] = sp.log_prior_unconstrained(u);
        ps_.parent[static_cast<std::size_t>(i)] = i;
        try {
            ps_.g[i] = model_.attack_rate_of(sp.to_natural(u));
        } catch (const domain_error&) {
            ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
        } catch (const invalid_parameter_error&) {
            ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    ps_.day = 0;
    initialized_ = true;
}

void SmcEngine::initialize_from_sample(const Eigen::MatrixXd& u_free, int day) {
    const auto& sp = model_.space();
    if (u_free.cols() != sp.n_free()) throw config_error("sample dimension mismatch");
    if (u_free.rows() < 2) throw config_error("need at least two particles");
    if (day < 0 || day > model_.n_data_days()) throw config_error("seed day out of data range");
    const int n = static_cast<int>(u_free.rows());
    ps_ = ParticleSet{};
    ps_.u = u_free;
    ps_.log_w = Eigen::VectorXd::Zero(n);
    ps_.log_prior.resize(n);
    ps_.hist_ll.resize(n);
    ps_.batch_ll = Eigen::VectorXd::Zero(n);
    ps_.g.resize(n);
    ps_.parent.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd u = u_free.row(i).transpose();
        const auto ev = model_.evaluate(u, day, 0.0);
        ++full_evals_;
        ps_.log_prior[i] = ev.log_prior;
        ps_.hist_ll[i] = ev.history;
        ps_.parent[static_cast<std::size_t>(i)] = i;
        try {
            ps_.g[i] = model_.attack_rate_of(sp.to_natural(u));
        } catch (const domain_error&) {
            ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
        } catch (const invalid_parameter_error&) {
            ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    ps_.day = day;
    initialized_ = true;
}

void SmcEngine::restore(ParticleSet ps, long full_evals) {
    if (ps.u.cols() != model_.space().n_free()) throw checkpoint_error("particle dimension mismatch");
    if (ps.u.rows() < 2) throw checkpoint_error("restored particle set too small");
    ps_ = std::move(ps);
    full_evals_ = full_evals;
    initialized_ = true;
}

Eigen::MatrixXd SmcEngine::natural_sample() const {
    const auto& sp = model_.space();
    Eigen::MatrixXd out(ps_.size(), sp.layout().dim());
    for (int i = 0; i < ps_.size(); ++i)
        out.row(i) = sp.to_natural(ps_.u.row(i).transpose()).transpose();
    return out;
}

void SmcEngine::refresh_caches_and_batch(DayRecord& rec) {
    const int k = ps_.day;
    for (int i = 0; i < ps_.size(); ++i) {
        const auto ev = model_.evaluate(ps_.u.row(i).transpose(), k, 1.0);
        ++full_evals_;
        ++rec.full_evaluations;
        ps_.log_prior[i] = ev.log_prior;
        ps_.hist_ll[i] = ev.history;
        ps_.batch_ll[i] = ev.batch;
    }
}

void SmcEngine::apply_resample(const std::vector<int>& parents) {
    const int n = ps_.size();
    ParticleSet np;
    np.u.resize(n, ps_.dim());
    np.log_w = Eigen::VectorXd::Zero(n);
    np.log_prior.resize(n);
    np.hist_ll.resize(n);
    np.batch_ll.resize(n);
    np.g.resize(n);
    np.parent = parents;
    np.day = ps_.day;
    for (int j = 0; j < n; ++j) {
        const int p = parents[static_cast<std::size_t>(j)];
        np.u.row(j) = ps_.u.row(p);
        np.log_prior[j] = ps_.log_prior[p];
        np.hist_ll[j] = ps_.hist_ll[p];
        np.batch_ll[j] = ps_.batch_ll[p];
        np.g[j] = ps_.g[p];
    }
    ps_ = std::move(np);
}

MoveKernel::Conditional MoveKernel::make_conditional(const Eigen::VectorXd& mean,
                                                     const Eigen::MatrixXd& cov,
                                                     const std::vector<int>& idx,
                                                     const std::vector<int>& cond,
                                                     double rw_scale) {
    Conditional c;
    c.idx = idx;
    c.cond = cond;
    c.mean_base = gather(mean, idx);
    c.cond_mean = gather(mean, cond);
    Eigen::MatrixXd S;
    if (cond.empty()) {
        S = submatrix(cov, idx, idx);
    } else {
        const Eigen::MatrixXd See = submatrix(cov, cond, cond);
        const Eigen::MatrixXd Seb = submatrix(cov, cond, idx);
        const auto llt = regularized_llt<kernel_degeneracy_error>(
            See, "conditioning covariance not positive definite");
        c.gain = llt.solve(Seb).transpose();  // idx x cond
        S = submatrix(cov, idx, idx) - c.gain * Seb;
        S = 0.5 * (S + S.transpose().eval());
    }
    const auto llt =
        regularized_llt<kernel_degeneracy_error>(S, "kernel covariance not positive definite");
    c.chol = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < c.chol.rows(); ++i) logdet += std::log(c.chol(i, i));
    c.log_norm = -0.5 * static_cast<double>(idx.size()) * std::log(kTwoPi) - logdet;
    if (rw_scale > 0.0) c.chol_rw = c.chol * std::sqrt(rw_scale);
    return c;
}

MoveKernel::MoveKernel(KernelType type, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                       const std::vector<std::vector<int>>& groups,
                       const std::vector<std::string>& group_names, double gamma)
    : type_(type), dim_(static_cast<int>(mean.size())) {
    if (cov.rows() != dim_ || cov.cols() != dim_)
        throw invalid_parameter_error("kernel moment dimensions disagree");
    if (groups.size() != group_names.size())
        throw invalid_parameter_error("kernel group names do not match the groups");
    const double g_full = gamma > 0.0 ? gamma : 2.38 * 2.38 / static_cast<double>(dim_);
    std::vector<int> all(static_cast<std::size_t>(dim_));
    std::iota(all.begin(), all.end(), 0);

    switch (type_) {
        case KernelType::correlated_rw: {
            const auto llt = regularized_llt<kernel_degeneracy_error>(
                cov, "particle covariance not positive definite");
            chol_rw_full_ = Eigen::MatrixXd(llt.matrixL()) * std::sqrt(g_full);
            break;
        }
        case KernelType::gibbs_block: {
            block_ = make_conditional(mean, cov, all, {}, 0.0);
            has_block_ = true;
            break;
        }
        case KernelType::gibbs_componentwise: {
            if (groups.empty()) throw kernel_degeneracy_error("componentwise kernel needs groups");
            for (const auto& grp : groups)
                groups_.push_back(make_conditional(mean, cov, grp, complement_of(grp, dim_), 0.0));
            break;
        }
        case KernelType::hybrid:
        case KernelType::hybrid_reduced: {
            if (groups.empty()) throw kernel_degeneracy_error("hybrid kernel needs groups");
            std::vector<int> block_idx = all;
            std::vector<int> block_cond;
            if (type_ == KernelType::hybrid_reduced) {
                for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                    if (group_names[gi] == "eta") {
                        block_cond = groups[gi];
                        block_idx = complement_of(block_cond, dim_);
                        break;
                    }
                }
            }
            if (block_idx.empty())
                throw kernel_degeneracy_error("reduced block proposal has no coordinates left");
            block_ = make_conditional(mean, cov, block_idx, block_cond, 0.0);
            has_block_ = true;
            for (const auto& grp : groups)
                groups_.push_back(make_conditional(mean, cov, grp, complement_of(grp, dim_),
                                                   2.38 * 2.38 / static_cast<double>(grp.size())));
            break;
        }
    }
}

namespace {
double gauss_logq(const Eigen::MatrixXd& chol_lower, double log_norm, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& mean) {
    const Eigen::VectorXd y = chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
    return log_norm - 0.5 * y.squaredNorm();
}
}  // namespace

MoveKernel::SweepResult MoveKernel::sweep(
    const std::function<double(const Eigen::VectorXd&)>& log_target, Eigen::VectorXd& x,
    double& current_log_target, RngStream& rng,
    const std::function<void(const Eigen::VectorXd&)>& on_accept) const {
    if (x.size() != dim_) throw invalid_parameter_error("kernel state dimension mismatch");
    SweepResult res;

    auto propose = [&](const Eigen::VectorXd& xp, double corr) {
        ++res.proposals;
        const double lt = log_target(xp);
        if (!std::isfinite(lt)) return;  // zero-density proposal: reject without a uniform
        const double log_alpha = lt - current_log_target + corr;
        if (std::log(rng.uniform()) < log_alpha) {
            x = xp;
            current_log_target = lt;
            ++res.accepts;
            if (on_accept) on_accept(x);
        }
    };

    auto independence_move = [&](const Conditional& c) {
        Eigen::VectorXd mean = c.mean_base;
        if (!c.cond.empty()) mean += c.gain * (gather(x, c.cond) - c.cond_mean);
        Eigen::VectorXd z(static_cast<Eigen::Index>(c.idx.size()));
        for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
        const Eigen::VectorXd prop = mean + c.chol.triangularView<Eigen::Lower>() * z;
        Eigen::VectorXd xp = x;
        scatter(xp, c.idx, prop);
        const double corr = gauss_logq(c.chol, c.log_norm, gather(x, c.idx), mean) -
                            gauss_logq(c.chol, c.log_norm, prop, mean);
        propose(xp, corr);
    };

    auto rw_move = [&](const Conditional& c) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(c.idx.size()));
        for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
        const Eigen::VectorXd prop =
            gather(x, c.idx) + c.chol_rw.triangularView<Eigen::Lower>() * z;
        Eigen::VectorXd xp = x;
        scatter(xp, c.idx, prop);
        propose(xp, 0.0);
    };

    switch (type_) {
        case KernelType::correlated_rw: {
            Eigen::VectorXd z(dim_);
            for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
            propose(x + chol_rw_full_.triangularView<Eigen::Lower>() * z, 0.0);
            break;
        }
        case KernelType::gibbs_block:
            independence_move(block_);
            break;
        case KernelType::gibbs_componentwise:
            for (const auto& c : groups_) independence_move(c);
            break;
        case KernelType::hybrid:
        case KernelType::hybrid_reduced:
            independence_move(block_);
            for (const auto& c : groups_) rw_move(c);
            break;
    }
    return res;
}

MoveKernel SmcEngine::plan_kernel(const Eigen::VectorXd& norm_w) const {
    const auto mom = weighted_moments(ps_.u, norm_w);
    return MoveKernel(kernel_from_name(settings_.kernel), mom.mean, mom.cov,
                      model_.space().free_groups(), model_.space().free_group_names(),
                      settings_.gamma);
}

void SmcEngine::rejuvenate(double delta, const MoveKernel& kernel, int step_index,
                           TemperStep& step, DayRecord& rec) {
    const int n = ps_.size();
    const int k = ps_.day;
    long acc_total = 0, prop_total = 0;
    bool converged = false;
    for (int iter = 1; iter <= settings_.max_mh_iters; ++iter) {
        for (int i = 0; i < n; ++i) {
            RngStream rng(seed_, kCtxMove, day_step_ctx(rec.day, step_index),
                          static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(i));
            Eigen::VectorXd x = ps_.u.row(i).transpose();
            double lt = cached_target(i, delta);
            LikelihoodModel::Eval last;
            auto target = [&](const Eigen::VectorXd& xp) {
                last = model_.evaluate(xp, k, delta);
                ++full_evals_;
                ++rec.full_evaluations;
                ++step.full_evaluations;
                return last.target;
            };
            auto commit = [&](const Eigen::VectorXd& xa) {
                ps_.u.row(i) = xa.transpose();
                ps_.log_prior[i] = last.log_prior;
                ps_.hist_ll[i] = last.history;
                ps_.batch_ll[i] = last.batch;
                try {
                    ps_.g[i] = model_.attack_rate_of(model_.space().to_natural(xa));
                } catch (const domain_error&) {
                    ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
                } catch (const invalid_parameter_error&) {
                    ps_.g[i] = std::numeric_limits<double>::quiet_NaN();
                }
                ++rec.summary_simulations;
            };
            const auto sr = kernel.sweep(target, x, lt, rng, commit);
            acc_total += sr.accepts;
            prop_total += sr.proposals;
        }
        step.mh_iterations = iter;
        std::vector<double> gv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) gv[static_cast<std::size_t>(i)] = ps_.g[i];
        try {
            step.icc = intraclass_correlation(gv, ps_.parent);
            if (step.icc <= settings_.r_A_star) converged = true;
        } catch (const icc_undefined_error&) {
            // not enough usable clusters yet; keep sweeping
        }
        if (converged) break;
    }
    step.icc_converged = converged;
    if (!converged)
        rec.warnings.push_back("day " + std::to_string(rec.day) +
                               ": rejuvenation stopped at the sweep cap before the mixing "
                               "target; sample may carry stale ancestry");
    step.accept_rate = prop_total > 0
                           ? static_cast<double>(acc_total) / static_cast<double>(prop_total)
                           : std::numeric_limits<double>::quiet_NaN();
}

DayRecord SmcEngine::assimilate_next_day() {
    if (!initialized_) throw config_error("particle engine not initialized");
    const auto t0 = std::chrono::steady_clock::now();
    const int k = ps_.day;
    const int day = k + 1;
    if (day > model_.n_data_days()) throw config_error("no surveillance left to assimilate");

    DayRecord rec;
    rec.day = day;
    refresh_caches_and_batch(rec);

    const int n = ps_.size();
    const double target = settings_.epsilon_L * static_cast<double>(n);

    Eigen::VectorXd base_lw = ps_.log_w;
    double ess_direct;
    try {
        ess_direct = ess_from_log_weights(base_lw + ps_.batch_ll);
    } catch (const degenerate_weights_error&) {
        throw degenerate_weights_error("all particles have zero weight entering day " +
                                       std::to_string(day));
    }
    rec.ess_full = ess_direct;
    {
        std::vector<double> pre(static_cast<std::size_t>(n)), post(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            pre[static_cast<std::size_t>(i)] = base_lw[i];
            post[static_cast<std::size_t>(i)] = base_lw[i] + ps_.batch_ll[i];
        }
        rec.log_predictive = logsumexp(post) - logsumexp(pre);
    }

    if (settings_.mode == "discrete") {
        TemperStep st;
        st.delta = 1.0;
        st.ess = ess_direct;
        if (ess_direct < target) {
            const Eigen::VectorXd lw = base_lw + ps_.batch_ll;
            const Eigen::VectorXd w = normalized_weights(lw);
            const auto plan = plan_kernel(w);
            RngStream rs(seed_, kCtxResample, day_step_ctx(day, 0), 0, 0);
            apply_resample(residual_resample(w, n, rs));
            st.resampled = true;
            rejuvenate(1.0, plan, 0, st, rec);
        } else {
            ps_.log_w = base_lw + ps_.batch_ll;
        }
        rec.steps.push_back(st);
    } else {
        double delta = 0.0;
        int step_index = 0;
        for (;;) {
            const Eigen::VectorXd jump = base_lw + (1.0 - delta) * ps_.batch_ll;
            const double ess_jump = step_index == 0 ? ess_direct : ess_from_log_weights(jump);
            if (ess_jump >= target) {
                ps_.log_w = jump;
                TemperStep st;
                st.delta = 1.0;
                st.ess = ess_jump;
                rec.steps.push_back(st);
                break;
            }
            if (step_index >= kMaxTemperSteps) {
                rec.warnings.push_back("day " + std::to_string(day) +
                                       ": tempering step cap reached, forcing the final exponent");
                ps_.log_w = jump;
                TemperStep st;
                st.delta = 1.0;
                st.ess = ess_jump;
                rec.steps.push_back(st);
                break;
            }
            double dstar = solve_next_temperature(base_lw, ps_.batch_ll, delta, target);
            if (dstar > 1.0 - 1e-10) dstar = 1.0;
            const Eigen::VectorXd lw = base_lw + (dstar - delta) * ps_.batch_ll;
            TemperStep st;
            st.delta = dstar;
            st.ess = ess_from_log_weights(lw);
            st.resampled = true;
            const Eigen::VectorXd w = normalized_weights(lw);
            const auto plan = plan_kernel(w);  // moments of the pre-resample weighted set
            RngStream rs(seed_, kCtxResample, day_step_ctx(day, step_index), 0, 0);
            apply_resample(residual_resample(w, n, rs));
            rejuvenate(dstar, plan, step_index, st, rec);
            rec.steps.push_back(st);
            delta = dstar;
            base_lw = Eigen::VectorXd::Zero(n);
            ++step_index;
            if (delta >= 1.0) break;
        }
    }

    ps_.day = day;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history_.push_back(rec);
    return rec;
}

void SmcEngine::run_to_day(int day) {
    if (day > model_.n_data_days()) throw config_error("requested day beyond the data");
    while (ps_.day < day) assimilate_next_day();
}

}  // namespace epismc
