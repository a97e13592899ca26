// End-to-end acceptance harness. Runs one numbered criterion per invocation,
// prints the supporting evidence plus a single verdict line
//   ACCEPTANCE <n> <label>: PASS|FAIL
// and exits 0/1. Usage: acceptance <criterion 1..8> <configs_dir> <work_dir>.
// Criteria 4, 5 and 7 share one reduced-scenario dataset (fixed seeds below);
// criterion 4 leaves a day-83 particle snapshot in work_dir that criterion 5
// reuses (and rebuilds if missing, so each criterion also runs standalone).

#include <boost/math/distributions/negative_binomial.hpp>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epismc/checkpoint.hpp"
#include "epismc/config.hpp"
#include "epismc/diagnostics.hpp"
#include "epismc/hash.hpp"
#include "epismc/likelihood.hpp"
#include "epismc/mcmc.hpp"
#include "epismc/model.hpp"
#include "epismc/pipeline.hpp"
#include "epismc/rng.hpp"
#include "epismc/simulate.hpp"
#include "epismc/smc.hpp"

using namespace epismc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDataSeed = 73001;        // reduced-scenario surveillance
constexpr std::uint64_t kSmcSeed = 73002;         // n=10,000 filter (criteria 4, 5)
constexpr std::uint64_t kRefSeed = 73003;         // reference chain
constexpr std::uint64_t kRepSeedBase = 73100;     // + r, replicate chains
constexpr std::uint64_t kEffSmcSeed = 73500;      // n=2,000 filter (criterion 7)
constexpr std::uint64_t kPolicySeedBase = 73600;  // + day, daily-rerun chains
constexpr std::uint64_t kKernelSeedBase = 73700;  // + kernel index
constexpr std::uint64_t kCalSeedBase = 74000;     // + replicate, calibration data
constexpr std::uint64_t kPipelineSeed = 424242;

template <class... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return std::string(buf);
}

struct Gate {
    bool ok = true;
    void expect(bool cond, const std::string& what) {
        std::printf("  %s %s\n", cond ? "[ok]  " : "[FAIL]", what.c_str());
        std::fflush(stdout);
        ok = ok && cond;
    }
};

void note(const std::string& what) {
    std::printf("  ....  %s\n", what.c_str());
    std::fflush(stdout);
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

AppConfig reduced_config(const std::string& configs_dir) {
    return AppConfig::load(configs_dir + "/scenario_reduced.json");
}

LikelihoodModel reduced_model(const AppConfig& cfg) {
    return LikelihoodModel(cfg.model, cfg.observation, cfg.make_space(cfg.scenario),
                           simulate_dataset(cfg, kDataSeed), cfg.scenario);
}

std::string day83_path(const std::string& work) { return work + "/reduced_day83.ckpt"; }

// least-squares slope of y against x
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// batch-means standard error of the mean of a correlated series
double bm_se(const std::vector<double>& v, int n_batches) {
    const int b = static_cast<int>(v.size()) / n_batches;
    std::vector<double> bm(static_cast<std::size_t>(n_batches));
    for (int j = 0; j < n_batches; ++j) {
        double s = 0;
        for (int i = 0; i < b; ++i) s += v[static_cast<std::size_t>(j * b + i)];
        bm[static_cast<std::size_t>(j)] = s / b;
    }
    return std::sqrt(var_of(bm) / n_batches);
}

// ---------------------------------------------------------------------------
// 1. closed-form oracles

bool criterion_1(const std::string&, const std::string&) {
    Gate g;
    const double inf = std::numeric_limits<double>::infinity();

    // ESS against (sum w)^2 / sum w^2 by hand
    Eigen::VectorXd lw(3);
    lw << std::log(1.0), std::log(1.0), std::log(2.0);
    g.expect(std::abs(ess_from_log_weights(lw) - 16.0 / 6.0) < 1e-12,
             fmt("ESS of weights (1,1,2): %.15f vs 16/6", ess_from_log_weights(lw)));
    g.expect(std::abs(ess_from_log_weights(lw.array() + 7.0) - 16.0 / 6.0) < 1e-12,
             "ESS is invariant to a constant log-weight shift");
    g.expect(std::abs(ess_from_log_weights(Eigen::VectorXd::Zero(5)) - 5.0) < 1e-12,
             "ESS of 5 uniform weights is 5");

    // residual resampling: integral n*w is fully deterministic, copies in order
    RngStream rr(1);
    Eigen::VectorXd w1(3), w2(3), w3(3);
    w1 << 0.5, 0.25, 0.25;
    w2 << 0.0, 0.5, 0.5;
    w3 << 2.0, 1.0, 1.0;
    g.expect(residual_resample(w1, 4, rr) == std::vector<int>({0, 0, 1, 2}),
             "residual resample (.5,.25,.25) x4 copies {0,0,1,2}");
    g.expect(residual_resample(w2, 6, rr) == std::vector<int>({1, 1, 1, 2, 2, 2}),
             "residual resample (0,.5,.5) x6 copies {1,1,1,2,2,2}");
    g.expect(residual_resample(w3, 4, rr) == std::vector<int>({0, 0, 1, 2}),
             "unnormalized weights scale out of the floor counts");

    // negative binomial parameterized by mean mu and excess-variance eta:
    // Var = mu(eta+1), i.e. r = mu/eta and success probability 1/(1+eta)
    {
        const double mu = 6.5, eta = 1.8;
        const auto f = DiscretePredictive::negbin_mixture(
            Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, eta),
            Eigen::VectorXd::Constant(1, 1.0));
        const boost::math::negative_binomial ref(mu / eta, 1.0 / (1.0 + eta));
        // the grid pmf is renormalized over its truncated support, so compare
        // ratios (normalization cancels) tightly and absolute values at 1e-6
        double worst_ratio = 0.0, worst_abs = 0.0;
        for (long k : {1L, 3L, 9L, 27L}) {
            const double mine = f.pmf()[static_cast<std::size_t>(k)];
            const double theirs = boost::math::pdf(ref, static_cast<double>(k));
            const double r0 = f.pmf()[0] / boost::math::pdf(ref, 0.0);
            worst_ratio = std::max(worst_ratio, std::abs(mine / theirs / r0 - 1.0));
            worst_abs = std::max(worst_abs, std::abs(mine - theirs) / theirs);
        }
        g.expect(worst_ratio < 1e-10 && worst_abs < 1e-6,
                 fmt("negbin pmf vs boost at k in {1,3,9,27}: ratio err %.2e, abs rel err %.2e",
                     worst_ratio, worst_abs));
        g.expect(std::abs(f.mean() - mu) / mu < 1e-6,
                 fmt("negbin grid mean %.9f vs mu %.1f", f.mean(), mu));
        double m2 = 0.0;
        for (std::size_t k = 0; k < f.pmf().size(); ++k)
            m2 += static_cast<double>(k) * static_cast<double>(k) * f.pmf()[k];
        const double var = m2 - f.mean() * f.mean();
        g.expect(std::abs(var - mu * (eta + 1.0)) / (mu * (eta + 1.0)) < 1e-6,
                 fmt("negbin grid variance %.9f vs mu(eta+1) = %.2f", var, mu * (eta + 1.0)));
    }

    // Gaussian conditional used by the componentwise kernel, recovered exactly
    // from two proposals via a mirrored random stream (the kernel consumes one
    // standard normal per scalar proposal and no uniform on zero-density moves)
    {
        Eigen::VectorXd m(2);
        m << 0.4, -1.1;
        Eigen::MatrixXd S(2, 2);
        S << 0.9, 0.35, 0.35, 0.6;
        const MoveKernel kern(KernelType::gibbs_componentwise, m, S, {{0}, {1}}, {"a", "b"});
        Eigen::VectorXd x(2);
        x << 1.3, 0.2;
        std::vector<Eigen::VectorXd> props;
        auto reject_all = [&](const Eigen::VectorXd& xp) {
            props.push_back(xp);
            return -inf;
        };
        RngStream kr(91), mirror(91);
        double lt = -1.0;
        kern.sweep(reject_all, x, lt, kr);
        kern.sweep(reject_all, x, lt, kr);
        g.expect(props.size() == 4 && props[0][1] == x[1] && props[1][0] == x[0],
                 "componentwise sweep proposes each coordinate block alone");
        const double z0a = mirror.normal(), z1a = mirror.normal();
        const double z0b = mirror.normal(), z1b = mirror.normal();
        const double sd0 = (props[0][0] - props[2][0]) / (z0a - z0b);
        const double cm0 = props[0][0] - sd0 * z0a;
        const double sd1 = (props[1][1] - props[3][1]) / (z1a - z1b);
        const double cm1 = props[1][1] - sd1 * z1a;
        // the kernel builder ridges covariances by ~1e-8 of the leading
        // diagonal before factorizing, so agreement is to 1e-6, not machine
        const double cm0_ref = m[0] + S(0, 1) / S(1, 1) * (x[1] - m[1]);
        const double sd0_ref = std::sqrt(S(0, 0) - S(0, 1) * S(0, 1) / S(1, 1));
        const double cm1_ref = m[1] + S(0, 1) / S(0, 0) * (x[0] - m[0]);
        const double sd1_ref = std::sqrt(S(1, 1) - S(0, 1) * S(0, 1) / S(0, 0));
        g.expect(std::abs(cm0 - cm0_ref) < 1e-6 && std::abs(sd0 - sd0_ref) < 1e-6,
                 fmt("conditional of coord 0: mean %.12f sd %.12f vs closed form %.12f %.12f",
                     cm0, sd0, cm0_ref, sd0_ref));
        g.expect(std::abs(cm1 - cm1_ref) < 1e-6 && std::abs(sd1 - sd1_ref) < 1e-6,
                 fmt("conditional of coord 1: mean %.12f sd %.12f vs closed form %.12f %.12f",
                     cm1, sd1, cm1_ref, sd1_ref));
    }

    // Gaussian KL closed forms
    {
        GaussianSummary a, b;
        a.mean = Eigen::VectorXd::Constant(1, 0.3);
        a.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
        b.mean = Eigen::VectorXd::Constant(1, -0.4);
        b.cov = Eigen::MatrixXd::Constant(1, 1, 2.0);
        const double want1 = 0.5 * (std::log(2.0) + (1.0 + 0.49) / 2.0 - 1.0);
        g.expect(std::abs(gaussian_kl(a, b) - want1) < 1e-6,
                 fmt("1-d KL %.9f vs closed form %.9f", gaussian_kl(a, b), want1));

        GaussianSummary c, d;
        c.mean = Eigen::VectorXd::Zero(2);
        d.mean = Eigen::VectorXd::Zero(2);
        c.cov = Eigen::Vector2d(1.0, 2.0).asDiagonal();
        d.cov = Eigen::Vector2d(2.0, 1.0).asDiagonal();
        const double want2 = 0.5 * (std::log(2.0) + std::log(0.5) + 0.5 + 2.0 - 2.0);
        g.expect(std::abs(gaussian_kl(c, d) - want2) < 1e-6,
                 fmt("2-d diagonal KL %.9f vs closed form %.9f", gaussian_kl(c, d), want2));
    }

    // ranked probability score of a point mass at 7 is |7 - y|
    {
        const auto pm = DiscretePredictive::binomial_mixture(
            7, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0));
        bool all = true;
        for (long y : {0L, 3L, 7L, 12L})
            all = all && std::abs(pm.rps(y) - std::abs(7.0 - static_cast<double>(y))) < 1e-12;
        g.expect(all, "point-mass RPS equals |7 - y| at y in {0,3,7,12}");
        g.expect(std::abs(pm.rps_null_mean()) < 1e-12 && std::abs(pm.rps_null_var()) < 1e-12,
                 "point-mass RPS null moments are zero");
    }
    return g.ok;
}

// ---------------------------------------------------------------------------
// 2. transmission validity: conservation and early growth

bool criterion_2(const std::string&, const std::string&) {
    Gate g;
    Eigen::VectorXd pops(3);
    pops << 10340000.0, 21890000.0, 22770000.0;
    Eigen::MatrixXd contacts(3, 3);
    contacts << 7.774468, 3.731915, 1.517021,  //
        2.054020, 6.751759, 2.385427,          //
        0.948406, 2.728986, 3.737681;
    const double dt = 0.5;
    const int n_steps = 490;  // 245 days
    const ContactSchedule sched(contacts, pops, {{0, n_steps, 0}}, dt, n_steps, 1.0);

    const std::vector<std::pair<double, std::pair<int, int>>> cases = {
        {0.05, {15, 70}}, {0.133, {12, 45}}, {0.25, {10, 30}}};

    for (const auto& [psi, window] : cases) {
        TransmissionParams p;
        p.psi = psi;
        p.nu = -13.9;
        p.d_I = 3.47;
        p.d_L = 2.0;
        p.m = Eigen::VectorXd::Ones(1);

        // drive the public stepping functions directly so every compartment is
        // visible, mirroring the trajectory runner's integration exactly
        const double R0 = r0_from_growth_rate(discrete_equivalent_rate(p.psi, dt), p.d_L, p.d_I);
        EpidemicState st = initial_state(p, sched);
        double worst = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            const Eigen::MatrixXd M = sched.contact_matrix_at(k, p.m);
            const Eigen::VectorXd lam = force_of_infection(M, R0, p.d_I, st.I1, st.I2, dt);
            euler_step(st, lam, p.d_L, p.d_I, dt);
            for (int a = 0; a < 3; ++a) {
                const double tot =
                    st.S[a] + st.E1[a] + st.E2[a] + st.I1[a] + st.I2[a] + st.R[a];
                worst = std::max(worst, std::abs(tot - pops[a]) / pops[a]);
            }
        }
        g.expect(worst <= 1e-9,
                 fmt("psi=%.3f: per-age conservation over %d steps, worst rel err %.2e", psi,
                     n_steps, worst));

        // early-phase exponential growth read back off daily new infections
        const Trajectory traj = simulate_epidemic(p, sched);
        std::vector<double> xs, ys;
        for (int d = window.first; d <= window.second; ++d) {
            xs.push_back(static_cast<double>(d));
            ys.push_back(std::log(traj.daily_infections(d).sum()));
        }
        const double slope = ols_slope(xs, ys);
        g.expect(std::abs(slope - psi) <= 0.02 * psi,
                 fmt("psi=%.3f: fitted growth %.5f over days [%d,%d], off by %.2f%%", psi, slope,
                     window.first, window.second, 100.0 * std::abs(slope - psi) / psi));
    }
    return g.ok;
}

// ---------------------------------------------------------------------------
// 3. kernel stationarity on a known 3-d Gaussian

bool criterion_3(const std::string&, const std::string&) {
    Gate g;
    Eigen::VectorXd m(3);
    m << 1.0, -2.0, 0.5;
    Eigen::MatrixXd S(3, 3);
    S << 1.0, 0.3, 0.1,  //
        0.3, 0.5, -0.1,  //
        0.1, -0.1, 0.8;
    const Eigen::MatrixXd L = S.llt().matrixL();
    auto log_target = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(x - m);
        return -0.5 * y.squaredNorm();
    };

    // kernel moments deliberately offset from the target's, so a missing
    // acceptance correction cannot hide behind a perfectly matched proposal
    const Eigen::VectorXd km = m + Eigen::Vector3d(0.2, -0.1, 0.1);
    const Eigen::MatrixXd kS = 1.2 * S;
    const std::vector<std::vector<int>> groups = {{0}, {1, 2}};
    const std::vector<std::string> names = {"a", "eta"};

    const KernelType kinds[] = {KernelType::correlated_rw, KernelType::gibbs_block,
                                KernelType::gibbs_componentwise, KernelType::hybrid,
                                KernelType::hybrid_reduced};
    const int total = 100000, burn = total / 10, kept = total - burn;

    for (int ki = 0; ki < 5; ++ki) {
        const MoveKernel kern(kinds[ki], km, kS, groups, names);
        RngStream rng(kKernelSeedBase + static_cast<std::uint64_t>(ki));
        Eigen::VectorXd x = m;
        double lt = log_target(x);
        long props = 0, accs = 0;
        std::vector<std::vector<double>> chain(3);
        for (auto& c : chain) c.reserve(static_cast<std::size_t>(kept));
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
        Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(3, 3);
        for (int it = 0; it < total; ++it) {
            const auto r = kern.sweep(log_target, x, lt, rng);
            props += r.proposals;
            accs += r.accepts;
            if (it < burn) continue;
            for (int j = 0; j < 3; ++j) chain[static_cast<std::size_t>(j)].push_back(x[j]);
            sum += x;
            sum2 += x * x.transpose();
        }
        const Eigen::VectorXd mhat = sum / kept;
        const Eigen::MatrixXd Shat = sum2 / kept - mhat * mhat.transpose();
        const double arate = static_cast<double>(accs) / static_cast<double>(props);

        bool mean_ok = true;
        double worst_mean_z = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double se = bm_se(chain[static_cast<std::size_t>(j)], 90);
            const double z = std::abs(mhat[j] - m[j]) / se;
            worst_mean_z = std::max(worst_mean_z, z);
            mean_ok = mean_ok && (z <= 3.0);
        }
        // covariance entries measured on the entry's own scale sqrt(Sii*Sjj),
        // which is plain 10% relative on the diagonal and keeps the small
        // off-diagonal entries from demanding sub-noise accuracy
        bool cov_ok = true;
        double worst_cov = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                const double rel =
                    std::abs(Shat(i, j) - S(i, j)) / std::sqrt(S(i, i) * S(j, j));
                worst_cov = std::max(worst_cov, rel);
                cov_ok = cov_ok && (rel <= 0.10);
            }
        g.expect(mean_ok && cov_ok && arate > 0.05,
                 fmt("%s: accept %.3f, worst mean |z| %.2f (<=3), worst cov err %.3f (<=0.10)",
                     kernel_name(kinds[ki]), arate, worst_mean_z, worst_cov));
    }
    return g.ok;
}

// ---------------------------------------------------------------------------
// 4. filter vs reference sampler at day 120 of the reduced scenario

bool criterion_4(const std::string& configs, const std::string& work) {
    Gate g;
    const AppConfig cfg = reduced_config(configs);
    const LikelihoodModel model = reduced_model(cfg);
    const int n = cfg.smc.particles;

    note(fmt("running %d-particle %s/%s filter, r_A*=%.2f, to day 120", n,
             cfg.smc.kernel.c_str(), cfg.smc.mode.c_str(), cfg.smc.r_A_star));
    SmcEngine eng(model, cfg.smc, kSmcSeed);
    eng.initialize_from_prior();
    const double t0 = now_seconds();
    for (int day : {20, 40, 60, 83}) {
        eng.run_to_day(day);
        note(fmt("day %3d reached, %ld evaluations, %.0fs", day, eng.full_eval_count(),
                 now_seconds() - t0));
    }
    save_checkpoint(day83_path(work), eng.particles(), eng.seed(), eng.full_eval_count());
    for (int day : {100, 120}) {
        eng.run_to_day(day);
        note(fmt("day %3d reached, %ld evaluations, %.0fs", day, eng.full_eval_count(),
                 now_seconds() - t0));
    }
    int resample_days = 0, warn_days = 0;
    for (const auto& rec : eng.history()) {
        bool rs = false;
        for (const auto& st : rec.steps) rs = rs || st.resampled;
        resample_days += rs ? 1 : 0;
        warn_days += rec.warnings.empty() ? 0 : 1;
    }
    note(fmt("filter done: %d/%d days resampled, %d days carry warnings", resample_days,
             static_cast<int>(eng.history().size()), warn_days));

    note(fmt("reference chain: %ld iterations at day 120", cfg.mcmc.iterations));
    const auto ref = run_adaptive_mcmc(model, 120, cfg.mcmc, kRefSeed);
    note(fmt("reference accept rate %.3f, %ld kept rows", ref.accept_rate, ref.sample_u.rows()));

    const auto cols = columns_excluding(model.space().free_names(), cfg.pipeline.kl_exclude);
    const Eigen::VectorXd no_w;
    const double kl_smc =
        divergence_from_reference(ref.sample_u, no_w, eng.particles().u, eng.weights(), cols);
    note(fmt("KL(reference -> filter posterior) = %.4f", kl_smc));

    std::vector<double> rep_kls;
    for (int r = 0; r < cfg.pipeline.kl_replicates; ++r) {
        const auto rep = run_adaptive_mcmc(model, 120, cfg.mcmc, kRepSeedBase + r);
        rep_kls.push_back(divergence_from_reference(ref.sample_u, no_w, rep.sample_u, no_w, cols));
        note(fmt("replicate %2d: KL = %.4f", r, rep_kls.back()));
    }
    const double band = quantile_type7(rep_kls, 0.95);
    g.expect(kl_smc <= band,
             fmt("filter KL %.4f inside the replicate 95%% band (%.4f, %d replicates)", kl_smc,
                 band, static_cast<int>(rep_kls.size())));
    return g.ok;
}

// ---------------------------------------------------------------------------
// 5. shock recovery across the day-83 observation step

bool criterion_5(const std::string& configs, const std::string& work) {
    Gate g;
    const AppConfig cfg = reduced_config(configs);
    const LikelihoodModel model = reduced_model(cfg);

    if (!fs::exists(day83_path(work))) {
        note("no cached day-83 snapshot; rebuilding it");
        SmcEngine builder(model, cfg.smc, kSmcSeed);
        builder.initialize_from_prior();
        builder.run_to_day(83);
        save_checkpoint(day83_path(work), builder.particles(), builder.seed(),
                        builder.full_eval_count());
    }
    const CheckpointData snap = load_checkpoint(day83_path(work));
    const int n = snap.particles.size();
    note(fmt("restored %d particles at day %d", n, snap.particles.day));

    // one-shot update with a single move sweep: the step in (eta, p) between
    // days 83 and 84 wipes out the direct importance weights
    SmcSettings blunt = cfg.smc;
    blunt.mode = "discrete";
    blunt.max_mh_iters = 1;
    SmcEngine disc(model, blunt, kSmcSeed);
    disc.restore(snap.particles, snap.full_evaluations);
    const DayRecord rd = disc.assimilate_next_day();
    g.expect(rd.day == 84, fmt("discrete arm assimilated day %d", rd.day));
    g.expect(rd.steps.size() == 1 && rd.steps[0].resampled,
             "discrete arm took a single resampled jump step");
    g.expect(rd.ess_full < 0.1 * n,
             fmt("direct ESS collapses on the shock day: %.1f < %.0f", rd.ess_full, 0.1 * n));

    // tempered update with the mixing diagnostic deciding when to stop moving
    SmcEngine cont(model, cfg.smc, kSmcSeed);
    cont.restore(snap.particles, snap.full_evaluations);
    const DayRecord rc = cont.assimilate_next_day();
    const double floor = cfg.smc.epsilon_L * n;
    bool ladder_ok = true, icc_ok = true, any_resampled = false;
    for (const auto& st : rc.steps) {
        note(fmt("  step: delta %.4f, ess %.1f, %s, %d sweeps, icc %.4f%s", st.delta, st.ess,
                 st.resampled ? "resampled" : "kept", st.mh_iterations, st.icc,
                 st.icc_converged ? "" : " (not converged)"));
        ladder_ok = ladder_ok && (st.ess >= floor - 0.5 - 1e-6);
        if (st.resampled) {
            any_resampled = true;
            icc_ok = icc_ok && st.icc_converged && (st.icc <= cfg.smc.r_A_star + 1e-12);
        }
    }
    g.expect(any_resampled, "tempered arm resampled at least once crossing the shock");
    g.expect(ladder_ok, fmt("every exponent step kept ESS >= %.0f (epsilon_L * n)", floor));
    g.expect(icc_ok, fmt("every rejuvenation ended with the cluster correlation <= %.2f",
                         cfg.smc.r_A_star));
    g.expect(rc.warnings.empty(), "tempered arm finished without warnings");
    g.expect(rc.steps.back().delta >= 1.0 - 1e-12, "exponent ladder reached 1");
    return g.ok;
}

// ---------------------------------------------------------------------------
// 6. calibration under the null: data drawn from the model it is scored by

bool criterion_6(const std::string& configs, const std::string&) {
    Gate g;
    const AppConfig cfg = reduced_config(configs);
    const LikelihoodModel model =
        LikelihoodModel(cfg.model, cfg.observation, cfg.make_space(cfg.scenario),
                        simulate_dataset(cfg, kCalSeedBase), cfg.scenario);
    const int from_day = 20, to_day = 49;  // pre-step stretch, counts tiny to large
    const Eigen::VectorXd theta = cfg.truth_vector(cfg.scenario);
    const auto days = model.expectations(theta, from_day, to_day);
    const int n_ages = static_cast<int>(days.front().mu_signal.size());

    std::vector<DiscretePredictive> pred;
    for (const auto& d : days)
        for (int a = 0; a < n_ages; ++a)
            pred.push_back(DiscretePredictive::negbin_mixture(
                Eigen::VectorXd::Constant(1, d.mu_signal[a] + d.background[a]),
                Eigen::VectorXd::Constant(1, d.eta), Eigen::VectorXd::Constant(1, 1.0)));

    const int reps = 200;
    PitHistogram pit;
    std::vector<double> zs;
    for (int r = 0; r < reps; ++r) {
        const Dataset ds = simulate_dataset(cfg, kCalSeedBase + static_cast<std::uint64_t>(r));
        ScoreSeries series;
        std::size_t idx = 0;
        for (int day = from_day; day <= to_day; ++day)
            for (int a = 0; a < n_ages; ++a, ++idx) {
                const long y = ds.batches[static_cast<std::size_t>(day - 1)].confirmed
                                   [static_cast<std::size_t>(a)];
                if (y < 0) return g.expect(false, "simulated count stream has a gap"), false;
                series.add(pred[idx], y);
                pit.add(pred[idx], y);
            }
        zs.push_back(series.z());
    }
    const double mz = mean_of(zs), vz = var_of(zs);
    note(fmt("%d replicates x %d observations scored", reps, (to_day - from_day + 1) * n_ages));
    g.expect(pit.chi2_pvalue() > 0.01,
             fmt("PIT uniformity: chi2 %.2f, p = %.4f (> 0.01)", pit.chi2(), pit.chi2_pvalue()));
    g.expect(std::abs(mz) <= 0.2, fmt("z score mean %.4f within +-0.2", mz));
    g.expect(vz >= 0.7 && vz <= 1.3, fmt("z score variance %.4f within [0.7, 1.3]", vz));
    return g.ok;
}

// ---------------------------------------------------------------------------
// 7. update cost: daily filter updates vs rerunning the reference sampler

bool criterion_7(const std::string& configs, const std::string&) {
    Gate g;
    const AppConfig cfg = reduced_config(configs);
    const LikelihoodModel model = reduced_model(cfg);

    SmcSettings s7 = cfg.smc;
    s7.particles = 2000;  // routine operating size; the agreement gate runs 10k
    SmcEngine eng(model, s7, kEffSmcSeed);
    eng.initialize_from_prior();
    const double t0 = now_seconds();
    for (int day : {40, 83, 120}) {
        eng.run_to_day(day);
        note(fmt("warm-up to day %3d: %ld evaluations, %.0fs", day, eng.full_eval_count(),
                 now_seconds() - t0));
    }
    const long base_evals = eng.full_eval_count();
    const double t1 = now_seconds();
    eng.run_to_day(164);
    const double smc_secs = now_seconds() - t1;
    const long smc_evals = eng.full_eval_count() - base_evals;

    std::vector<double> day_x, day_evals;
    for (const auto& rec : eng.history())
        if (rec.day >= 121) {
            day_x.push_back(static_cast<double>(rec.day));
            day_evals.push_back(static_cast<double>(rec.full_evaluations));
        }
    note(fmt("filter window days 121-164: %ld evaluations in %.0fs", smc_evals, smc_secs));

    McmcSettings policy = cfg.mcmc;
    policy.iterations = 10000;
    policy.burn_in = 2000;
    const double t2 = now_seconds();
    long policy_evals = 0;
    for (int day = 121; day <= 164; ++day) {
        const auto r = run_adaptive_mcmc(model, day, policy,
                                         kPolicySeedBase + static_cast<std::uint64_t>(day));
        policy_evals += r.full_evaluations;
    }
    const double policy_secs = now_seconds() - t2;
    note(fmt("daily reruns of the reference sampler: %ld evaluations in %.0fs", policy_evals,
             policy_secs));
    note(fmt("wall-clock ratio filter/reruns = %.3f (reported, not asserted)",
             smc_secs / policy_secs));

    g.expect(smc_evals < policy_evals,
             fmt("filter window cost %ld < daily-rerun cost %ld", smc_evals, policy_evals));
    const double slope = ols_slope(day_x, day_evals);
    const std::vector<double> first_half(day_evals.begin(), day_evals.begin() + 22);
    const std::vector<double> second_half(day_evals.begin() + 22, day_evals.end());
    note(fmt("per-day evaluations: first half mean %.0f, second half mean %.0f",
             mean_of(first_half), mean_of(second_half)));
    g.expect(slope <= 0.0,
             fmt("per-day evaluation trend over the stable window: slope %.1f/day <= 0", slope));
    return g.ok;
}

// ---------------------------------------------------------------------------
// 8. end-to-end determinism under one master seed

bool criterion_8(const std::string& configs, const std::string& work) {
    Gate g;
    const AppConfig cfg = AppConfig::load(configs + "/acceptance_pipeline.json");
    const std::string d1 = work + "/pipe_a", d2 = work + "/pipe_b";
    fs::remove_all(d1);
    fs::remove_all(d2);

    note("first pipeline run");
    const PipelineResult r1 = run_pipeline(cfg, d1, kPipelineSeed);
    note("second pipeline run, same seed");
    const PipelineResult r2 = run_pipeline(cfg, d2, kPipelineSeed);

    g.expect(!r1.outputs.empty() && r1.outputs.front() == "data.csv" &&
                 r1.outputs.back() == "manifest.json",
             fmt("pipeline produced %d outputs, manifest last",
                 static_cast<int>(r1.outputs.size())));
    g.expect(r1.outputs == r2.outputs, "both runs produced the same output list");

    bool all_equal = true;
    for (const auto& name : r1.outputs) {
        const auto h1 = fnv1a64_file(d1 + "/" + name);
        const auto h2 = fnv1a64_file(d2 + "/" + name);
        if (h1 != h2) {
            all_equal = false;
            note(fmt("MISMATCH %s: %s vs %s", name.c_str(), hex64(h1).c_str(),
                     hex64(h2).c_str()));
        }
    }
    g.expect(all_equal, fmt("all %d outputs byte-identical across runs",
                            static_cast<int>(r1.outputs.size())));
    return g.ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 4) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..8> <configs_dir> <work_dir>\n");
        return 2;
    }
    const int crit = std::atoi(argv[1]);
    const std::string configs = argv[2];
    const std::string work = argv[3];
    fs::create_directories(work);

    static const char* labels[] = {"closed-form oracles",  "transmission validity",
                                   "kernel stationarity",  "filter-reference agreement",
                                   "shock recovery",       "null calibration",
                                   "update efficiency",    "pipeline determinism"};
    using Fn = bool (*)(const std::string&, const std::string&);
    static const Fn fns[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                             criterion_5, criterion_6, criterion_7, criterion_8};
    if (crit < 1 || crit > 8) {
        std::fprintf(stderr, "criterion must be 1..8\n");
        return 2;
    }
    bool ok = false;
    try {
        ok = fns[crit - 1](configs, work);
    } catch (const std::exception& e) {
        std::printf("  [FAIL] unhandled exception: %s\n", e.what());
        ok = false;
    }
    std::printf("ACCEPTANCE %d %s: %s\n", crit, labels[crit - 1], ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}
