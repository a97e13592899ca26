#include "epismc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "epismc/hash.hpp"
#include "epismc/mcmc.hpp"
#include "epismc/simulate.hpp"
#include "json.hpp"

namespace epismc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt17(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
    const std::uint64_t v[4] = {seed, a, b, c};
    return fnv1a64(v, sizeof v);
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

DiscretePredictive count_predictive(const LikelihoodModel& model, const Eigen::MatrixXd& u_rows,
                                    const Eigen::VectorXd& weights, int day, int age,
                                    int max_components) {
    const int n = static_cast<int>(u_rows.rows());
    if (n == 0) throw diagnostic_error("count_predictive: empty sample");
    if (max_components < 1) throw diagnostic_error("count_predictive: need at least one component");
    Eigen::VectorXd w = weights.size() == 0
                            ? Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))
                            : weights;
    const double wsum = w.sum();
    if (!(wsum > 0.0)) throw degenerate_weights_error("count_predictive: weights sum to zero");

    std::vector<int> chosen;
    std::vector<double> comp_w;
    if (n <= max_components) {
        for (int i = 0; i < n; ++i)
            if (w[i] > 0.0) {
                chosen.push_back(i);
                comp_w.push_back(w[i]);
            }
    } else {
        // systematic thinning on the weight cdf, equal component weights
        const int M = max_components;
        int i = 0;
        double cum = w[0];
        for (int j = 0; j < M; ++j) {
            const double t = (j + 0.5) / static_cast<double>(M) * wsum;
            while (cum < t && i + 1 < n) cum += w[++i];
            chosen.push_back(i);
            comp_w.push_back(1.0);
        }
    }

    std::vector<double> mu_v, eta_v, w_v;
    for (std::size_t c = 0; c < chosen.size(); ++c) {
        const Eigen::VectorXd theta = model.space().to_natural(u_rows.row(chosen[c]).transpose());
        try {
            const auto e = model.expectations(theta, day, day).front();
            mu_v.push_back(e.mu_signal[age] + e.background[age]);
            eta_v.push_back(e.eta);
            w_v.push_back(comp_w[c]);
        } catch (const domain_error&) {
            // no trajectory at this parameter point: zero posterior mass
        } catch (const invalid_parameter_error&) {
        }
    }
    if (mu_v.empty()) throw diagnostic_error("count_predictive: no usable mixture components");
    const auto as_vec = [](const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    };
    return DiscretePredictive::negbin_mixture(as_vec(mu_v), as_vec(eta_v), as_vec(w_v));
}

PipelineResult run_pipeline(const AppConfig& cfg, const std::string& out_dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const auto wall0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    PipelineResult result;
    result.out_dir = out_dir;
    std::vector<std::string> timing_lines;
    auto mark = [&](const std::string& what, const std::chrono::steady_clock::time_point& t0) {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timing_lines.push_back(what + ": " + fmt17(s) + " s");
    };

    // ---- data -----------------------------------------------------------
    auto t_sim = std::chrono::steady_clock::now();
    const Dataset data = simulate_dataset(cfg, seed);
    data.write_csv((dir / "data.csv").string());
    result.outputs.push_back("data.csv");
    mark("simulate", t_sim);

    const ParameterSpace space = cfg.make_space(cfg.scenario);
    const LikelihoodModel model(cfg.model, cfg.observation, space, data, cfg.scenario);
    const int n_days = data.n_days();

    {
        const Eigen::VectorXd truth = cfg.truth_vector(cfg.scenario);
        ordered_json tj;
        for (int i = 0; i < space.layout().dim(); ++i) tj["parameters"][space.layout().name(i)] = truth[i];
        const TransmissionParams tp = cfg.transmission_truth();
        tj["derived"]["r0_baseline"] = r0_from_growth_rate(tp.psi, tp.d_L, tp.d_I);
        tj["derived"]["attack_rate"] = attack_rate(tp, model.schedule());
        write_json(dir / "truth.json", tj);
        result.outputs.push_back("truth.json");
    }

    // ---- schedule of analysis days ---------------------------------------
    std::vector<int> landmarks;
    for (int d : cfg.pipeline.landmark_days)
        if (d >= 0 && d <= n_days) landmarks.push_back(d);
    std::vector<int> kl_days;
    for (int d : cfg.pipeline.kl_days)
        if (d >= 1 && d <= n_days) kl_days.push_back(d);
    const int t0_day = landmarks.empty() ? 0 : landmarks.front();
    int final_day = t0_day;
    for (int d : landmarks) final_day = std::max(final_day, d);
    for (int d : kl_days) final_day = std::max(final_day, d);
    if (final_day == t0_day) final_day = n_days;
    const std::set<int> forecast_days(landmarks.begin(), landmarks.end());
    const std::set<int> kl_set(kl_days.begin(), kl_days.end());

    // ---- seed the filter ---------------------------------------------------
    SmcEngine engine(model, cfg.smc, seed);
    long mcmc_evals_total = 0;
    auto t_seed = std::chrono::steady_clock::now();
    if (t0_day > 0) {
        const auto chain = run_adaptive_mcmc(model, t0_day, cfg.mcmc, subseed(seed, 1));
        mcmc_evals_total += chain.full_evaluations;
        const int rows = static_cast<int>(chain.sample_u.rows());
        if (rows < 2) throw config_error("seeding chain kept too few draws");
        Eigen::MatrixXd sub(cfg.smc.particles, chain.sample_u.cols());
        for (int j = 0; j < cfg.smc.particles; ++j)
            sub.row(j) = chain.sample_u.row((j * rows) / cfg.smc.particles);
        engine.initialize_from_sample(sub, t0_day);
    } else {
        engine.initialize_from_prior();
    }
    mark("seed", t_seed);

    // ---- assimilate, score, snapshot ---------------------------------------
    constexpr int kPredictiveComponents = 200;
    ScoreSeries series;
    PitHistogram pit(10);
    ordered_json score_rows = ordered_json::array();
    std::map<int, std::pair<Eigen::MatrixXd, Eigen::VectorXd>> kl_snapshots;
    auto maybe_forecast = [&](int at_day) {
        if (forecast_days.count(at_day) == 0) return;
        const int horizon =
            std::min(cfg.pipeline.forecast_horizon, model.horizon_days() - at_day);
        if (horizon < 1) return;
        const auto fc = forecast_counts(model, engine.particles().u, engine.weights(), at_day,
                                        horizon, subseed(seed, 4, static_cast<std::uint64_t>(at_day)));
        char name[64];
        std::snprintf(name, sizeof name, "forecast_day%03d.csv", at_day);
        std::ofstream out(dir / name, std::ios::trunc);
        out << "day,age_group,q025,q50,q975,mean_count\n";
        for (int h = 0; h < horizon; ++h)
            for (int a = 0; a < fc.q50.cols(); ++a)
                out << (at_day + 1 + h) << ',' << (a + 1) << ',' << fmt17(fc.q025(h, a)) << ','
                    << fmt17(fc.q50(h, a)) << ',' << fmt17(fc.q975(h, a)) << ','
                    << fmt17(fc.mean_signal(h, a)) << '\n';
        result.outputs.push_back(name);
    };

    auto t_run = std::chrono::steady_clock::now();
    maybe_forecast(engine.particles().day);
    ordered_json records = ordered_json::array();
    while (engine.particles().day < final_day) {
        const int score_day = engine.particles().day + 1;
        const SurveillanceBatch& batch = data.day(score_day);
        for (int a = 0; a < data.n_ages; ++a) {
            const long y = cfg.scenario == 1 ? batch.confirmed[static_cast<std::size_t>(a)]
                                             : batch.gp[static_cast<std::size_t>(a)];
            if (y < 0) continue;
            const auto pred = count_predictive(model, engine.particles().u, engine.weights(),
                                               score_day, a, kPredictiveComponents);
            series.add(pred, y);
            pit.add(pred, y);
            ordered_json row;
            row["day"] = score_day;
            row["age_group"] = a + 1;
            row["observed"] = y;
            row["rps"] = pred.rps(y);
            row["rps_null_mean"] = pred.rps_null_mean();
            row["rps_null_var"] = pred.rps_null_var();
            row["pit_lower"] = pred.pit_lower(y);
            row["pit_upper"] = pred.pit_upper(y);
            score_rows.push_back(row);
        }

        const DayRecord rec = engine.assimilate_next_day();
        ordered_json rj;
        rj["day"] = rec.day;
        rj["ess_full"] = rec.ess_full;
        rj["log_predictive"] = rec.log_predictive;
        rj["full_evaluations"] = rec.full_evaluations;
        rj["summary_simulations"] = rec.summary_simulations;
        rj["steps"] = ordered_json::array();
        for (const auto& st : rec.steps) {
            ordered_json sj;
            sj["delta"] = st.delta;
            sj["ess"] = st.ess;
            sj["resampled"] = st.resampled;
            sj["mh_iterations"] = st.mh_iterations;
            if (std::isfinite(st.icc)) sj["icc"] = st.icc;
            sj["icc_converged"] = st.icc_converged;
            if (std::isfinite(st.accept_rate)) sj["accept_rate"] = st.accept_rate;
            sj["full_evaluations"] = st.full_evaluations;
            rj["steps"].push_back(sj);
        }
        rj["warnings"] = rec.warnings;
        records.push_back(rj);

        const int now = engine.particles().day;
        if (kl_set.count(now)) kl_snapshots[now] = {engine.particles().u, engine.weights()};
        maybe_forecast(now);
    }
    mark("assimilate", t_run);

    {
        ordered_json rj;
        rj["seed_day"] = t0_day;
        rj["final_day"] = final_day;
        rj["kernel"] = cfg.smc.kernel;
        rj["mode"] = cfg.smc.mode;
        rj["particles"] = cfg.smc.particles;
        rj["total_full_evaluations"] = engine.full_eval_count();
        rj["days"] = records;
        write_json(dir / "records.json", rj);
        result.outputs.push_back("records.json");
    }

    {
        ordered_json sj;
        sj["n_scored"] = series.n;
        sj["rps_sum"] = series.sum_s;
        sj["rps_null_mean_sum"] = series.sum_mean;
        sj["rps_null_var_sum"] = series.sum_var;
        try {
            sj["z_rps"] = series.z();
        } catch (const diagnostic_error&) {
            sj["z_rps"] = nullptr;
        }
        sj["pit_mass"] = pit.mass;
        if (pit.total > 0.0) {
            sj["pit_chi2"] = pit.chi2();
            sj["pit_chi2_pvalue"] = pit.chi2_pvalue();
        }
        sj["rows"] = score_rows;
        write_json(dir / "scores.json", sj);
        result.outputs.push_back("scores.json");
    }

    // ---- posterior sample --------------------------------------------------
    {
        const Eigen::MatrixXd nat = engine.natural_sample();
        const Eigen::VectorXd w = engine.weights();
        std::ofstream out(dir / "particles.csv", std::ios::trunc);
        for (int i = 0; i < space.layout().dim(); ++i) out << space.layout().name(i) << ',';
        out << "weight\n";
        for (Eigen::Index r = 0; r < nat.rows(); ++r) {
            for (Eigen::Index c = 0; c < nat.cols(); ++c) out << fmt17(nat(r, c)) << ',';
            out << fmt17(w[r]) << '\n';
        }
        result.outputs.push_back("particles.csv");
    }

    // ---- posterior agreement against the reference sampler ------------------
    {
        auto t_kl = std::chrono::steady_clock::now();
        const auto cols = columns_excluding(space.free_names(), cfg.pipeline.kl_exclude);
        ordered_json kj = ordered_json::array();
        for (const auto& [day, snap] : kl_snapshots) {
            const auto ref = run_adaptive_mcmc(model, day, cfg.mcmc,
                                               subseed(seed, 2, static_cast<std::uint64_t>(day)));
            mcmc_evals_total += ref.full_evaluations;
            const Eigen::VectorXd no_w;
            const double kl = divergence_from_reference(ref.sample_u, no_w, snap.first, snap.second, cols);
            std::vector<double> rep_kls;
            for (int r = 0; r < cfg.pipeline.kl_replicates; ++r) {
                const auto rep = run_adaptive_mcmc(
                    model, day, cfg.mcmc,
                    subseed(seed, 3, static_cast<std::uint64_t>(day), static_cast<std::uint64_t>(r)));
                mcmc_evals_total += rep.full_evaluations;
                rep_kls.push_back(divergence_from_reference(ref.sample_u, no_w, rep.sample_u, no_w, cols));
            }
            ordered_json item;
            item["day"] = day;
            item["kl_from_reference"] = kl;
            item["replicate_kls"] = rep_kls;
            if (!rep_kls.empty()) {
                const double band = quantile_type7(rep_kls, 0.95);
                item["replicate_band95"] = band;
                item["within_band"] = kl <= band;
            }
            kj.push_back(item);
        }
        ordered_json wrap;
        wrap["compared_components"] = [&] {
            std::vector<std::string> names;
            const auto free_names = space.free_names();
            for (int c : cols) names.push_back(free_names[static_cast<std::size_t>(c)]);
            return names;
        }();
        wrap["days"] = kj;
        write_json(dir / "kl.json", wrap);
        result.outputs.push_back("kl.json");
        mark("kl", t_kl);
    }

    // ---- manifest ------------------------------------------------------------
    {
        ordered_json mj;
        mj["format"] = 1;
        mj["seed"] = seed;
        mj["scenario"] = cfg.scenario;
        mj["config_fnv1a64"] = hex64(fnv1a64(cfg.source_text.data(), cfg.source_text.size()));
        mj["settings"]["particles"] = cfg.smc.particles;
        mj["settings"]["kernel"] = cfg.smc.kernel;
        mj["settings"]["mode"] = cfg.smc.mode;
        mj["settings"]["epsilon_L"] = cfg.smc.epsilon_L;
        mj["settings"]["r_A_star"] = cfg.smc.r_A_star;
        mj["settings"]["mcmc_iterations"] = cfg.mcmc.iterations;
        mj["counts"]["smc_full_evaluations"] = engine.full_eval_count();
        mj["counts"]["mcmc_evaluations"] = mcmc_evals_total;
        for (const auto& name : result.outputs)
            mj["outputs"][name] = hex64(fnv1a64_file((dir / name).string()));
        write_json(dir / "manifest.json", mj);
        result.outputs.push_back("manifest.json");
    }

    mark("total", wall0);
    {
        std::ofstream out(dir / "timing.log", std::ios::trunc);
        for (const auto& line : timing_lines) out << line << '\n';
    }
    return result;
}

}  // namespace epismc
