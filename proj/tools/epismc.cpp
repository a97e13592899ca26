#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "epismc/checkpoint.hpp"
#include "epismc/config.hpp"
#include "epismc/data.hpp"
#include "epismc/diagnostics.hpp"
#include "epismc/hash.hpp"
#include "epismc/mcmc.hpp"
#include "epismc/pipeline.hpp"
#include "epismc/simulate.hpp"
#include "epismc/smc.hpp"
#include "json.hpp"

namespace {

using namespace epismc;
using ordered_json = nlohmann::ordered_json;

std::string fmt17(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

void write_sample_csv(const std::string& path, const ParameterSpace& space,
                      const Eigen::MatrixXd& natural, const Eigen::VectorXd& weights) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    for (int i = 0; i < space.layout().dim(); ++i) out << space.layout().name(i) << ',';
    out << "weight\n";
    for (Eigen::Index r = 0; r < natural.rows(); ++r) {
        for (Eigen::Index c = 0; c < natural.cols(); ++c) out << fmt17(natural(r, c)) << ',';
        out << fmt17(weights.size() ? weights[r] : 1.0 / static_cast<double>(natural.rows())) << '\n';
    }
}

ordered_json day_record_json(const DayRecord& rec) {
    ordered_json rj;
    rj["day"] = rec.day;
    rj["ess_full"] = rec.ess_full;
    rj["log_predictive"] = rec.log_predictive;
    rj["full_evaluations"] = rec.full_evaluations;
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
    return rj;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"daily-assimilation epidemic inference"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path = "out";
    std::uint64_t seed = 1;
    int day = 0, horizon = 20;
    std::string checkpoint_in, checkpoint_out;

    auto add_common = [&](CLI::App* sub, bool needs_data) {
        sub->add_option("--config", config_path, "model/config JSON")->required();
        sub->add_option("--seed", seed, "master seed");
        if (needs_data) sub->add_option("--data", data_path, "surveillance CSV")->required();
    };

    auto* sim = app.add_subcommand("simulate", "draw a synthetic surveillance set from the configured truth");
    add_common(sim, false);
    sim->add_option("--out", out_path, "output directory");

    auto* mcmc = app.add_subcommand("mcmc", "reference adaptive random-walk sampler");
    add_common(mcmc, true);
    mcmc->add_option("--day", day, "condition on data up to this day")->required();
    mcmc->add_option("--out", out_path, "output directory");

    auto* smc = app.add_subcommand("smc", "daily particle assimilation");
    add_common(smc, true);
    smc->add_option("--day", day, "assimilate up to this day (default: all data)");
    smc->add_option("--out", out_path, "output directory");
    smc->add_option("--resume", checkpoint_in, "checkpoint to resume from");
    smc->add_option("--checkpoint", checkpoint_out, "checkpoint to write at the end");

    auto* fc = app.add_subcommand("forecast", "count forecasts from a particle checkpoint");
    add_common(fc, true);
    fc->add_option("--resume", checkpoint_in, "particle checkpoint")->required();
    fc->add_option("--horizon", horizon, "days ahead");
    fc->add_option("--out", out_path, "output directory");

    auto* pipe = app.add_subcommand("pipeline", "simulate, assimilate, score, compare, manifest");
    add_common(pipe, false);
    pipe->add_option("--out", out_path, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const AppConfig cfg = AppConfig::load(config_path);
        std::filesystem::create_directories(out_path);
        const std::filesystem::path dir(out_path);

        if (*sim) {
            const Dataset data = simulate_dataset(cfg, seed);
            data.write_csv((dir / "data.csv").string());
            const ParameterSpace space = cfg.make_space(cfg.scenario);
            const Eigen::VectorXd truth = cfg.truth_vector(cfg.scenario);
            ordered_json tj;
            for (int i = 0; i < space.layout().dim(); ++i)
                tj["parameters"][space.layout().name(i)] = truth[i];
            std::ofstream out(dir / "truth.json", std::ios::trunc);
            out << tj.dump(2) << '\n';
            std::cout << "wrote " << (dir / "data.csv").string() << " ("
                      << hex64(fnv1a64_file((dir / "data.csv").string())) << ")\n";
            return 0;
        }

        const Dataset data = (*pipe) ? Dataset{} : Dataset::read_csv(data_path);
        if (*mcmc) {
            const ParameterSpace space = cfg.make_space(cfg.scenario);
            const LikelihoodModel model(cfg.model, cfg.observation, space, data, cfg.scenario);
            const auto res = run_adaptive_mcmc(model, day, cfg.mcmc, seed);
            write_sample_csv((dir / "mcmc_sample.csv").string(), space,
                             to_natural_rows(space, res.sample_u), Eigen::VectorXd());
            ordered_json j;
            j["kept_draws"] = res.sample_u.rows();
            j["accept_rate"] = res.accept_rate;
            j["full_evaluations"] = res.full_evaluations;
            j["final_scale"] = res.final_scale;
            std::cout << j.dump(2) << '\n';
            return 0;
        }

        if (*smc) {
            const ParameterSpace space = cfg.make_space(cfg.scenario);
            const LikelihoodModel model(cfg.model, cfg.observation, space, data, cfg.scenario);
            SmcEngine engine(model, cfg.smc, seed);
            if (!checkpoint_in.empty()) {
                auto snap = load_checkpoint(checkpoint_in);
                engine.restore(std::move(snap.particles), snap.full_evaluations);
            } else {
                engine.initialize_from_prior();
            }
            const int target = day > 0 ? day : data.n_days();
            ordered_json records = ordered_json::array();
            while (engine.particles().day < target)
                records.push_back(day_record_json(engine.assimilate_next_day()));
            write_sample_csv((dir / "particles.csv").string(), space, engine.natural_sample(),
                             engine.weights());
            ordered_json rj;
            rj["final_day"] = engine.particles().day;
            rj["total_full_evaluations"] = engine.full_eval_count();
            rj["days"] = records;
            std::ofstream out(dir / "records.json", std::ios::trunc);
            out << rj.dump(2) << '\n';
            if (!checkpoint_out.empty())
                save_checkpoint(checkpoint_out, engine.particles(), seed, engine.full_eval_count());
            std::cout << "assimilated through day " << engine.particles().day << ", "
                      << engine.full_eval_count() << " likelihood evaluations\n";
            return 0;
        }

        if (*fc) {
            const ParameterSpace space = cfg.make_space(cfg.scenario);
            const LikelihoodModel model(cfg.model, cfg.observation, space, data, cfg.scenario);
            auto snap = load_checkpoint(checkpoint_in);
            const int from = snap.particles.day;
            const int h = std::min(horizon, model.horizon_days() - from);
            if (h < 1) throw config_error("checkpoint already at the model horizon");
            const auto w = normalized_weights(snap.particles.log_w);
            const auto fcst = forecast_counts(model, snap.particles.u, w, from, h, seed);
            std::ofstream out(dir / "forecast.csv", std::ios::trunc);
            out << "day,age_group,q025,q50,q975,mean_count\n";
            for (int hh = 0; hh < h; ++hh)
                for (int a = 0; a < fcst.q50.cols(); ++a)
                    out << (from + 1 + hh) << ',' << (a + 1) << ',' << fmt17(fcst.q025(hh, a)) << ','
                        << fmt17(fcst.q50(hh, a)) << ',' << fmt17(fcst.q975(hh, a)) << ','
                        << fmt17(fcst.mean_signal(hh, a)) << '\n';
            std::cout << "wrote " << (dir / "forecast.csv").string() << '\n';
            return 0;
        }

        if (*pipe) {
            const auto res = run_pipeline(cfg, out_path, seed);
            std::cout << "pipeline outputs under " << res.out_dir << ":\n";
            for (const auto& f : res.outputs) std::cout << "  " << f << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
