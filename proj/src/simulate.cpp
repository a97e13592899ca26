#include "epismc/simulate.hpp"

#include <algorithm>

#include "epismc/rng.hpp"

namespace epismc {

namespace {
constexpr std::uint64_t kSimDomain = 0x51D0;  // keeps data draws apart from inference streams

LikelihoodModel make_truth_model(const AppConfig& cfg) {
    return LikelihoodModel(cfg.model, cfg.observation,
                           cfg.make_space(cfg.scenario),
                           Dataset::empty(static_cast<int>(cfg.model.populations.size()), 0),
                           cfg.scenario);
}
}  // namespace

std::vector<DayExpectation> truth_expectations(const AppConfig& cfg, int last_day) {
    const LikelihoodModel model = make_truth_model(cfg);
    return model.expectations(cfg.truth_vector(cfg.scenario), 1, last_day);
}

Dataset simulate_dataset(const AppConfig& cfg, std::uint64_t seed) {
    const LikelihoodModel model = make_truth_model(cfg);
    const int A = model.schedule().n_ages();
    const int T = cfg.model.horizon_days;
    const Eigen::VectorXd theta = cfg.truth_vector(cfg.scenario);
    const auto days = model.expectations(theta, 1, T);

    // virology round sizes: one entry per round, last value reused
    auto viro_size = [&](int round) -> long {
        const auto& sizes = cfg.calendar.virology_sizes;
        if (sizes.empty()) return 0;
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(round), sizes.size() - 1);
        return sizes[i];
    };

    Dataset out = Dataset::empty(A, T);
    for (int d = 1; d <= T; ++d) {
        const DayExpectation& e = days[static_cast<std::size_t>(d - 1)];
        SurveillanceBatch& batch = out.day(d);
        for (int a = 0; a < A; ++a) {
            RngStream counts(seed, kSimDomain, static_cast<std::uint64_t>(d), 0,
                             static_cast<std::uint64_t>(a));
            if (cfg.scenario == 1) {
                batch.confirmed[a] = counts.negbin_mean_dispersion(e.mu_signal[a], e.eta);
            } else {
                batch.gp[a] = counts.negbin_mean_dispersion(e.mu_signal[a] + e.background[a], e.eta);
            }
        }
        if (cfg.scenario == 2 && cfg.calendar.virology_period > 0 && d >= cfg.calendar.virology_start &&
            (d - cfg.calendar.virology_start) % cfg.calendar.virology_period == 0) {
            const int round = (d - cfg.calendar.virology_start) / cfg.calendar.virology_period;
            const long n_swabs = viro_size(round);
            for (int a = 0; a < A; ++a) {
                RngStream viro(seed, kSimDomain, static_cast<std::uint64_t>(d), 1,
                               static_cast<std::uint64_t>(a));
                const double denom = e.mu_signal[a] + e.background[a];
                const double pos = denom > 0.0 ? e.mu_signal[a] / denom : 0.0;
                batch.viro_n[a] = n_swabs;
                batch.viro_pos[a] = viro.binomial(n_swabs, pos);
            }
        }
        if (std::find(cfg.calendar.serology_days.begin(), cfg.calendar.serology_days.end(), d) !=
            cfg.calendar.serology_days.end()) {
            for (int a = 0; a < A; ++a) {
                RngStream sero(seed, kSimDomain, static_cast<std::uint64_t>(d), 2,
                               static_cast<std::uint64_t>(a));
                batch.sero_n[a] = cfg.calendar.serology_size;
                batch.sero_pos[a] = sero.binomial(cfg.calendar.serology_size, e.sero_prob[a]);
            }
        }
    }
    return out;
}

}  // namespace epismc
