#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "epismc/likelihood.hpp"
#include "epismc/simulate.hpp"

using namespace epismc;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

// three-group configuration small enough for hundreds of replicate draws
AppConfig tiny_config(int scenario) {
    AppConfig cfg;
    cfg.scenario = scenario;
    cfg.model.dt = 0.5;
    cfg.model.horizon_days = 40;
    cfg.model.populations = Eigen::VectorXd(3);
    cfg.model.populations << 10340000.0, 21890000.0, 22770000.0;
    cfg.model.contact_matrix = Eigen::MatrixXd(3, 3);
    cfg.model.contact_matrix << 7.774468, 3.731915, 1.517021,  //
        2.054020, 6.751759, 2.385427,                          //
        0.948406, 2.728986, 3.737681;
    cfg.model.reference_multiplier = 0.403;
    cfg.model.windows = {{0, 40, 1}};
    cfg.model.n_multipliers = 1;
    cfg.observation.intervention_day = 20;
    cfg.observation.n_child_groups = 1;
    cfg.observation.background_knots = {21, 28, 34, 40};
    cfg.calendar.serology_days = {25};
    cfg.calendar.serology_size = 500;
    cfg.calendar.virology_start = 7;
    cfg.calendar.virology_period = 7;
    cfg.calendar.virology_sizes = {50};
    cfg.truth = {{"psi", 0.133}, {"nu", -10.0}, {"d_I", 3.47}, {"m1", 0.403},
                 {"phi", 0.278}, {"p1", 0.278}, {"p2", 0.162}, {"p3", 0.137},
                 {"p4", 0.441},  {"eta1", 3.0}, {"eta2", 2.15}};
    if (scenario == 2) {
        const double bb[9] = {5.3, 0.26, 0.09, -0.25, 0.4, 4.9, 5.6, 4.5, 5.2};
        for (int i = 0; i < 9; ++i) cfg.truth["bB" + std::to_string(i + 1)] = bb[i];
    }
    return cfg;
}

LikelihoodModel make_model(const AppConfig& cfg, Dataset data) {
    return LikelihoodModel(cfg.model, cfg.observation, cfg.make_space(cfg.scenario),
                           std::move(data), cfg.scenario);
}

bool same_dataset(const Dataset& a, const Dataset& b) {
    if (a.n_ages != b.n_ages || a.n_days() != b.n_days()) return false;
    for (int d = 1; d <= a.n_days(); ++d) {
        const auto& x = a.day(d);
        const auto& y = b.day(d);
        if (x.confirmed != y.confirmed || x.gp != y.gp || x.viro_pos != y.viro_pos ||
            x.viro_n != y.viro_n || x.sero_pos != y.sero_pos || x.sero_n != y.sero_n)
            return false;
    }
    return true;
}
}  // namespace

TEST_CASE("expectations compose the transmission run with the reporting chain") {
    const AppConfig cfg = tiny_config(1);
    const LikelihoodModel model = make_model(cfg, Dataset::empty(3, 0));
    const Eigen::VectorXd theta = cfg.truth_vector(1);

    const auto days = model.expectations(theta, 1, 15);
    REQUIRE(days.size() == 15);

    // rebuild the same quantities through the public pieces
    const TransmissionParams tp = model.transmission(theta);
    const ObservationParams op = model.observation_params(theta);
    const Trajectory traj = simulate_epidemic(tp, model.schedule(), 15 * 2);
    Eigen::MatrixXd delta(15, 3);
    for (int d = 1; d <= 15; ++d) delta.row(d - 1) = traj.daily_infections(d);
    const Eigen::MatrixXd mu =
        expected_counts(delta, op, model.observation_config(), model.delay());
    const Eigen::VectorXd& N = model.schedule().populations();

    for (int d = 1; d <= 15; ++d) {
        const DayExpectation& e = days[static_cast<std::size_t>(d - 1)];
        for (int a = 0; a < 3; ++a) {
            CHECK(e.mu_signal[a] == doctest::Approx(mu(d - 1, a)).epsilon(1e-12));
            CHECK(e.background[a] == 0.0);  // no background model in this scenario
            const double s = traj.end_of_day_susceptibles(d)[a];
            CHECK(e.sero_prob[a] == doctest::Approx(1.0 - s / N[a]).epsilon(1e-12));
        }
        CHECK(e.eta == (d <= 20 ? 3.0 : 2.15));
    }

    CHECK_THROWS_AS(model.expectations(theta, 0, 5), config_error);
    CHECK_THROWS_AS(model.expectations(theta, 5, 4), config_error);
    CHECK_THROWS_AS(model.expectations(theta, 1, 41), config_error);

    CHECK(model.attack_rate_of(theta) ==
          doctest::Approx(attack_rate(tp, model.schedule())).epsilon(1e-15));
}

TEST_CASE("day log-likelihood adds exactly the streams present") {
    const AppConfig cfg = tiny_config(1);
    const LikelihoodModel model = make_model(cfg, Dataset::empty(3, 0));

    DayExpectation e;
    e.mu_signal = Eigen::VectorXd(2);
    e.mu_signal << 3.0, 5.0;
    e.background = Eigen::VectorXd(2);
    e.background << 2.0, 1.0;
    e.sero_prob = Eigen::VectorXd(2);
    e.sero_prob << 0.1, 0.2;
    e.eta = 1.7;

    SurveillanceBatch b(9, 2);
    b.confirmed = {4, -1};
    b.gp = {-1, 6};
    b.viro_pos = {2, 0};
    b.viro_n = {9, 0};
    b.sero_pos = {0, 3};
    b.sero_n = {0, 20};

    const double expected = loglik_confirmed(4, 3.0, 1.7) + loglik_gp(6, 5.0, 1.0, 1.7) +
                            loglik_virology(2, 9, 3.0, 2.0) + log_binomial_pmf(3, 20, 0.2);
    CHECK(model.day_loglik(e, b) == doctest::Approx(expected).epsilon(1e-13));

    // a batch with nothing reported contributes nothing
    CHECK(model.day_loglik(e, SurveillanceBatch(9, 2)) == 0.0);
}

TEST_CASE("tempered evaluation decomposes into prior, history, and batch") {
    const AppConfig cfg = tiny_config(1);
    const Dataset data = simulate_dataset(cfg, 77);
    const LikelihoodModel model = make_model(cfg, data);
    const ParameterSpace& space = model.space();
    const Eigen::VectorXd theta = cfg.truth_vector(1);
    const Eigen::VectorXd u = space.to_unconstrained(theta);

    const auto ev = model.evaluate(u, 10, 0.7);
    CHECK(ev.log_prior == doctest::Approx(space.log_prior_unconstrained(u)).epsilon(1e-13));
    double hist = 0.0;
    for (int d = 1; d <= 10; ++d) hist += model.batch_loglik(theta, d);
    CHECK(ev.history == doctest::Approx(hist).epsilon(1e-9));
    CHECK(ev.batch == doctest::Approx(model.batch_loglik(theta, 11)).epsilon(1e-9));
    CHECK(ev.target ==
          doctest::Approx(ev.log_prior + ev.history + 0.7 * ev.batch).epsilon(1e-12));

    // delta = 0 never evaluates the next batch
    const auto ev0 = model.evaluate(u, 10, 0.0);
    CHECK(ev0.batch == 0.0);
    CHECK(ev0.target == doctest::Approx(ev0.log_prior + ev0.history).epsilon(1e-12));
    CHECK(ev0.history == doctest::Approx(ev.history).epsilon(1e-12));

    // day zero with no batch is the prior alone
    const auto evp = model.evaluate(u, 0, 0.0);
    CHECK(evp.history == 0.0);
    CHECK(evp.target == doctest::Approx(evp.log_prior).epsilon(1e-15));

    CHECK_THROWS_AS(model.evaluate(u, -1, 0.0), config_error);
    CHECK_THROWS_AS(model.evaluate(u, 41, 0.0), config_error);
    CHECK_THROWS_AS(model.evaluate(u, 10, 1.5), config_error);
    CHECK_THROWS_AS(model.evaluate(u, 40, 0.5), config_error);  // batch beyond the data
}

TEST_CASE("parameter regions that break the discretization carry zero mass") {
    const AppConfig cfg = tiny_config(1);
    const LikelihoodModel model = make_model(cfg, simulate_dataset(cfg, 78));
    const ParameterSpace& space = model.space();

    // d_I = 0.5 day makes the infectious-stage outflow exceed occupancy
    Eigen::VectorXd theta = cfg.truth_vector(1);
    theta[space.layout().index_of("d_I")] = 0.5;
    auto ev = model.evaluate(space.to_unconstrained(theta), 5, 0.5);
    CHECK(std::isfinite(ev.log_prior));
    CHECK(ev.history == -kInf);
    CHECK(ev.batch == -kInf);
    CHECK(ev.target == -kInf);

    // seeding more infections than people is invalid, not an exception
    theta = cfg.truth_vector(1);
    theta[space.layout().index_of("nu")] = 0.5;
    ev = model.evaluate(space.to_unconstrained(theta), 5, 0.5);
    CHECK(ev.target == -kInf);
}

TEST_CASE("model construction rejects inconsistent inputs") {
    const AppConfig cfg = tiny_config(1);
    // background layout paired with the confirmed-case scenario
    CHECK_THROWS_AS(LikelihoodModel(cfg.model, cfg.observation, cfg.make_space(2),
                                    Dataset::empty(3, 0), 1),
                    config_error);
    // age-group mismatch between data and schedule
    CHECK_THROWS_AS(make_model(cfg, Dataset::empty(2, 10)), config_error);
    // data past the horizon
    CHECK_THROWS_AS(make_model(cfg, Dataset::empty(3, 50)), config_error);
    CHECK_THROWS_AS(LikelihoodModel(cfg.model, cfg.observation, cfg.make_space(1),
                                    Dataset::empty(3, 0), 3),
                    config_error);
}

TEST_CASE("synthetic data generator is seed-deterministic") {
    const AppConfig cfg = tiny_config(1);
    const Dataset a = simulate_dataset(cfg, 42);
    const Dataset b = simulate_dataset(cfg, 42);
    const Dataset c = simulate_dataset(cfg, 43);
    CHECK(same_dataset(a, b));
    CHECK_FALSE(same_dataset(a, c));

    CHECK(a.n_ages == 3);
    CHECK(a.n_days() == 40);
    for (int d = 1; d <= 40; ++d)
        for (int age = 0; age < 3; ++age) {
            CHECK(a.day(d).confirmed[static_cast<std::size_t>(age)] >= 0);
            CHECK(a.day(d).gp[static_cast<std::size_t>(age)] == -1);
            CHECK(a.day(d).viro_n[static_cast<std::size_t>(age)] == 0);
        }
    // serology appears only on its calendar day
    for (int d = 1; d <= 40; ++d)
        for (int age = 0; age < 3; ++age) {
            const long n = a.day(d).sero_n[static_cast<std::size_t>(age)];
            CHECK(n == (d == 25 ? 500 : 0));
            if (n > 0) CHECK(a.day(d).sero_pos[static_cast<std::size_t>(age)] <= n);
        }
}

TEST_CASE("scenario 2 draws GP, virology, and background streams") {
    const AppConfig cfg = tiny_config(2);
    const Dataset d = simulate_dataset(cfg, 99);

    const auto days = truth_expectations(cfg, 40);
    for (int t = 1; t <= 40; ++t) {
        const DayExpectation& e = days[static_cast<std::size_t>(t - 1)];
        for (int a = 0; a < 3; ++a) {
            // regression net: the background is a daily consultation level,
            // around e^4.5..e^6, not a double-exponentiated blowup
            CHECK(e.background[a] > 10.0);
            CHECK(e.background[a] < 1e4);
            CHECK(d.day(t).confirmed[static_cast<std::size_t>(a)] == -1);
            CHECK(d.day(t).gp[static_cast<std::size_t>(a)] >= 0);
            CHECK(d.day(t).gp[static_cast<std::size_t>(a)] < 100000);
        }
        const bool swab_day = t >= 7 && (t - 7) % 7 == 0;
        for (int a = 0; a < 3; ++a) {
            CHECK(d.day(t).viro_n[static_cast<std::size_t>(a)] == (swab_day ? 50 : 0));
            if (swab_day)
                CHECK(d.day(t).viro_pos[static_cast<std::size_t>(a)] <=
                      d.day(t).viro_n[static_cast<std::size_t>(a)]);
        }
    }
}

TEST_CASE("synthetic draws agree with their expectations in the mean") {
    const AppConfig cfg = tiny_config(1);
    const auto days = truth_expectations(cfg, 40);
    const int n_rep = 400;

    double sum30 = 0.0, sum12 = 0.0;
    Eigen::VectorXd sero_sum = Eigen::VectorXd::Zero(3);
    for (int r = 0; r < n_rep; ++r) {
        const Dataset d = simulate_dataset(cfg, 1000 + static_cast<std::uint64_t>(r));
        sum30 += static_cast<double>(d.day(30).confirmed[1]);
        sum12 += static_cast<double>(d.day(12).confirmed[0]);
        for (int a = 0; a < 3; ++a)
            sero_sum[a] += static_cast<double>(d.day(25).sero_pos[static_cast<std::size_t>(a)]);
    }

    // day 30 is post-intervention (eta2), day 12 pre (eta1)
    const double mu30 = days[29].mu_signal[1];
    const double se30 = std::sqrt(mu30 * (2.15 + 1.0) / n_rep);
    CHECK(std::fabs(sum30 / n_rep - mu30) < 4.5 * se30);
    const double mu12 = days[11].mu_signal[0];
    const double se12 = std::sqrt(mu12 * (3.0 + 1.0) / n_rep);
    CHECK(std::fabs(sum12 / n_rep - mu12) < 4.5 * se12 + 0.05);

    for (int a = 0; a < 3; ++a) {
        const double p = days[24].sero_prob[a];
        const double se = std::sqrt(500.0 * p * (1.0 - p) / n_rep);
        CHECK(std::fabs(sero_sum[a] / n_rep - 500.0 * p) < 4.5 * se + 0.05);
    }
}
