#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "epismc/config.hpp"
#include "epismc/data.hpp"

using namespace epismc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path p = fs::temp_directory_path() / "epismc_unit_scratch";
    fs::create_directories(p);
    return p;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream out(p);
    out << text;
    return p;
}

const char* kFullConfig = R"({
  "scenario": 1,
  "model": {
    "dt": 0.5,
    "horizon_days": 8,
    "populations": [10340000, 21890000, 22770000],
    "contact_matrix": [[7.774468, 3.731915, 1.517021],
                       [2.054020, 6.751759, 2.385427],
                       [0.948406, 2.728986, 3.737681]],
    "reference_multiplier": 0.403,
    "multiplier_windows": [
      {"start_day": 0, "end_day": 5, "multiplier": 1},
      {"start_day": 5, "end_day": 8, "multiplier": 2}
    ]
  },
  "observation": {
    "intervention_day": 6, "n_child_groups": 1,
    "delay_mean": 4.0, "delay_var": 6.0, "l_max": 30,
    "background_knots": [7, 8, 9, 10]
  },
  "calendar": {
    "serology_days": [25, 50], "serology_size": 250,
    "virology_start": 3, "virology_period": 5, "virology_sizes": [40, 60]
  },
  "smc": {"particles": 150, "epsilon_L": 0.4, "r_A_star": 0.2,
          "kernel": "gibbs_block", "mode": "discrete", "max_mh_iters": 12, "gamma": 1.1},
  "mcmc": {"iterations": 3000, "burn_in": 600, "thin": 5, "target_accept": 0.3},
  "pipeline": {"landmark_days": [10, 25], "kl_days": [30], "kl_replicates": 2,
               "forecast_horizon": 5, "kl_exclude": ["bB*"]},
  "truth": {
    "psi": 0.133, "nu": -13.9, "d_I": 3.47,
    "m": [0.403, 0.495],
    "phi": 0.278, "p": [0.278, 0.162, 0.137, 0.441],
    "eta": [3.0, 2.15]
  },
  "priors": {
    "psi": {"family": "lognormal", "a": -2.0, "b": 0.5},
    "m": {"family": "lognormal", "a": -0.7, "b": 0.3}
  }
})";

}  // namespace

TEST_CASE("dataset round-trips through csv") {
    Dataset d = Dataset::empty(2, 4);
    CHECK(d.n_days() == 4);
    CHECK(d.day(1).confirmed[0] == -1);  // everything starts missing
    CHECK(d.day(1).empty());

    d.day(1).confirmed[0] = 12;
    d.day(2).gp[1] = 7;
    d.day(2).confirmed[1] = 0;  // an observed zero is data, not a gap
    d.day(3).viro_pos[0] = 5;
    d.day(3).viro_n[0] = 40;
    d.day(4).sero_pos[1] = 3;
    d.day(4).sero_n[1] = 500;

    const fs::path p = scratch_dir() / "roundtrip.csv";
    d.write_csv(p.string());
    const Dataset r = Dataset::read_csv(p.string());

    CHECK(r.n_ages == 2);
    CHECK(r.n_days() == 4);
    CHECK(r.day(1).confirmed[0] == 12);
    CHECK(r.day(1).confirmed[1] == -1);
    CHECK(r.day(2).gp[1] == 7);
    CHECK(r.day(2).confirmed[1] == 0);
    CHECK(r.day(2).gp[0] == -1);
    CHECK(r.day(3).viro_pos[0] == 5);
    CHECK(r.day(3).viro_n[0] == 40);
    CHECK(r.day(3).viro_n[1] == 0);
    CHECK(r.day(4).sero_pos[1] == 3);
    CHECK(r.day(4).sero_n[1] == 500);
    CHECK_FALSE(r.day(2).empty());

    CHECK_THROWS_AS(d.day(0), data_error);
    CHECK_THROWS_AS(d.day(5), data_error);
}

TEST_CASE("csv loader rejects malformed surveillance files") {
    const std::string head = "day,age_group,stream,count,denominator\n";
    CHECK_THROWS_AS(Dataset::read_csv((scratch_dir() / "no_such.csv").string()), data_error);
    CHECK_THROWS_AS(Dataset::read_csv(write_file("empty.csv", "").string()), data_error);
    CHECK_THROWS_AS(Dataset::read_csv(write_file("short.csv", head + "1,1,confirmed\n").string()),
                    data_error);
    CHECK_THROWS_AS(
        Dataset::read_csv(write_file("alpha.csv", head + "1,x,confirmed,5,\n").string()),
        data_error);
    CHECK_THROWS_AS(Dataset::read_csv(write_file("day0.csv", head + "0,1,confirmed,5,\n").string()),
                    data_error);
    CHECK_THROWS_AS(Dataset::read_csv(write_file("neg.csv", head + "1,1,confirmed,-4,\n").string()),
                    data_error);
    CHECK_THROWS_AS(
        Dataset::read_csv(write_file("nodenom.csv", head + "1,1,virology,5,\n").string()),
        data_error);
    CHECK_THROWS_AS(
        Dataset::read_csv(write_file("excess.csv", head + "1,1,serology,9,5\n").string()),
        data_error);
    CHECK_THROWS_AS(
        Dataset::read_csv(write_file("stream.csv", head + "1,1,admissions,5,\n").string()),
        data_error);

    // blank lines are tolerated, missing (day, age) combinations stay missing
    const Dataset ok =
        Dataset::read_csv(write_file("sparse.csv", head + "2,2,gp,9,\n\n1,1,virology,2,30\n").string());
    CHECK(ok.n_ages == 2);
    CHECK(ok.n_days() == 2);
    CHECK(ok.day(2).gp[1] == 9);
    CHECK(ok.day(1).viro_n[0] == 30);
    CHECK(ok.day(1).gp[0] == -1);
}

TEST_CASE("config loader populates every section") {
    const fs::path p = write_file("full.json", kFullConfig);
    const AppConfig cfg = AppConfig::load(p.string());

    CHECK(cfg.scenario == 1);
    CHECK(cfg.model.horizon_days == 8);
    CHECK(cfg.model.populations.size() == 3);
    CHECK(cfg.model.contact_matrix(1, 2) == doctest::Approx(2.385427));
    CHECK(cfg.model.n_multipliers == 2);
    CHECK(cfg.source_text.find("multiplier_windows") != std::string::npos);

    // window days become step ranges on the half-day grid
    const ContactSchedule sched = cfg.model.make_schedule();
    CHECK(sched.n_steps() == 16);
    CHECK(sched.steps_per_day() == 2);
    CHECK(sched.multiplier_index_at(9) == 0);
    CHECK(sched.multiplier_index_at(10) == 1);

    CHECK(cfg.observation.intervention_day == 6);
    CHECK(cfg.observation.n_child_groups == 1);
    CHECK(cfg.observation.zeta == 4.0);
    CHECK(cfg.observation.sigma2 == 6.0);
    CHECK(cfg.observation.l_max == 30);
    CHECK(cfg.observation.background_knots == std::vector<int>{7, 8, 9, 10});

    CHECK(cfg.calendar.serology_days == std::vector<int>{25, 50});
    CHECK(cfg.calendar.serology_size == 250);
    CHECK(cfg.calendar.virology_start == 3);
    CHECK(cfg.calendar.virology_period == 5);
    CHECK(cfg.calendar.virology_sizes == std::vector<long>{40, 60});

    CHECK(cfg.smc.particles == 150);
    CHECK(cfg.smc.epsilon_L == 0.4);
    CHECK(cfg.smc.r_A_star == 0.2);
    CHECK(cfg.smc.kernel == "gibbs_block");
    CHECK(cfg.smc.mode == "discrete");
    CHECK(cfg.smc.max_mh_iters == 12);
    CHECK(cfg.smc.gamma == 1.1);

    CHECK(cfg.mcmc.iterations == 3000);
    CHECK(cfg.mcmc.burn_in == 600);
    CHECK(cfg.mcmc.thin == 5);
    CHECK(cfg.mcmc.target_accept == 0.3);

    CHECK(cfg.pipeline.landmark_days == std::vector<int>{10, 25});
    CHECK(cfg.pipeline.kl_days == std::vector<int>{30});
    CHECK(cfg.pipeline.kl_replicates == 2);
    CHECK(cfg.pipeline.forecast_horizon == 5);
    CHECK(cfg.pipeline.kl_exclude == std::vector<std::string>{"bB*"});

    // array truth entries expand to indexed component names
    CHECK(cfg.truth.at("psi") == 0.133);
    CHECK(cfg.truth.at("m2") == 0.495);
    CHECK(cfg.truth.at("p4") == 0.441);
    CHECK(cfg.truth.at("eta2") == 2.15);
}

TEST_CASE("config assembles parameter space, truth, and overridden priors") {
    const AppConfig cfg = AppConfig::load(write_file("full2.json", kFullConfig).string());
    const ParameterSpace space = cfg.make_space(1);
    const ParameterLayout& lay = space.layout();
    CHECK(lay.dim() == 12);  // psi nu d_I m1 m2 phi p1..p4 eta1 eta2 (no background)

    // per-component override wins, then block override, then the default
    const PriorSpec& psi = space.prior(lay.index_of("psi"));
    CHECK(psi.family == PriorSpec::Family::lognormal);
    CHECK(psi.a == doctest::Approx(-2.0));
    CHECK(psi.b == doctest::Approx(0.5));
    const PriorSpec& m2 = space.prior(lay.index_of("m2"));
    CHECK(m2.a == doctest::Approx(-0.7));
    CHECK(m2.b == doctest::Approx(0.3));
    const PriorSpec& nu = space.prior(lay.index_of("nu"));
    CHECK(nu.family == PriorSpec::Family::normal);
    CHECK(nu.a == doctest::Approx(-13.0));

    const Eigen::VectorXd theta = cfg.truth_vector(1);
    CHECK(theta.size() == 12);
    CHECK(theta[lay.index_of("psi")] == doctest::Approx(0.133));
    CHECK(theta[lay.index_of("m2")] == doctest::Approx(0.495));
    CHECK(theta[lay.index_of("eta1")] == doctest::Approx(3.0));

    const TransmissionParams tp = cfg.transmission_truth();
    CHECK(tp.psi == doctest::Approx(0.133));
    CHECK(tp.d_L == 2.0);
    CHECK(tp.m.size() == 2);
    CHECK(tp.m[1] == doctest::Approx(0.495));

    const ObservationParams op = cfg.observation_truth(1);
    CHECK(op.phi == doctest::Approx(0.278));
    CHECK(op.p[3] == doctest::Approx(0.441));
    CHECK(op.eta2 == doctest::Approx(2.15));
    CHECK(op.beta_B.size() == 0);
}

TEST_CASE("default priors by component name") {
    CHECK(default_prior("psi").family == PriorSpec::Family::lognormal);
    CHECK(default_prior("psi").a == doctest::Approx(std::log(0.15)));
    CHECK(default_prior("m3").b == doctest::Approx(0.75));
    CHECK(default_prior("phi").family == PriorSpec::Family::logitnormal);
    CHECK(default_prior("p2").b == doctest::Approx(1.5));
    CHECK(default_prior("eta2").family == PriorSpec::Family::gamma);
    CHECK(default_prior("eta2").a == doctest::Approx(0.01));
    CHECK(default_prior("bB1").a == doctest::Approx(5.0));
    CHECK(default_prior("bB1").b == doctest::Approx(3.0));
    CHECK(default_prior("bB7").a == doctest::Approx(0.0));
    CHECK(default_prior("bB7").b == doctest::Approx(2.0));
    CHECK_THROWS_AS(default_prior("zeta"), config_error);
}

TEST_CASE("config loader rejects broken inputs") {
    CHECK_THROWS_AS(AppConfig::load((scratch_dir() / "absent.json").string()), config_error);
    CHECK_THROWS_AS(AppConfig::load(write_file("bad1.json", "{not json").string()), config_error);
    CHECK_THROWS_AS(
        AppConfig::load(write_file("bad2.json", R"({"model": {"dt": 0.5}})").string()),
        config_error);  // horizon and friends missing
    CHECK_THROWS_AS(AppConfig::load(write_file("bad3.json", R"({
      "scenario": 3,
      "model": {"horizon_days": 5, "populations": [1000],
                "contact_matrix": [[1.0]],
                "multiplier_windows": [{"start_day":0,"end_day":5,"multiplier":1}]}
    })").string()),
                    config_error);
    CHECK_THROWS_AS(AppConfig::load(write_file("bad4.json", R"({
      "model": {"horizon_days": 5, "populations": [1000, 2000],
                "contact_matrix": [[1.0, 2.0],[0.5]],
                "multiplier_windows": [{"start_day":0,"end_day":5,"multiplier":1}]}
    })").string()),
                    config_error);  // ragged matrix
    CHECK_THROWS_AS(AppConfig::load(write_file("bad5.json", R"({
      "model": {"horizon_days": 5, "populations": [1000],
                "contact_matrix": [[1.0]],
                "multiplier_windows": [{"start_day":0,"end_day":5,"multiplier":1}]},
      "priors": {"psi": {"family": "beta", "a": 1, "b": 1}}
    })").string()),
                    config_error);  // unknown family
    CHECK_THROWS_AS(AppConfig::load(write_file("bad6.json", R"({
      "model": {"horizon_days": 5, "populations": [1000],
                "contact_matrix": [[1.0]],
                "multiplier_windows": [{"start_day":0,"end_day":5,"multiplier":1}]},
      "priors": {"psi": {"family": "normal", "a": 1, "b": 0}}
    })").string()),
                    config_error);  // nonpositive scale

    // truth lookups fail loudly when a component is missing
    const AppConfig cfg = AppConfig::load(write_file("bad7.json", R"({
      "model": {"horizon_days": 5, "populations": [1000],
                "contact_matrix": [[1.0]],
                "multiplier_windows": [{"start_day":0,"end_day":5,"multiplier":1}]},
      "truth": {"psi": 0.1}
    })").string());
    CHECK_THROWS_AS(cfg.truth_vector(1), config_error);
}
